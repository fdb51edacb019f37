"""Tests for the agrotrack package."""
