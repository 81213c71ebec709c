"""Test package utilities for backend-aware fixtures."""
