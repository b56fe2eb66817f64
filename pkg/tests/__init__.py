"""Test package for meshrollout."""
