"""Test package for Shape Control."""
