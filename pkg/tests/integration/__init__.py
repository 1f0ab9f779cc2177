"""Integration tests for vche2d."""
