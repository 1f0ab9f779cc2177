"""Performance tests for vche2d."""
