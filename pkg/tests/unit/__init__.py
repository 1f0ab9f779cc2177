"""
vche2d Unit Tests
"""
