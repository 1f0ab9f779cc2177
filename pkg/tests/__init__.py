"""
vche2d Test Suite
"""
