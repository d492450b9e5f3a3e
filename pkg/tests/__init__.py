"""
Test suite for rdelab.
"""
