"""
Test suite for the quantum-graphs toolkit
"""
