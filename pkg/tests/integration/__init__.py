"""Integration tests for the cavity pipeline.

This package contains end-to-end tests that verify components work together
correctly on real files.
"""
