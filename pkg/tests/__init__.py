"""Test suite for SPARCS."""
