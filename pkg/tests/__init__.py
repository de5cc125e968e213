"""Tests package for consensus-sim."""
