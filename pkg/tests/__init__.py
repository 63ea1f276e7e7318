"""Test suite for framesynth."""
