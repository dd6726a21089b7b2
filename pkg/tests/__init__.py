"""Tests for the Teethland evaluation toolkit."""
