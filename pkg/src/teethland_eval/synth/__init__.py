"""Deterministic synthetic arches and team predictions."""
