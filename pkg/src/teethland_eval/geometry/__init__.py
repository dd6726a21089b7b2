"""Mesh handling and the heuristic baseline detector."""
