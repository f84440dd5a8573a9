"""Frontier-based object-goal navigation."""
