"""Directional dynamics laboratory for linear cellular automata."""
