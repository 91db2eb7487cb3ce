"""CLI package for meshvr."""
