"""Deterministic mergeable frequency sketches whose state is a coset of Z^n/M."""

__version__ = "0.1.0"
