"""Entropy bounds on invariant-measure perturbations caused by drifting noise."""

__version__ = "0.1.0"
