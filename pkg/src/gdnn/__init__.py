"""Exact toolkit for densely connected G-invariant neural networks."""

from gdnn import admissibility, equivariant_basis, group_core, model, reps, train

__all__ = ["admissibility", "equivariant_basis", "group_core", "model", "reps", "train"]
__version__ = "0.1.0"
