"""Orthogonal gradient projection against a significant basis."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import SignificantBasis, as_matrix

__all__ = [
    "ProjectionState",
    "project_orthogonal",
    "interference",
    "apply_update",
    "INTERFERENCE_EPS",
]

INTERFERENCE_EPS = 1e-30


@dataclass
class ProjectionState:
    """Per-layer bases (keyed by layer index) and the SGD learning rate."""

    per_layer_bases: dict[int, SignificantBasis] = field(default_factory=dict)
    eta: float = 0.01

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")

    def basis_for(self, layer: int) -> SignificantBasis | None:
        return self.per_layer_bases.get(layer)

    def with_basis(self, layer: int, basis: SignificantBasis) -> "ProjectionState":
        bases = dict(self.per_layer_bases)
        bases[layer] = basis
        return ProjectionState(bases, self.eta)


def project_orthogonal(grad, basis: SignificantBasis | None) -> np.ndarray:
    """Remove the component of ``grad`` lying in ``span(basis)``: ``G - U U^T G``.

    An empty (or missing) basis returns ``grad`` itself, untouched.
    """
    g = as_matrix(grad, "grad")
    if basis is None or basis.is_empty:
        return g
    if basis.d != g.shape[0]:
        raise ValueError(f"basis has {basis.d} rows, gradient has {g.shape[0]}")
    u = basis.basis
    return g - u @ (u.T @ g)


def interference(x_pre, grad_orth) -> float:
    """Normalized ``|X G|_F / (|X|_F |G|_F + eps)``; zero means no output drift."""
    x = as_matrix(x_pre, "x_pre")
    g = as_matrix(grad_orth, "grad_orth")
    if x.shape[1] != g.shape[0]:
        raise ValueError(f"inner dimensions disagree: {x.shape} @ {g.shape}")
    num = np.linalg.norm(x @ g)
    return float(num / (np.linalg.norm(x) * np.linalg.norm(g) + INTERFERENCE_EPS))


def apply_update(weights, grad, basis: SignificantBasis | None, eta: float,
                 project: bool = True) -> np.ndarray:
    """One plain SGD step ``W - eta * G`` with optional projection of ``G``."""
    w = as_matrix(weights, "weights")
    g = as_matrix(grad, "grad")
    if w.shape != g.shape:
        raise ValueError(f"weights {w.shape} and grad {g.shape} differ in shape")
    if project:
        g = project_orthogonal(g, basis)
    return w - eta * g
