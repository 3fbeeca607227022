"""Dense matrix primitives and k-rank significant-basis extraction.

Matrices are plain 2-D ``numpy.ndarray`` values in float64. The SVD is
backed by LAPACK (``gesdd`` through :func:`numpy.linalg.svd`); everything
built on top of it only relies on the invariants checked here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NumericalError",
    "ThresholdMode",
    "SvdResult",
    "SignificantBasis",
    "as_matrix",
    "svd",
    "k_rank_basis",
    "energy_rank",
    "frobenius_norm_sq",
    "matmul",
    "transpose",
    "orthonormality_defect",
    "principal_angles",
]


class NumericalError(ArithmeticError):
    """Raised when a decomposition fails to converge or produces garbage."""


class ThresholdMode(str, enum.Enum):
    """How the retained rank is picked from the cumulative energy profile.

    ``ENERGY_AT_LEAST``
        smallest ``k`` whose leading singular values hold at least
        ``gamma_th`` of the squared Frobenius norm.
    ``ALGORITHM1_LITERAL``
        number of prefix positions whose cumulative ratio is strictly below
        ``gamma_th`` (the pseudocode form, one short of the guarantee at the
        boundary).
    """

    ENERGY_AT_LEAST = "energy_at_least"
    ALGORITHM1_LITERAL = "algorithm1_literal"


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate ``m`` as a finite 2-D float64 array (copy only if needed)."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or Inf")
    return a


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    def reconstruct(self) -> np.ndarray:
        r = self.s.shape[0]
        return (self.u[:, :r] * self.s) @ self.vt[:r, :]


@dataclass(frozen=True)
class SignificantBasis:
    """Column-orthonormal ``d x k`` basis plus the threshold that built it.

    ``singular_values`` holds the ``k`` retained singular values, kept so
    callers can rescale the basis when it is carried into another SVD.
    """

    basis: np.ndarray
    gamma_th: float
    retained_energy: float
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def d(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    @property
    def is_empty(self) -> bool:
        return self.k == 0

    @classmethod
    def empty(cls, d: int, gamma_th: float = 0.0) -> "SignificantBasis":
        return cls(np.zeros((d, 0)), gamma_th, 0.0, np.zeros(0))

    @classmethod
    def from_columns(cls, cols, gamma_th: float = 1.0) -> "SignificantBasis":
        """Wrap an already orthonormal column set (e.g. ``I_d``) as a basis."""
        b = as_matrix(cols, "basis")
        if orthonormality_defect(b) > 1e-8:
            raise ValueError("columns are not orthonormal")
        return cls(b, gamma_th, 1.0, np.ones(b.shape[1]))


def svd(m, full_matrices: bool = False) -> SvdResult:
    """Singular value decomposition ``m = u @ diag(s) @ vt``.

    Singular values come back in descending order. Signs of singular vector
    pairs are whatever LAPACK produces, which is deterministic for a given
    input on a given build.
    """
    a = as_matrix(m)
    if a.size == 0:
        raise ValueError("svd of an empty matrix")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=full_matrices)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge for {a.shape} matrix") from exc
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(s)) and np.all(np.isfinite(vt))):
        raise NumericalError("SVD produced non-finite factors")
    return SvdResult(u, s, vt)


def _check_gamma(gamma_th: float) -> float:
    g = float(gamma_th)
    if not 0.0 <= g <= 1.0:
        raise ValueError(f"gamma_th must lie in [0, 1], got {gamma_th!r}")
    return g


def energy_rank(s: np.ndarray, gamma_th: float, mode=ThresholdMode.ENERGY_AT_LEAST,
                shape: tuple[int, int] | None = None) -> tuple[int, float]:
    """Pick the retained rank from singular values ``s`` (descending).

    Returns ``(k, retained_energy)``. In ``ENERGY_AT_LEAST`` mode singular
    values below the usual numerical-rank cutoff ``max(shape) * eps * s[0]``
    are treated as exact zeros, so ``gamma_th = 1`` yields the numerical rank
    instead of picking up rounding noise.
    """
    gamma_th = _check_gamma(gamma_th)
    mode = ThresholdMode(mode)
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0 or s[0] == 0.0:
        return 0, 0.0
    energy = s * s
    if mode is ThresholdMode.ALGORITHM1_LITERAL:
        ratio = np.cumsum(energy / energy.sum())
        k = int(np.count_nonzero(ratio < gamma_th))
        return k, float(ratio[k - 1]) if k else 0.0

    big = max(shape) if shape is not None else s.size
    cutoff = big * np.finfo(np.float64).eps * s[0]
    energy = energy[: int(np.count_nonzero(s > cutoff))]
    cum = np.cumsum(energy)
    # dividing by the last element makes the final ratio exactly 1.0
    ratio = np.concatenate(([0.0], cum / cum[-1]))
    k = int(np.searchsorted(ratio, gamma_th, side="left"))
    return k, float(ratio[k])


def k_rank_basis(m, gamma_th: float, mode=ThresholdMode.ENERGY_AT_LEAST) -> SignificantBasis:
    """Leading left singular vectors of ``m`` holding ``gamma_th`` of its energy.

    A zero matrix gives an empty ``d x 0`` basis.
    """
    a = as_matrix(m)
    gamma_th = _check_gamma(gamma_th)
    d = a.shape[0]
    if a.shape[1] == 0 or not np.any(a):
        return SignificantBasis.empty(d, gamma_th)
    res = svd(a)
    k, retained = energy_rank(res.s, gamma_th, mode, a.shape)
    return SignificantBasis(res.u[:, :k].copy(), gamma_th, retained, res.s[:k].copy())


def frobenius_norm_sq(m) -> float:
    a = as_matrix(m)
    return float(np.einsum("ij,ij->", a, a))


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions disagree: {a.shape} @ {b.shape}")
    return a @ b


def transpose(m) -> np.ndarray:
    return as_matrix(m).T.copy()


def orthonormality_defect(u) -> float:
    """``max |U^T U - I|``; zero for an empty column set."""
    a = as_matrix(u)
    if a.shape[1] == 0:
        return 0.0
    g = a.T @ a
    return float(np.max(np.abs(g - np.eye(g.shape[0]))))


def principal_angles(a, b) -> np.ndarray:
    """Principal angles (radians, ascending) between ``span(a)`` and ``span(b)``.

    Both inputs must have orthonormal columns. Uses the sine-based formula
    so small angles are resolved accurately; returns ``min(ka, kb)`` angles.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[0] != b.shape[0]:
        raise ValueError("bases live in different dimensions")
    k = min(a.shape[1], b.shape[1])
    if k == 0:
        return np.zeros(0)
    if a.shape[1] < b.shape[1]:
        a, b = b, a
    # b has the smaller column count; residual of b against span(a)
    resid = b - a @ (a.T @ b)
    sines = np.linalg.svd(resid, compute_uv=False)
    return np.sort(np.arcsin(np.clip(sines, 0.0, 1.0)))
