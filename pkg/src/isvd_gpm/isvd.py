"""Iterative significant-representation computation over a stream of blocks.

The running basis is concatenated with each incoming ``d x m`` block and
re-truncated by :func:`k_rank_basis`, so only ``d x (k + m)`` values are ever
decomposed at once instead of the full ``d x Lambda`` matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional

import numpy as np

from .linalg import (
    SignificantBasis,
    ThresholdMode,
    as_matrix,
    k_rank_basis,
)

__all__ = [
    "IsvdState",
    "MemoryEstimate",
    "init_stream",
    "absorb_block",
    "finalize",
    "significant_basis_direct",
    "isvd",
    "stream",
    "split_columns",
    "residual_spectrum",
    "estimate_memory",
    "theoretical_saving_rate",
    "working_set",
    "singular_value_scale",
    "RESIDUAL_EPS",
]

RESIDUAL_EPS = 1e-12

#: ``scale(basis, block) -> column weights`` applied to the carried basis
#: before concatenation with ``block``.
BasisScale = Callable[[SignificantBasis, np.ndarray], np.ndarray]


def singular_value_scale(basis: SignificantBasis, block: np.ndarray) -> np.ndarray:
    """Carry the retained singular values instead of unit columns.

    With this hook the concatenation ``[U S | block]`` has the same Gram
    matrix as ``[previous blocks | block]`` up to the truncated tail.
    """
    return basis.singular_values


@dataclass(frozen=True)
class IsvdState:
    dim_d: int
    gamma_th: float
    basis: SignificantBasis
    blocks_absorbed: int = 0
    peak_aux_scalars: int = 0
    # widest basis ever carried into a concatenation: the k of the m + k width
    max_k: int = 0
    mode: ThresholdMode = ThresholdMode.ENERGY_AT_LEAST
    scale: Optional[BasisScale] = None


@dataclass(frozen=True)
class MemoryEstimate:
    svd_scalars: int
    isvd_scalars: int
    saving_rate: float


def init_stream(dim_d: int, gamma_th: float, seed_basis: SignificantBasis | None = None,
                mode=ThresholdMode.ENERGY_AT_LEAST,
                scale: BasisScale | None = None) -> IsvdState:
    """Start a stream, optionally seeded with a previous task's basis."""
    if dim_d <= 0:
        raise ValueError("dim_d must be positive")
    if not 0.0 <= gamma_th <= 1.0:
        raise ValueError(f"gamma_th must lie in [0, 1], got {gamma_th!r}")
    if seed_basis is None:
        seed_basis = SignificantBasis.empty(dim_d, gamma_th)
    elif seed_basis.d != dim_d:
        raise ValueError(f"seed basis has {seed_basis.d} rows, stream has dim_d={dim_d}")
    return IsvdState(dim_d, float(gamma_th), seed_basis, 0, 0, seed_basis.k,
                     ThresholdMode(mode), scale)


def working_set(d: int, cols: int) -> int:
    """Scalars live while decomposing a ``d x cols`` matrix with economy SVD.

    Counts the input plus the ``U``, ``s`` and ``Vt`` factors actually
    allocated; this is what ``peak_aux_scalars`` records.
    """
    r = min(d, cols)
    return d * cols + d * r + r + r * cols


def absorb_block(state: IsvdState, block) -> IsvdState:
    """Fold one ``d x m`` block into the running basis and return a new state."""
    b = as_matrix(block, "block")
    if b.shape[0] != state.dim_d:
        raise ValueError(f"block has {b.shape[0]} rows, stream has dim_d={state.dim_d}")
    if b.shape[1] == 0 or not np.any(b):
        return replace(state, blocks_absorbed=state.blocks_absorbed + 1)

    carried = state.basis.basis
    if state.scale is not None and not state.basis.is_empty:
        carried = carried * np.asarray(state.scale(state.basis, b), dtype=np.float64)
    joint = np.hstack([carried, b]) if carried.shape[1] else b
    basis = k_rank_basis(joint, state.gamma_th, state.mode)

    aux = working_set(state.dim_d, joint.shape[1])
    return replace(
        state,
        basis=basis,
        blocks_absorbed=state.blocks_absorbed + 1,
        peak_aux_scalars=max(state.peak_aux_scalars, aux),
        max_k=max(state.max_k, state.basis.k),
    )


def finalize(state: IsvdState) -> SignificantBasis:
    return state.basis


def split_columns(m: np.ndarray, n_blocks: int) -> list[np.ndarray]:
    """Split columns into ``n_blocks`` pieces of width ``ceil(L / n)``.

    The last piece is narrower when the width does not divide evenly; nothing
    is padded.
    """
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    width = math.ceil(m.shape[1] / n_blocks)
    return [m[:, i:i + width] for i in range(0, m.shape[1], width)]


def isvd(m, gamma_th: float, n_blocks: int, seed_basis: SignificantBasis | None = None,
         **kwargs) -> IsvdState:
    """Stream ``m`` through :func:`absorb_block` in ``n_blocks`` column blocks."""
    a = as_matrix(m)
    state = init_stream(a.shape[0], gamma_th, seed_basis, **kwargs)
    for block in split_columns(a, n_blocks):
        state = absorb_block(state, block)
    return state


def stream(blocks: Iterable, dim_d: int, gamma_th: float, **kwargs) -> IsvdState:
    state = init_stream(dim_d, gamma_th, **kwargs)
    for block in blocks:
        state = absorb_block(state, block)
    return state


def significant_basis_direct(m, gamma_th: float,
                             mode=ThresholdMode.ENERGY_AT_LEAST) -> SignificantBasis:
    """Reference basis from one SVD of the whole matrix."""
    return k_rank_basis(m, gamma_th, mode)


def residual_spectrum(m, basis: SignificantBasis) -> np.ndarray:
    """Relative residual ``|c - U U^T c| / max(|c|, eps)`` for every column ``c``."""
    a = as_matrix(m)
    if basis.d != a.shape[0]:
        raise ValueError(f"basis has {basis.d} rows, matrix has {a.shape[0]}")
    u = basis.basis
    resid = a - u @ (u.T @ a) if u.shape[1] else a
    return np.linalg.norm(resid, axis=0) / np.maximum(np.linalg.norm(a, axis=0), RESIDUAL_EPS)


def estimate_memory(d: int, lambda_total: int, n_blocks: int, k: int) -> MemoryEstimate:
    """Scalar counts of the SVD and iSVD working sets.

    SVD holds ``d L + d^2 + L^2 + min(d, L)``; each iSVD step holds
    ``d (m+k) + d^2 + (m+k)^2 + min(d, m+k)`` with ``m = ceil(L / n)``.
    """
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    if lambda_total < n_blocks:
        raise ValueError("lambda_total must be >= n_blocks")
    if not 0 <= k <= d:
        raise ValueError("k must lie in [0, d]")
    m = -(-lambda_total // n_blocks)
    w = m + k
    svd_scalars = d * lambda_total + d * d + lambda_total ** 2 + min(d, lambda_total)
    isvd_scalars = d * w + d * d + w * w + min(d, w)
    rate = 1.0 - isvd_scalars / svd_scalars if svd_scalars > 0 else 0.0
    return MemoryEstimate(svd_scalars, isvd_scalars, rate)


def theoretical_saving_rate(n_blocks: int) -> float:
    """Asymptotic saving rate ``(n^2 - 1) / n^2`` for ``L >> d > k``."""
    return (n_blocks ** 2 - 1) / n_blocks ** 2
