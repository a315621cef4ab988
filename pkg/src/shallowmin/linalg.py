"""Dense linear-algebra kernels: pseudoinverse, orthoprojectors, diagonalizing
rotations and numerical rank.

All functions are pure and operate on float64 ndarrays; matrices are dense and
sized for desk scale (M, Q <~ 100). Pseudoinverses and projectors are computed
through the SVD for conditioning, never by forming (A^T A)^-1 explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotAProjector, RankDeficient

# Relative singular-value cutoff shared by every rank decision in the library.
SV_TOLERANCE = 1e-10

# Tolerance for validating that an input matrix is an orthogonal projector.
PROJECTOR_TOLERANCE = 1e-8


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array, raising DimensionError otherwise."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionError(f"{name} contains non-finite entries")
    return a


def op_norm(a) -> float:
    """Largest singular value."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])


def numerical_rank(a, sv_tolerance: float = SV_TOLERANCE) -> int:
    """Count of singular values above sv_tolerance x the largest; 0 for the zero matrix."""
    a = as_matrix(a)
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > sv_tolerance * s[0]))


def rank_with_margin(a, sv_tolerance: float = SV_TOLERANCE) -> tuple[int, bool]:
    """Numerical rank plus a flag set when any singular value sits within a
    factor of 2 of the cutoff, i.e. when the rank decision is marginal."""
    a = as_matrix(a)
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0, False
    thresh = sv_tolerance * s[0]
    rank = int(np.count_nonzero(s > thresh))
    marginal = bool(np.any((s > thresh / 2.0) & (s < thresh * 2.0)))
    return rank, marginal


def penrose_inverse(a, sv_tolerance: float = SV_TOLERANCE) -> np.ndarray:
    """Left pseudoinverse of a full-column-rank M x Q matrix (M >= Q).

    The returned Q x M matrix equals ((a^T a)^-1 a^T); it is computed from the
    thin SVD so that result @ a = I_Q holds to near machine precision.
    """
    a = as_matrix(a)
    m, q = a.shape
    if m < q:
        raise DimensionError(f"need rows >= cols for a left inverse, got {a.shape}")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= sv_tolerance * s[0]:
        raise RankDeficient(
            f"column rank < {q}: smallest/largest singular value "
            f"{s[-1]:.3e}/{s[0]:.3e} under tolerance {sv_tolerance:g}"
        )
    return (vt.T / s) @ u.T


def orthoprojector(a, sv_tolerance: float = SV_TOLERANCE) -> tuple[np.ndarray, np.ndarray]:
    """Orthoprojector onto the range of a full-column-rank matrix, and its complement.

    Returns (p, p_perp) with p = a @ penrose_inverse(a) in value, built from the
    left singular vectors and explicitly symmetrized.
    """
    a = as_matrix(a)
    m, q = a.shape
    if m < q:
        raise DimensionError(f"need rows >= cols, got {a.shape}")
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= sv_tolerance * s[0]:
        raise RankDeficient(
            f"column rank < {q}: smallest/largest singular value "
            f"{s[-1]:.3e}/{s[0]:.3e} under tolerance {sv_tolerance:g}"
        )
    p = u @ u.T
    p = 0.5 * (p + p.T)
    return p, np.eye(m) - p


def diagonalizing_rotation(
    p,
    rank: int,
    projector_tolerance: float = PROJECTOR_TOLERANCE,
) -> np.ndarray:
    """Orthogonal R whose rows diagonalize a symmetric projector.

    R p R^T is diagonal with `rank` ones followed by zeros. The rotation is not
    unique; this implementation fixes one deterministically: rows are the
    eigenvectors of p sorted by descending eigenvalue, each signed so that its
    largest-magnitude entry is positive.
    """
    p = as_matrix(p, "projector")
    m = p.shape[0]
    if p.shape[1] != m:
        raise DimensionError(f"projector must be square, got {p.shape}")
    if not 0 < rank <= m:
        raise DimensionError(f"rank must be in (0, {m}], got {rank}")
    sym_err = np.max(np.abs(p - p.T))
    idem_err = np.max(np.abs(p @ p - p))
    if sym_err > projector_tolerance or idem_err > projector_tolerance:
        raise NotAProjector(
            f"symmetry error {sym_err:.3e}, idempotence error {idem_err:.3e} "
            f"exceed tolerance {projector_tolerance:g}"
        )
    w, v = np.linalg.eigh(p)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    if np.max(np.abs(w[:rank] - 1.0)) > projector_tolerance or (
        rank < m and np.max(np.abs(w[rank:])) > projector_tolerance
    ):
        raise NotAProjector(
            f"eigenvalues {w} are not {rank} ones followed by zeros"
        )
    for j in range(m):
        col = v[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            v[:, j] = -col
    return v.T.copy()


@dataclass(frozen=True)
class ProjectorPack:
    """Pseudoinverse / projector / rotation bundle for one M x Q full-rank matrix.

    pen:    Q x M left pseudoinverse
    p:      M x M orthoprojector onto the column span
    p_perp: M x M complement projector
    r:      M x M orthogonal rotation, r @ p @ r.T = diag(1,...,1,0,...,0)
    rank:   number of leading ones on that diagonal (= Q)
    sv_tolerance: relative singular-value cutoff the pack was built with
    """

    pen: np.ndarray
    p: np.ndarray
    p_perp: np.ndarray
    r: np.ndarray
    rank: int
    sv_tolerance: float


def projector_pack(a, sv_tolerance: float = SV_TOLERANCE) -> ProjectorPack:
    """Build the ProjectorPack of a full-column-rank M x Q matrix."""
    a = as_matrix(a)
    pen = penrose_inverse(a, sv_tolerance)
    p, p_perp = orthoprojector(a, sv_tolerance)
    r = diagonalizing_rotation(p, a.shape[1])
    return ProjectorPack(pen=pen, p=p, p_perp=p_perp, r=r, rank=a.shape[1], sv_tolerance=sv_tolerance)
