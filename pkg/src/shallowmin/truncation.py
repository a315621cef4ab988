"""Truncation of the training inputs by the first layer, rank preservation,
fixed-point-region membership, and the closed-form output-layer minimum at a
fixed first layer (M = Q regime).

The truncation map conjugates the activation by the affine first-layer map:
tau(X0) = w1^-1 (relu(w1 X0 + b1 1^T) - b1 1^T). Its fixed points are exactly
the (w1, b1) for which the network is effectively linear on the data; on that
region the output-layer minimum does not depend on (w1, b1) at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cost import (
    _psd_eig,
    frob,
    lstsq_output_layer,
    weighted_norm,
)
from .dataset import ClassifiedDataset, block_means, y_ext
from .errors import (
    ConsistencyError,
    ShallowminError,
    SingularTruncatedMeans,
    SingularW1,
    WrongRegime,
)
from .linalg import SV_TOLERANCE, numerical_rank, rank_with_margin
from .network import relu

# Entrywise tolerance for tau(X0) == X0 (fixed-point membership).
FIXED_POINT_ATOL = 1e-12

# Relative tolerance of the closed form vs the brute-force least squares.
ORACLE_RTOL = 1e-8


@dataclass
class TruncationResult:
    """Everything derived from one (w1, b1) point.

    min_cost_weighted is present iff the truncation preserved both ranks; the
    relative-deviation matrices and delta_p_tr are the truncated analogues of
    the dataset statistics.
    """

    tau_x0: np.ndarray = field(repr=False)
    rank_x0_preserved: bool
    rank_means_preserved: bool
    rank_marginal: bool
    in_fixed_point_region: bool
    min_cost_weighted: float | None = None
    delta_p_tr: float | None = None
    delta1_rel_tr: np.ndarray | None = field(default=None, repr=False)
    delta2_rel_tr: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, include_matrices: bool = False) -> dict:
        doc = {
            "rank_x0_preserved": self.rank_x0_preserved,
            "rank_means_preserved": self.rank_means_preserved,
            "rank_marginal": self.rank_marginal,
            "in_fixed_point_region": self.in_fixed_point_region,
            "min_cost_weighted": self.min_cost_weighted,
            "delta_p_tr": self.delta_p_tr,
        }
        if include_matrices:
            doc["tau_x0"] = self.tau_x0.tolist()
            if self.delta1_rel_tr is not None:
                doc["delta1_rel_tr"] = self.delta1_rel_tr.tolist()
                doc["delta2_rel_tr"] = self.delta2_rel_tr.tolist()
        return doc


def truncate(w1: np.ndarray, b1: np.ndarray, ds: ClassifiedDataset) -> np.ndarray:
    """tau(X0) = w1^-1 (relu(w1 X0 + b1 1^T) - b1 1^T); requires invertible w1.

    Reapplying the affine map to the result lands in the image of the
    activation, so relu acts as the identity there (checked to 1e-10).
    """
    if ds.m != ds.q:
        raise WrongRegime(f"truncation requires M = Q, got M={ds.m}, Q={ds.q}")
    w1 = np.asarray(w1, dtype=float)
    b1 = np.asarray(b1, dtype=float).reshape(-1)
    if w1.shape != (ds.q, ds.q) or b1.shape != (ds.q,):
        raise WrongRegime(f"w1/b1 shapes {w1.shape}/{b1.shape} do not match Q={ds.q}")
    if numerical_rank(w1) < ds.q:
        raise SingularW1("w1 must be invertible")
    hidden = relu(w1 @ ds.x0 + b1[:, None])
    tau = np.linalg.solve(w1, hidden - b1[:, None])
    reapplied = w1 @ tau + b1[:, None]
    leak = float(np.max(np.abs(relu(reapplied) - reapplied)))
    if leak > 1e-10 * (1.0 + float(np.max(np.abs(hidden)))):
        raise ConsistencyError(f"reapplication identity violated by {leak:.3e}")
    return tau


def _truncated_means(tau: np.ndarray, ds: ClassifiedDataset) -> tuple[np.ndarray, np.ndarray]:
    """Class means and deviations of the truncated inputs; class membership is
    inherited from the dataset, never re-clustered."""
    means = block_means(tau, ds.class_sizes)
    dev = tau - np.repeat(means, ds.class_sizes, axis=1)
    return means, dev


def is_rank_preserving(
    tau_x0: np.ndarray, ds: ClassifiedDataset, sv_tolerance: float = SV_TOLERANCE
) -> tuple[bool, bool]:
    """(rank(tau(X0)) == rank(X0), rank(truncated means) == rank(means))."""
    means_tau, _ = _truncated_means(tau_x0, ds)
    means = block_means(ds.x0, ds.class_sizes)
    return (
        numerical_rank(tau_x0, sv_tolerance) == numerical_rank(ds.x0, sv_tolerance),
        numerical_rank(means_tau, sv_tolerance) == numerical_rank(means, sv_tolerance),
    )


def min_over_output_layer(
    w1: np.ndarray,
    b1: np.ndarray,
    ds: ClassifiedDataset,
    sv_tolerance: float = SV_TOLERANCE,
    cross_check: bool = True,
    force: bool = False,
) -> TruncationResult:
    """Minimum of the weighted cost over the tied output-layer family at a
    fixed (w1, b1), via the truncated statistics.

    The value is the truncated analogue of the exact M = Q minimum:
    ||Y V diag(sqrt(l/(1+l))) V^T||_F from the eigendecomposition of the
    truncated relative-deviation Gram. It is cross-checked against an explicit
    least-squares solve over the output layer on the truncated data. If the
    truncation is rank reducing the minimum is absent (unless force=True, which
    raises if the truncated means are singular anyway).
    """
    tau = truncate(w1, b1, ds)
    w1 = np.asarray(w1, dtype=float)
    b1 = np.asarray(b1, dtype=float).reshape(-1)
    rank_x0, rank_means = is_rank_preserving(tau, ds, sv_tolerance)
    _, marginal_tau = rank_with_margin(tau, sv_tolerance)
    means_tau, dev_tau = _truncated_means(tau, ds)
    _, marginal_means = rank_with_margin(means_tau, sv_tolerance)
    in_region = bool(np.max(np.abs(tau - ds.x0)) <= FIXED_POINT_ATOL)
    result = TruncationResult(
        tau_x0=tau,
        rank_x0_preserved=rank_x0,
        rank_means_preserved=rank_means,
        rank_marginal=marginal_tau or marginal_means,
        in_fixed_point_region=in_region,
    )
    if not (rank_x0 and rank_means):
        if not force:
            return result
        s = np.linalg.svd(means_tau, compute_uv=False)
        if s[0] == 0.0 or s[-1] <= sv_tolerance * s[0]:
            raise SingularTruncatedMeans(
                "truncated means are singular; cannot evaluate the closed form"
            )
    d1_tr = np.linalg.solve(means_tau, dev_tau)
    inv_n = ds.inv_size_weights()
    d2_tr = (d1_tr * inv_n[None, :]) @ d1_tr.T
    d2_tr = 0.5 * (d2_tr + d2_tr.T)
    w, v = _psd_eig(d2_tr)
    value = frob((ds.y @ v) * np.sqrt(w / (1.0 + w))[None, :])
    result.min_cost_weighted = value
    result.delta_p_tr = float(np.max(np.linalg.norm(d1_tr, axis=0)))
    result.delta1_rel_tr = d1_tr
    result.delta2_rel_tr = d2_tr
    if cross_check:
        hidden = relu(w1 @ ds.x0 + b1[:, None])
        _, _, oracle = lstsq_output_layer(hidden, y_ext(ds), ds.class_sizes, b1=b1)
        if abs(value - oracle) > ORACLE_RTOL * (1.0 + max(value, oracle)):
            raise ConsistencyError(
                f"closed-form minimum {value!r} disagrees with least squares {oracle!r}"
            )
    return result


@dataclass
class SweepPoint:
    """One grid entry of a fixed-point-region sweep; exactly one of result and
    error is set."""

    index: int
    result: TruncationResult | None = None
    error: str | None = None

    def to_dict(self, include_matrices: bool = False) -> dict:
        if self.error is not None:
            return {"index": self.index, "error": self.error}
        return {"index": self.index, **self.result.to_dict(include_matrices)}


def sweep_fixed_point_region(
    ds: ClassifiedDataset,
    grid,
    sv_tolerance: float = SV_TOLERANCE,
) -> list[SweepPoint]:
    """Evaluate min_over_output_layer on every (w1, b1) grid point.

    Per-point errors are recorded and the sweep continues; result order matches
    grid order. All in-region points report the same minimum (the value does
    not depend on (w1, b1) there).
    """
    points: list[SweepPoint] = []
    for i, (w1, b1) in enumerate(grid):
        try:
            res = min_over_output_layer(w1, b1, ds, sv_tolerance=sv_tolerance)
            points.append(SweepPoint(index=i, result=res))
        except ShallowminError as exc:
            points.append(SweepPoint(index=i, error=f"{type(exc).__name__}: {exc}"))
    return points


def region_minima_spread(points: list[SweepPoint]) -> float:
    """Max relative spread of min_cost_weighted over in-region sweep points."""
    vals = [
        p.result.min_cost_weighted
        for p in points
        if p.result is not None
        and p.result.in_fixed_point_region
        and p.result.min_cost_weighted is not None
    ]
    if len(vals) < 2:
        return 0.0
    lo, hi = min(vals), max(vals)
    return (hi - lo) / (1.0 + hi)


def weighted_cost_from_projector(ds: ClassifiedDataset, tau: np.ndarray) -> float:
    """||Yext Pperp_tau|| in the weighted norm, materializing the projector;
    small-N diagnostic route, algebraically equal to the closed form."""
    inv_n = ds.inv_size_weights()
    xw = tau * inv_n[None, :]
    gram = xw @ tau.T
    p_script = xw.T @ np.linalg.solve(gram, tau)
    return weighted_norm(y_ext(ds) @ (np.eye(ds.n) - p_script), ds.class_sizes)
