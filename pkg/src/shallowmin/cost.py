"""Cost functionals, the data-side projector, relative deviations, and the
closed-form bound / minimum expressions.

Two costs are exposed everywhere: the plain L2 cost (1/sqrt(N)) ||X2 - Yext||_F
and the size-weighted cost sqrt(sum_j ||residual_j||_F^2 / N_j), which removes
the dependence of each class's contribution on its sample count. The closed
forms of the M = Q regime are functions of the relative deviation Gram matrix
alone and are cross-checked at runtime against the N x N data projector route
whenever that projector is small enough to materialize.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import ClassifiedDataset, DatasetStats, y_ext
from .errors import (
    ConsistencyError,
    NotPositiveSemidefinite,
    SingularGram,
    SingularMeans,
    WrongRegime,
)
from .linalg import SV_TOLERANCE, ProjectorPack, op_norm
from .network import ShallowParams, forward

# Largest N for which the N x N data projector is materialized; above this the
# algebraically equal closed form must be used on its own.
MAX_PROJECTOR_N = 5000

CROSS_CHECK_RTOL = 1e-9


def frob(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float)))


def weighted_norm(a: np.ndarray, class_sizes) -> float:
    """sqrt(Tr(A N^-1 A^T)): Frobenius norm with columns weighted by 1/N_j per class."""
    inv_n = np.repeat([1.0 / s for s in class_sizes], class_sizes)
    return float(np.sqrt(np.sum(a * a * inv_n[None, :])))


def cost_l2(p: ShallowParams, ds: ClassifiedDataset) -> float:
    """(1/sqrt(N)) ||X2 - Yext||_F."""
    _, x2 = forward(p, ds.x0)
    return float(frob(x2 - y_ext(ds)) / np.sqrt(ds.n))


def cost_weighted(p: ShallowParams, ds: ClassifiedDataset) -> float:
    """Size-weighted cost; equals sqrt(Q) x cost_l2 for uniform class sizes."""
    _, x2 = forward(p, ds.x0)
    return weighted_norm(x2 - y_ext(ds), ds.class_sizes)


def data_gram(ds: ClassifiedDataset, sv_tolerance: float = SV_TOLERANCE) -> np.ndarray:
    """X0 N^-1 X0^T (Q x Q in the M = Q regime), checked for invertibility."""
    xw = ds.x0 * ds.inv_size_weights()[None, :]
    gram = xw @ ds.x0.T
    s = np.linalg.svd(gram, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= sv_tolerance * s[0]:
        raise SingularGram(
            f"X0 N^-1 X0^T is numerically singular "
            f"(singular values {s[-1]:.3e}..{s[0]:.3e})"
        )
    return gram


@dataclass(frozen=True)
class DataProjector:
    """The N x N rank-Q projector onto the row space of X0 and its complement.

    p_script is orthogonal with respect to the class-size inner product:
    p_script^T N = N p_script.
    """

    p_script: np.ndarray
    p_script_perp: np.ndarray


def data_projector(
    ds: ClassifiedDataset,
    stats: DatasetStats,
    sv_tolerance: float = SV_TOLERANCE,
    max_n: int = MAX_PROJECTOR_N,
) -> DataProjector:
    """Materialize the data projector N^-1 X0^T (X0 N^-1 X0^T)^-1 X0.

    Refuses datasets with N > max_n; use the closed forms instead, which are
    algebraically equal and never form an N x N matrix.
    """
    if ds.m != ds.q:
        raise WrongRegime(f"data projector requires M = Q, got M={ds.m}, Q={ds.q}")
    if ds.n > max_n:
        raise WrongRegime(
            f"refusing to materialize a {ds.n} x {ds.n} projector (max_n={max_n}); "
            "use exact_min_weighted's closed form"
        )
    gram = data_gram(ds, sv_tolerance)
    xw = ds.x0 * ds.inv_size_weights()[None, :]
    p_script = xw.T @ np.linalg.solve(gram, ds.x0)
    return DataProjector(p_script=p_script, p_script_perp=np.eye(ds.n) - p_script)


def relative_deviations(
    ds: ClassifiedDataset, stats: DatasetStats, sv_tolerance: float = SV_TOLERANCE
) -> tuple[np.ndarray, np.ndarray]:
    """Mean-normalized deviations (Q x N) and their size-weighted Gram (Q x Q PSD).

    Both are invariant under reparametrizations X0 -> K X0, K in GL(Q).
    """
    if ds.m != ds.q:
        raise WrongRegime(f"relative deviations require M = Q, got M={ds.m}, Q={ds.q}")
    s = np.linalg.svd(stats.means, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= sv_tolerance * s[0]:
        raise SingularMeans("reduced mean matrix is numerically singular")
    d1 = np.linalg.solve(stats.means, stats.dev)
    d2 = (d1 * ds.inv_size_weights()[None, :]) @ d1.T
    d2 = 0.5 * (d2 + d2.T)
    return d1, d2


def _psd_eig(d2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a PSD-up-to-roundoff matrix, eigenvalues clamped at 0."""
    w, v = np.linalg.eigh(d2)
    if w.min() < -1e-12:
        raise NotPositiveSemidefinite(
            f"relative deviation Gram has eigenvalue {w.min():.3e} < -1e-12"
        )
    return np.clip(w, 0.0, None), v


def exact_min_weighted(
    ds: ClassifiedDataset,
    stats: DatasetStats,
    cross_check: bool = True,
) -> float:
    """The weighted-cost value of the M = Q closed-form construction.

    Computed as ||Y V diag(sqrt(l/(1+l))) V^T||_F from the eigendecomposition
    (l, V) of the relative deviation Gram. Algebraically this equals
    ||Yext Pperp|| in the weighted norm; for N <= MAX_PROJECTOR_N both routes
    are evaluated and must agree to 1e-9 relative.
    """
    _, d2 = relative_deviations(ds, stats)
    w, v = _psd_eig(d2)
    core = (ds.y @ v) * np.sqrt(w / (1.0 + w))[None, :]
    value = frob(core)
    if cross_check and ds.n <= MAX_PROJECTOR_N:
        dp = data_projector(ds, stats)
        ref = weighted_norm(y_ext(ds) @ dp.p_script_perp, ds.class_sizes)
        if abs(value - ref) > CROSS_CHECK_RTOL * (1.0 + max(value, ref)):
            raise ConsistencyError(
                f"closed form {value!r} and projector route {ref!r} disagree"
            )
    return value


def weighted_norm_y_delta1(ds: ClassifiedDataset, stats: DatasetStats) -> float:
    """||Y Delta1_rel|| in the weighted norm; upper-bound line of the exact minimum."""
    d1, _ = relative_deviations(ds, stats)
    return weighted_norm(ds.y @ d1, ds.class_sizes)


def spectral_range_d2(ds: ClassifiedDataset, stats: DatasetStats) -> tuple[float, float]:
    """(smallest, largest) eigenvalue of the relative deviation Gram; diagnostics only."""
    _, d2 = relative_deviations(ds, stats)
    w, _ = _psd_eig(d2)
    return float(w.min()), float(w.max())


def bound_general(
    ds: ClassifiedDataset, stats: DatasetStats, pack: ProjectorPack
) -> tuple[float, float]:
    """Closed-form cost bounds of the general Q <= M construction.

    Returns (bound_l2, bound_deltap) with
    bound_l2 = (1/sqrt(N)) ||Y pen p dev||_F and bound_deltap = ||Y||_op delta_p;
    the first never exceeds the second (columnwise sup bound). Both are
    invariant under X0 -> lambda X0.
    """
    bound_l2 = float(frob(ds.y @ (pack.pen @ (pack.p @ stats.dev))) / np.sqrt(ds.n))
    bound_deltap = float(op_norm(ds.y) * stats.delta_p)
    if bound_l2 > bound_deltap + 1e-12 * (1.0 + bound_deltap):
        raise ConsistencyError(
            f"bound_l2 {bound_l2!r} exceeds ||Y||_op delta_p {bound_deltap!r}"
        )
    return bound_l2, bound_deltap


def lstsq_output_layer(
    hidden: np.ndarray,
    targets_ext: np.ndarray,
    class_sizes,
    b1: np.ndarray | None = None,
    free_intercept: bool = False,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Least-squares output layer for a fixed hidden layer, via LAPACK lstsq.

    With free_intercept=False (the construction's family) the second-layer bias
    is tied to cancel the propagated first-layer bias: the fit is W2 @ hidden
    ~ targets with no intercept column, and b2 = -W2 @ b1 (b1 must be the
    vector whose broadcast is already included in `hidden`). This is the
    brute-force counterpart of the closed-form minimum. With
    free_intercept=True an intercept column is added; the resulting minimum is
    generally strictly below the tied-family one and is exposed only as a
    diagnostic.

    Returns (w2, b2, weighted_cost_at_optimum).
    """
    hidden = np.asarray(hidden, dtype=float)
    targets_ext = np.asarray(targets_ext, dtype=float)
    n = hidden.shape[1]
    sqrt_w = np.sqrt(np.repeat([1.0 / s for s in class_sizes], class_sizes))
    if free_intercept:
        design = np.vstack([hidden, np.ones(n)])
    else:
        if b1 is None:
            raise ValueError("b1 is required to tie the intercept when free_intercept=False")
        design = hidden - np.asarray(b1, dtype=float).reshape(-1)[:, None]
    theta_t, *_ = np.linalg.lstsq((design * sqrt_w).T, (targets_ext * sqrt_w).T, rcond=None)
    theta = theta_t.T
    if free_intercept:
        w2, b2 = theta[:, :-1], theta[:, -1]
        resid = w2 @ hidden + b2[:, None] - targets_ext
    else:
        w2 = theta
        b2 = -w2 @ np.asarray(b1, dtype=float).reshape(-1)
        resid = w2 @ hidden + b2[:, None] - targets_ext
    value = float(np.sqrt(np.sum(resid * resid * (sqrt_w**2)[None, :])))
    return w2, b2, value


@dataclass
class CostReport:
    """Evaluated costs, bounds and (in the M = Q regime) the exact minimum."""

    cost_l2: float
    cost_weighted: float
    bound_l2: float
    bound_deltap: float
    delta: float
    delta_p: float
    rho: float
    exact_min_weighted: float | None = None
    delta1_rel: np.ndarray | None = field(default=None, repr=False)
    delta2_rel: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, include_matrices: bool = False) -> dict:
        doc = {
            "cost_l2": self.cost_l2,
            "cost_weighted": self.cost_weighted,
            "bound_l2": self.bound_l2,
            "bound_deltap": self.bound_deltap,
            "delta": self.delta,
            "delta_p": self.delta_p,
            "rho": self.rho,
            "exact_min_weighted": self.exact_min_weighted,
        }
        if include_matrices and self.delta1_rel is not None:
            doc["delta1_rel"] = self.delta1_rel.tolist()
            doc["delta2_rel"] = self.delta2_rel.tolist()
        return doc


def evaluate(
    p: ShallowParams,
    ds: ClassifiedDataset,
    stats: DatasetStats,
    pack: ProjectorPack,
    include_matrices: bool = False,
) -> CostReport:
    """Full cost report for one parameter set on one dataset."""
    b_l2, b_dp = bound_general(ds, stats, pack)
    report = CostReport(
        cost_l2=cost_l2(p, ds),
        cost_weighted=cost_weighted(p, ds),
        bound_l2=b_l2,
        bound_deltap=b_dp,
        delta=stats.delta,
        delta_p=stats.delta_p,
        rho=stats.rho,
    )
    if ds.m == ds.q:
        d1, d2 = relative_deviations(ds, stats)
        report.exact_min_weighted = exact_min_weighted(ds, stats)
        if include_matrices:
            report.delta1_rel = d1
            report.delta2_rel = d2
    return report
