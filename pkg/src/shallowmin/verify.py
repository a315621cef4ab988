"""Numerical verification suites for every closed-form claim the library
implements: bound chains, exact-minimum identities, degeneracy of the flat
region, scaling and reparametrization invariances, the metric equivalence of
classification, and truncation behaviour.

Each suite returns PropertyCheck records with the measured slack and its
tolerance; a suite passes iff every check does. The CLI `verify` command is a
thin renderer over these functions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .classify import classify as classify_point, metric as metric_distance, score as score_point
from .constructive import (
    ConstructiveConfig,
    exact_w2,
    in_region_perturbation,
    resolve_output_layer,
    sanity_forward_means,
    train_exact_meq,
    train_general,
    w2_tilde,
)
from .cost import (
    bound_general,
    cost_l2,
    cost_weighted,
    data_projector,
    exact_min_weighted,
    lstsq_output_layer,
    relative_deviations,
    spectral_range_d2,
    weighted_norm,
    weighted_norm_y_delta1,
)
from .dataset import ClassifiedDataset, dataset_stats, y_ext
from .errors import WrongRegime
from .linalg import op_norm
from .network import ShallowParams, forward, relu
from .truncation import min_over_output_layer, region_minima_spread, sweep_fixed_point_region, truncate

SUITES = ("bounds", "exact-min", "degeneracy", "invariance", "metric", "truncation")


@dataclass
class PropertyCheck:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""


def _rel(a: float, b: float) -> float:
    return abs(a - b) / (1.0 + max(abs(a), abs(b)))


def _check(name: str, measured: float, tolerance: float, detail: str = "") -> PropertyCheck:
    return PropertyCheck(
        name=name,
        passed=bool(measured <= tolerance),
        measured=float(measured),
        tolerance=float(tolerance),
        detail=detail,
    )


def _scaled(ds: ClassifiedDataset, lam: float) -> ClassifiedDataset:
    return replace(ds, x0=lam * ds.x0)


def _noise_scaled(ds: ClassifiedDataset, t: float) -> ClassifiedDataset:
    """Same class means, deviations scaled by t (exact linear noise scaling)."""
    stats, _ = dataset_stats(ds)
    return replace(ds, x0=stats.mean_ext + t * stats.dev)


def random_gl(q: int, rng: np.random.Generator, cond_max: float = 10.0) -> np.ndarray:
    """Random GL(Q) matrix with controlled condition number (< cond_max)."""
    a = rng.standard_normal((q, q))
    u, _ = np.linalg.qr(a)
    v, _ = np.linalg.qr(rng.standard_normal((q, q)))
    s = np.exp(rng.uniform(-0.5 * np.log(cond_max), 0.5 * np.log(cond_max), size=q))
    return u @ np.diag(s) @ v.T


def random_ball(m: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(m)
    v /= max(np.linalg.norm(v), 1e-300)
    return v * radius * rng.uniform() ** (1.0 / m)


def suite_bounds(ds: ClassifiedDataset, cfg: ConstructiveConfig = ConstructiveConfig()) -> list[PropertyCheck]:
    """Upper-bound chain of the general construction plus its invariances."""
    stats, pack = dataset_stats(ds)
    params = train_general(ds, stats, pack, cfg)
    b_l2, b_dp = bound_general(ds, stats, pack)
    achieved = cost_l2(params, ds)
    checks = [
        _check("bounds.cost-le-bound", achieved - b_l2, 1e-10 * (1.0 + b_l2),
               detail=f"cost={achieved:.6e} bound_l2={b_l2:.6e}"),
        _check("bounds.bound-le-op-deltap", b_l2 - b_dp, 1e-12 * (1.0 + b_dp),
               detail=f"bound_l2={b_l2:.6e} |Y|_op*delta_p={b_dp:.6e}"),
    ]
    if stats.delta == 0.0:
        checks.append(_check("bounds.zero-noise-cost", achieved, 1e-10))

    worst_scale = 0.0
    for lam in (0.1, 10.0):
        stats_l, pack_l = dataset_stats(_scaled(ds, lam))
        b_l2_l, _ = bound_general(_scaled(ds, lam), stats_l, pack_l)
        worst_scale = max(worst_scale, _rel(b_l2_l, b_l2), _rel(stats_l.delta_p, stats.delta_p))
    checks.append(_check("bounds.scale-invariance", worst_scale, 1e-9))

    margin = (0.5 * stats.rho if cfg.beta1_margin is None else cfg.beta1_margin) + 1.7 * (stats.rho + 1.0)
    params_big = train_general(ds, stats, pack, ConstructiveConfig(beta1_margin=margin))
    checks.append(_check("bounds.beta-margin-invariance",
                         abs(cost_l2(params_big, ds) - achieved), 1e-10))

    hidden, _ = forward(params, ds.x0)
    signal = pack.r @ (pack.p @ ds.x0)
    signal[: ds.q, :] += cfg.beta1(stats.rho)
    checks.append(_check("bounds.hidden-layer-identity",
                         float(np.max(np.abs(hidden - signal))), 1e-12))
    checks.append(_check("bounds.means-to-targets",
                         sanity_forward_means(params, ds, stats), 1e-9))
    return checks


def suite_exact_min(ds: ClassifiedDataset, cfg: ConstructiveConfig = ConstructiveConfig()) -> list[PropertyCheck]:
    """M = Q exact-value identities, the least-squares oracle, and the
    quadratic-in-delta_p trends of the W2 gap and the minimum's deficit."""
    if ds.m != ds.q:
        raise WrongRegime("exact-min suite requires M = Q")
    stats, pack = dataset_stats(ds)
    params = train_exact_meq(ds, stats, cfg)
    cw = cost_weighted(params, ds)
    em = exact_min_weighted(ds, stats)
    lam_lo, lam_hi = spectral_range_d2(ds, stats)
    checks = [
        _check("exact.cost-eq-closed-form", _rel(cw, em), 1e-9,
               detail=f"cost_N={cw:.9e} closed={em:.9e} spec(D2)=[{lam_lo:.3e},{lam_hi:.3e}]"),
    ]
    dp = data_projector(ds, stats)
    via_projector = weighted_norm(y_ext(ds) @ dp.p_script_perp, ds.class_sizes)
    checks.append(_check("exact.projector-route", _rel(em, via_projector), 1e-9,
                         detail=f"projector route={via_projector:.9e}"))
    hidden = relu(params.w1 @ ds.x0 + params.b1[:, None])
    _, _, oracle = lstsq_output_layer(hidden, y_ext(ds), ds.class_sizes, b1=params.b1)
    checks.append(_check("exact.lstsq-oracle", _rel(em, oracle), 1e-8,
                         detail=f"lstsq oracle={oracle:.9e}"))
    upper = weighted_norm_y_delta1(ds, stats)
    checks.append(_check("exact.le-upper-line", em - upper, 1e-12 * (1.0 + upper),
                         detail=f"closed={em:.6e} |Y D1|={upper:.6e}"))
    if len(set(ds.class_sizes)) == 1:
        checks.append(_check("exact.sqrtq-identity",
                             _rel(cw, np.sqrt(ds.q) * cost_l2(params, ds)), 1e-12))
    if stats.delta > 0:
        checks.extend(quadratic_trend_checks(ds))
    return checks


def quadratic_trend_checks(ds: ClassifiedDataset, octaves: int = 4) -> list[PropertyCheck]:
    """Log-log slopes of |W2* - W2~|_op and of the minimum's deficit against
    delta_p, over `octaves` halvings of the deviations; both must be ~2."""
    delta_ps, gaps, deficits = [], [], []
    for k in range(octaves + 1):
        ds_t = _noise_scaled(ds, 0.5 ** k)
        stats_t, _ = dataset_stats(ds_t)
        gap = op_norm(exact_w2(ds_t, stats_t) - w2_tilde(ds_t, stats_t))
        em = exact_min_weighted(ds_t, stats_t)
        upper = weighted_norm_y_delta1(ds_t, stats_t)
        delta_ps.append(stats_t.delta_p)
        gaps.append(gap)
        deficits.append(1.0 - em / upper)
    log_dp = np.log(delta_ps)
    slope_gap = float(np.polyfit(log_dp, np.log(gaps), 1)[0])
    slope_def = float(np.polyfit(log_dp, np.log(deficits), 1)[0])
    return [
        _check("exact.w2-gap-slope", abs(slope_gap - 2.0), 0.15,
               detail=f"slope={slope_gap:.4f} over {octaves} octaves"),
        _check("exact.deficit-slope", abs(slope_def - 2.0), 0.2,
               detail=f"slope={slope_def:.4f} over {octaves} octaves"),
    ]


def suite_degeneracy(
    ds: ClassifiedDataset,
    n_perturbations: int = 50,
    seed: int = 0,
    cfg: ConstructiveConfig = ConstructiveConfig(),
) -> list[PropertyCheck]:
    """Random in-region (w1, b1) perturbations followed by the tied output-layer
    re-solve must reproduce the exact minimum."""
    if ds.m != ds.q:
        raise WrongRegime("degeneracy suite requires M = Q")
    stats, _ = dataset_stats(ds)
    params = train_exact_meq(ds, stats, cfg)
    em = exact_min_weighted(ds, stats)
    beta1 = cfg.beta1(stats.rho)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_perturbations):
        w1p, b1p = in_region_perturbation(params, stats, beta1, rng)
        w2p, b2p = resolve_output_layer(w1p, b1p, ds, stats)
        cw = cost_weighted(ShallowParams(w1=w1p, b1=b1p, w2=w2p, b2=b2p), ds)
        worst = max(worst, _rel(cw, em))
    return [_check("degeneracy.flat-value", worst, 1e-8,
                   detail=f"{n_perturbations} perturbations, exact={em:.9e}")]


def suite_invariance(ds: ClassifiedDataset, n_k: int = 20, seed: int = 0) -> list[PropertyCheck]:
    """Scaling invariance of the bound quantities; GL(Q) reparametrization
    invariance of the data projector, relative deviations and exact minimum."""
    stats, pack = dataset_stats(ds)
    b_l2, _ = bound_general(ds, stats, pack)
    worst_scale = 0.0
    for lam in (0.1, 10.0):
        stats_l, pack_l = dataset_stats(_scaled(ds, lam))
        b_l2_l, _ = bound_general(_scaled(ds, lam), stats_l, pack_l)
        worst_scale = max(worst_scale, _rel(b_l2_l, b_l2), _rel(stats_l.delta_p, stats.delta_p))
    checks = [_check("invariance.scaling", worst_scale, 1e-9)]
    if ds.m != ds.q:
        return checks

    d1, _ = relative_deviations(ds, stats)
    em = exact_min_weighted(ds, stats)
    p_script = data_projector(ds, stats).p_script
    rng = np.random.default_rng(seed)
    worst_p = worst_d1 = worst_em = 0.0
    for _ in range(n_k):
        k = random_gl(ds.q, rng)
        ds_k = replace(ds, x0=k @ ds.x0)
        stats_k, _ = dataset_stats(ds_k)
        d1_k, _ = relative_deviations(ds_k, stats_k)
        worst_p = max(worst_p, float(np.max(np.abs(data_projector(ds_k, stats_k).p_script - p_script)))
                      / (1.0 + float(np.max(np.abs(p_script)))))
        worst_d1 = max(worst_d1, float(np.max(np.abs(d1_k - d1))) / (1.0 + float(np.max(np.abs(d1)))))
        worst_em = max(worst_em, _rel(exact_min_weighted(ds_k, stats_k), em))
    checks.append(_check("invariance.gl-data-projector", worst_p, 1e-7, detail=f"{n_k} random K"))
    checks.append(_check("invariance.gl-delta1", worst_d1, 1e-7))
    checks.append(_check("invariance.gl-exact-min", worst_em, 1e-7))
    return checks


def suite_metric(
    ds: ClassifiedDataset,
    n_points: int = 1000,
    seed: int = 0,
    cfg: ConstructiveConfig = ConstructiveConfig(),
) -> list[PropertyCheck]:
    """Network-score vs metric-score equality for the general construction,
    insensitivity to components the network cuts off, and the metric axioms.

    Test points are drawn with |x| <= 2 rho < beta1, inside the ball on which
    the first layer of the construction provably stays linear.
    """
    stats, pack = dataset_stats(ds)
    params = train_general(ds, stats, pack, cfg)
    w2t = w2_tilde(ds, stats)
    rng = np.random.default_rng(seed)
    radius = 2.0 * stats.rho
    worst_agree = 0.0
    worst_perp = 0.0
    all_agree = True
    for _ in range(n_points):
        x = random_ball(ds.m, radius, rng)
        out = classify_point(params, w2t, pack.p, ds, x)
        all_agree = all_agree and out.agreement
        worst_agree = max(worst_agree, float(np.max(
            np.abs(out.scores - out.metric_scores) / (1.0 + out.scores))))
        v = pack.p_perp @ rng.standard_normal(ds.m)
        shifted = score_point(params, x + v, ds)
        worst_perp = max(worst_perp, float(np.max(np.abs(shifted - out.scores))))
    checks = [
        _check("metric.network-eq-metric", worst_agree, 1e-9,
               detail=f"{n_points} points, all agreement flags set: {all_agree}"),
        _check("metric.pperp-insensitive", worst_perp, 1e-10),
    ]
    worst_sym = worst_tri = worst_id = 0.0
    for _ in range(100):
        x = random_ball(ds.m, radius, rng)
        y = random_ball(ds.m, radius, rng)
        z = random_ball(ds.m, radius, rng)
        dxy = metric_distance(w2t, pack.p, x, y)
        worst_sym = max(worst_sym, abs(dxy - metric_distance(w2t, pack.p, y, x)))
        worst_tri = max(worst_tri, metric_distance(w2t, pack.p, x, z)
                        - (dxy + metric_distance(w2t, pack.p, y, z)))
        worst_id = max(worst_id, metric_distance(w2t, pack.p, x, x))
    checks.append(_check("metric.symmetry", worst_sym, 1e-12))
    checks.append(_check("metric.triangle", worst_tri, 1e-12))
    checks.append(_check("metric.identity", worst_id, 0.0))
    return checks


def default_truncation_grid(ds: ClassifiedDataset, seed: int = 0, n_points: int = 30) -> list[tuple[np.ndarray, np.ndarray]]:
    """Mixed grid: in-region bias sweeps, near-identity in-region rotations,
    partial clippings, and one full truncation."""
    stats, _ = dataset_stats(ds)
    rho = stats.rho
    q = ds.q
    rng = np.random.default_rng(seed)
    grid: list[tuple[np.ndarray, np.ndarray]] = []
    for t in np.linspace(2.0 * rho, 4.0 * rho, 6):
        grid.append((np.eye(q), t * np.ones(q)))
    for _ in range(4):
        a = rng.standard_normal((q, q))
        a *= 0.01 / np.linalg.norm(a, 2)
        grid.append((np.eye(q) + a, 3.0 * rho * np.ones(q)))
    while len(grid) < n_points - 1:
        b = rng.uniform(-0.4 * rho, 1.2 * rho, size=q)
        grid.append((np.eye(q), b))
    grid.append((np.eye(q), -10.0 * rho * np.ones(q)))  # full truncation
    return grid


def suite_truncation(ds: ClassifiedDataset, seed: int = 0) -> list[PropertyCheck]:
    """Sweep a default grid: rank-preserving closed form vs least squares,
    flat value across the fixed-point region, agreement with the exact minimum,
    and the reapplication identity everywhere."""
    if ds.m != ds.q:
        raise WrongRegime("truncation suite requires M = Q")
    stats, _ = dataset_stats(ds)
    em = exact_min_weighted(ds, stats)
    grid = default_truncation_grid(ds, seed=seed)
    points = sweep_fixed_point_region(ds, grid)

    worst_oracle = 0.0
    n_preserving = 0
    region_vals = []
    for (w1, b1), pt in zip(grid, points):
        if pt.result is None or pt.result.min_cost_weighted is None:
            continue
        n_preserving += 1
        hidden = relu(np.asarray(w1) @ ds.x0 + np.asarray(b1).reshape(-1)[:, None])
        _, _, oracle = lstsq_output_layer(hidden, y_ext(ds), ds.class_sizes,
                                          b1=np.asarray(b1).reshape(-1))
        worst_oracle = max(worst_oracle, _rel(pt.result.min_cost_weighted, oracle))
        if pt.result.in_fixed_point_region:
            region_vals.append(pt.result.min_cost_weighted)

    checks = [
        _check("truncation.closed-vs-lstsq", worst_oracle, 1e-8,
               detail=f"{n_preserving} rank-preserving points"),
        _check("truncation.region-flat", region_minima_spread(points), 1e-8,
               detail=f"{len(region_vals)} in-region points"),
    ]
    if region_vals:
        worst_vs_exact = max(_rel(v, em) for v in region_vals)
        checks.append(_check("truncation.region-matches-exact", worst_vs_exact, 1e-8,
                             detail=f"exact={em:.9e}"))
    worst_reapply = 0.0
    for w1, b1 in grid:
        w1 = np.asarray(w1, dtype=float)
        b1 = np.asarray(b1, dtype=float).reshape(-1)
        tau = truncate(w1, b1, ds)
        reapplied = w1 @ tau + b1[:, None]
        worst_reapply = max(worst_reapply, float(np.max(np.abs(relu(reapplied) - reapplied))))
    checks.append(_check("truncation.reapplication-identity", worst_reapply, 1e-10))
    full = min_over_output_layer(grid[-1][0], grid[-1][1], ds)
    flagged = (not full.rank_x0_preserved) and (not full.rank_means_preserved) \
        and full.min_cost_weighted is None
    checks.append(_check("truncation.full-truncation-flagged", 0.0 if flagged else 1.0, 0.5,
                         detail="flags false and minimum absent"))
    return checks


def run_suite(name: str, ds: ClassifiedDataset, seed: int = 0) -> list[PropertyCheck]:
    if name == "bounds":
        return suite_bounds(ds)
    if name == "exact-min":
        return suite_exact_min(ds)
    if name == "degeneracy":
        return suite_degeneracy(ds, seed=seed)
    if name == "invariance":
        return suite_invariance(ds, seed=seed)
    if name == "metric":
        return suite_metric(ds, seed=seed)
    if name == "truncation":
        return suite_truncation(ds, seed=seed)
    if name == "all":
        checks = []
        for suite in SUITES:
            checks.extend(run_suite(suite, ds, seed=seed))
        return checks
    raise ValueError(f"unknown suite {name!r}")
