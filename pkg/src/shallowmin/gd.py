"""Plain full-batch gradient descent on the squared L2 cost, used only as an
empirical comparator against the constructive bounds. The ReLU subgradient at
zero is taken to be zero."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost import bound_general, cost_l2, cost_weighted, exact_min_weighted
from .dataset import ClassifiedDataset, DatasetStats, y_ext
from .errors import Diverged
from .linalg import ProjectorPack
from .network import ShallowParams
from .truncation import truncate, FIXED_POINT_ATOL


@dataclass(frozen=True)
class GdConfig:
    learning_rate: float = 1e-2
    steps: int = 20000
    seed: int = 0
    init_scale: float = 0.1
    record_every: int = 100

    def __post_init__(self):
        if self.learning_rate < 0 or self.steps < 0 or self.init_scale < 0:
            raise ValueError("learning_rate, steps and init_scale must be >= 0")
        if self.record_every <= 0:
            raise ValueError("record_every must be positive")


def _gradients(w1, b1, w2, b2, x0, targets, n):
    pre = w1 @ x0 + b1[:, None]
    mask = pre > 0.0
    hidden = np.where(mask, pre, 0.0)
    resid = w2 @ hidden + b2[:, None] - targets
    scale = 2.0 / n
    g_w2 = scale * (resid @ hidden.T)
    g_b2 = scale * resid.sum(axis=1)
    back = (w2.T @ resid) * mask
    g_w1 = scale * (back @ x0.T)
    g_b1 = scale * back.sum(axis=1)
    cost_sq = float(np.sum(resid * resid)) / n
    return g_w1, g_b1, g_w2, g_b2, cost_sq


def train_gd(
    ds: ClassifiedDataset, cfg: GdConfig = GdConfig()
) -> tuple[ShallowParams, list[tuple[int, float]]]:
    """Full-batch subgradient descent on the squared cost.

    Weights start Gaussian with std init_scale, biases at zero; the run is
    bit-reproducible per seed. The trace records (step, cost_l2) every
    record_every steps plus the initial and final points. Raises Diverged if
    the cost exceeds 1e6 x its initial value. With zero biases and entirely
    negative inputs the whole hidden layer can start dead and the run stalls
    at the constant predictor; this is inherent to the baseline.
    """
    rng = np.random.default_rng(cfg.seed)
    m, q, n = ds.m, ds.q, ds.n
    w1 = cfg.init_scale * rng.standard_normal((m, m))
    b1 = np.zeros(m)
    w2 = cfg.init_scale * rng.standard_normal((q, m))
    b2 = np.zeros(q)
    targets = y_ext(ds)
    x0 = ds.x0

    trace: list[tuple[int, float]] = []
    initial_cost = None
    lr = cfg.learning_rate
    for step in range(cfg.steps + 1):
        g_w1, g_b1, g_w2, g_b2, cost_sq = _gradients(w1, b1, w2, b2, x0, targets, n)
        cost = float(np.sqrt(cost_sq))
        if initial_cost is None:
            initial_cost = cost
        if initial_cost > 0 and cost > 1e6 * initial_cost:
            raise Diverged(f"cost {cost:.3e} exceeds 1e6 x initial {initial_cost:.3e}")
        if step % cfg.record_every == 0 or step == cfg.steps:
            trace.append((step, cost))
        if step == cfg.steps:
            break
        w1 = w1 - lr * g_w1
        b1 = b1 - lr * g_b1
        w2 = w2 - lr * g_w2
        b2 = b2 - lr * g_b2
    return ShallowParams(w1=w1, b1=b1, w2=w2, b2=b2), trace


def gd_in_fixed_point_region(params: ShallowParams, ds: ClassifiedDataset) -> bool:
    """Whether the final first layer lies in the fixed-point region (M = Q only)."""
    if ds.m != ds.q:
        return False
    try:
        tau = truncate(params.w1, params.b1, ds)
    except Exception:
        return False
    return bool(np.max(np.abs(tau - ds.x0)) <= FIXED_POINT_ATOL)


def compare(
    ds: ClassifiedDataset,
    stats: DatasetStats,
    pack: ProjectorPack,
    gd_params: ShallowParams,
    constructive_params: ShallowParams,
) -> dict:
    """Side-by-side cost figures for a GD run and a constructive run on the
    same dataset, plus the applicable closed-form references."""
    b_l2, b_dp = bound_general(ds, stats, pack)
    doc = {
        "gd": {
            "cost_l2": cost_l2(gd_params, ds),
            "cost_weighted": cost_weighted(gd_params, ds),
            "in_fixed_point_region": gd_in_fixed_point_region(gd_params, ds),
        },
        "constructive": {
            "cost_l2": cost_l2(constructive_params, ds),
            "cost_weighted": cost_weighted(constructive_params, ds),
        },
        "bound_l2": b_l2,
        "bound_deltap": b_dp,
        "exact_min_weighted": exact_min_weighted(ds, stats) if ds.m == ds.q else None,
    }
    return doc
