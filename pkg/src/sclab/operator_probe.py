"""Quantitative probes for linear operators between levels of a scale:
witness lower bounds, truncation operator norms under general inner
products, finite-difference validation of analytic differentials, and the
level-dependent norm dichotomy of the projection differential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .bump_profiles import DEFAULT_MARGIN, DEFAULT_SPACING, shift_amount, shifted_bump
from .gallery import ScMapHandle
from .scale_core import WeightSchedule, grid_l2_inner, grid_sobolev_norm

__all__ = [
    "OperatorHandle",
    "witness_lower_bound",
    "truncation_opnorm",
    "numerical_rank",
    "DiffReport",
    "finite_diff_differential",
    "DEFAULT_FD_STEPS",
    "DichotomyRow",
    "opnorm_dichotomy",
]

#: relative singular-value cutoff below which directions count as numerically null
RANK_THRESHOLD = 1e-10

#: default finite-difference step sweep, large to small
DEFAULT_FD_STEPS = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5)


@dataclass(frozen=True)
class OperatorHandle:
    """A finite truncation of a linear operator: its matrix in chosen bases
    together with the Gram matrices of the domain and codomain inner
    products in those bases."""

    matrix: np.ndarray
    gram_dom: np.ndarray
    gram_cod: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        gd = np.asarray(self.gram_dom, dtype=float)
        gc = np.asarray(self.gram_cod, dtype=float)
        if gd.shape != (m.shape[1], m.shape[1]):
            raise ValueError("domain Gram matrix does not match matrix columns")
        if gc.shape != (m.shape[0], m.shape[0]):
            raise ValueError("codomain Gram matrix does not match matrix rows")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "gram_dom", gd)
        object.__setattr__(self, "gram_cod", gc)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=float)

    def dom_norm(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=float)
        return math.sqrt(max(0.0, float(v @ self.gram_dom @ v)))

    def cod_norm(self, w: np.ndarray) -> float:
        w = np.asarray(w, dtype=float)
        return math.sqrt(max(0.0, float(w @ self.gram_cod @ w)))


def witness_lower_bound(op: OperatorHandle, v: np.ndarray) -> float:
    """||A v|| / ||v||: a certified lower bound for the operator norm."""
    nv = op.dom_norm(v)
    if nv == 0.0:
        raise ValueError("witness vector has zero norm")
    return op.cod_norm(op.apply(v)) / nv


def _whitened(op: OperatorHandle) -> np.ndarray:
    """Matrix of the operator between the orthonormalized bases, via
    Cholesky factors of the two Gram matrices."""
    ld = scipy.linalg.cholesky(op.gram_dom, lower=True)
    lc = scipy.linalg.cholesky(op.gram_cod, lower=True)
    # B = L_c^T A L_d^{-T} has plain-euclidean singular values equal to the
    # metric singular values of A
    right = scipy.linalg.solve_triangular(ld, op.matrix.T, lower=True)
    return lc.T @ right.T


def truncation_opnorm(op: OperatorHandle) -> float:
    """Operator norm of the truncation under the supplied inner products."""
    sv = scipy.linalg.svdvals(_whitened(op))
    return float(sv[0]) if sv.size else 0.0


def numerical_rank(op: OperatorHandle, threshold: float = RANK_THRESHOLD) -> int:
    """Number of metric singular values above threshold * largest."""
    sv = scipy.linalg.svdvals(_whitened(op))
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > threshold * sv[0]))


# ---------------------------------------------------------------------------
# finite-difference validation of analytic differentials


@dataclass(frozen=True)
class DiffReport:
    """Result of checking an analytic differential against central
    finite differences over a step sweep."""

    map_name: str
    level: int
    mismatch: float
    best_step: float
    order_estimate: float
    per_step: Tuple[Tuple[float, float], ...] = field(default=())

    @property
    def ok(self) -> bool:
        return math.isfinite(self.mismatch)


def finite_diff_differential(
    handle: ScMapHandle,
    point,
    tangent,
    level: int = 0,
    steps: Sequence[float] = DEFAULT_FD_STEPS,
    use_richardson: bool = True,
) -> DiffReport:
    """Compare handle.diff at a point with central finite differences of
    handle.eval along a tangent, in the level-i codomain norm.

    The mismatch reported is the best over the step sweep, taking plain
    second-order central differences and (optionally) one Richardson
    extrapolation step at each h.
    """
    analytic = handle.diff(point, tangent)
    scale = max(handle.cod_norm(analytic, level), 1.0)

    def central(h: float):
        plus = handle.eval(handle.move(point, h, tangent))
        minus = handle.eval(handle.move(point, -h, tangent))
        return handle.cod_combine([(0.5 / h, plus), (-0.5 / h, minus)])

    per_step: List[Tuple[float, float]] = []
    centrals = {}
    for h in steps:
        fd = centrals.setdefault(h, central(h))
        err = handle.cod_norm(handle.cod_combine([(1.0, fd), (-1.0, analytic)]), level)
        candidates = [err]
        if use_richardson:
            fd_half = centrals.setdefault(h / 2.0, central(h / 2.0))
            rich = handle.cod_combine([(4.0 / 3.0, fd_half), (-1.0 / 3.0, fd)])
            candidates.append(
                handle.cod_norm(
                    handle.cod_combine([(1.0, rich), (-1.0, analytic)]), level
                )
            )
        per_step.append((h, min(candidates) / scale))

    best_step, mismatch = min(per_step, key=lambda p: p[1])

    # convergence-order estimate from the raw central-difference errors at
    # the two largest steps (before roundoff takes over)
    order = float("nan")
    raw = []
    for h in steps[:2]:
        fd = centrals[h]
        raw.append(
            handle.cod_norm(handle.cod_combine([(1.0, fd), (-1.0, analytic)]), level)
            / scale
        )
    if len(raw) == 2 and raw[0] > 0 and raw[1] > 0 and steps[0] != steps[1]:
        order = math.log(raw[1] / raw[0]) / math.log(steps[1] / steps[0])

    return DiffReport(
        map_name=handle.name,
        level=level,
        mismatch=mismatch,
        best_step=best_step,
        order_estimate=order,
        per_step=tuple(per_step),
    )


# ---------------------------------------------------------------------------
# level dichotomy for the projection differential correction term


@dataclass(frozen=True)
class DichotomyRow:
    t: float
    l2_lower_bound: float
    weighted_upper_bound: float
    weighted_sampled: float


def opnorm_dichotomy(
    t_grid: Sequence[float],
    delta: float,
    spacing: float = DEFAULT_SPACING,
    margin: float = DEFAULT_MARGIN,
    n_samples: int = 8,
    seed: int = 0,
) -> List[DichotomyRow]:
    """Norm dichotomy for the rank-one correction F -> c_t <F, b_t> b_t
    (the gap between the branching family's differential at parameter t and
    at the limit), with c_t the slope of the scalar family at the origin.

    Same-level (L2 -> L2) the correction stays unit-size: the bump itself
    witnesses a lower bound |c_t| <b_t, b_t> >= 1 - o(1).  Cross-level
    (weighted first-order domain, plain L2 codomain) it decays like
    exp(-delta (exp(1/t) - 1)) |c_t| because the bump escapes the weighted
    region.  Each row reports the witness lower bound, the closed-form
    cross-level upper bound, and the worst sampled cross-level ratio.
    """
    from .bump_profiles import phi_gate
    from .scale_core import LogScalar, grid_combine

    rng = np.random.default_rng(seed)
    rows = []
    for t in t_grid:
        if t <= 0:
            raise ValueError("dichotomy grid requires t > 0")
        slope = LogScalar.one().add(phi_gate(t).neg()).to_real()
        b = shifted_bump(t, 0, spacing, margin)
        q = grid_l2_inner(b, b)
        l2_lower = abs(slope) * q  # witness F = b_t, L2 both sides
        shift = shift_amount(t)
        arg = delta * (shift - 1.0)
        upper = abs(slope) * (math.exp(-arg) if arg < 745.0 else 0.0)
        worst = 0.0
        for _ in range(n_samples):
            coeffs = rng.normal(size=3)
            # random smooth inputs supported on the bump window: combinations
            # of the bump and its first two derivatives
            parts = [(coeffs[k], shifted_bump(t, k, spacing, margin)) for k in range(3)]
            f = grid_combine(parts)
            a = grid_l2_inner(f, b)
            img = b.scaled(slope * a)
            nf = grid_sobolev_norm(f, 1, delta)
            if nf == 0.0:
                continue
            ratio = grid_sobolev_norm(img, 0, 0.0) / nf
            worst = max(worst, ratio)
        rows.append(DichotomyRow(t, l2_lower, upper, worst))
    return rows
