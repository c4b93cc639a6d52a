"""The normalized bump, its far-left shifts, the double-exponential gate,
and the plateau step family driving the sequence-space constructions.

All pairings with shifted bumps live near x = -exp(1/t), so magnitudes are
routed through log-domain arithmetic whenever they can leave float range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from .scale_core import (
    AnalyticTailFunction,
    GridFunction,
    LogScalar,
    grid_l2_inner,
)

__all__ = [
    "RepresentabilityError",
    "BumpProfile",
    "SmoothStep",
    "make_bump",
    "make_smooth_step",
    "shift_amount",
    "is_representable",
    "shifted_bump",
    "pair_with_bump",
    "phi_gate",
    "phi_gate_logmag",
    "step_n",
    "log_limit_probe",
    "DEFAULT_SPACING",
    "DEFAULT_MARGIN",
    "MAX_SHIFT",
    "K_MAX",
]

DEFAULT_SPACING = 1e-3
DEFAULT_MARGIN = 1.0
# largest exp(1/t) we materialize on a grid; smaller t must use the log path
MAX_SHIFT = 1e6
K_MAX = 3

_FD_SPACING = 1e-4
_LOG_MIN = -1.7976931348623157e308


class RepresentabilityError(ValueError):
    """A shift exp(1/t) is too large for the grid path; use log-domain ops."""


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


# ---------------------------------------------------------------------------
# finite differences of closed forms (one Richardson step)


def _fd(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray, k: int, h: float) -> np.ndarray:
    if k == 0:
        return fun(x)
    if k == 1:
        return (fun(x + h) - fun(x - h)) / (2 * h)
    if k == 2:
        return (fun(x + h) - 2 * fun(x) + fun(x - h)) / h**2
    if k == 3:
        return (fun(x + 2 * h) - 2 * fun(x + h) + 2 * fun(x - h) - fun(x - 2 * h)) / (2 * h**3)
    raise ValueError(f"derivative order {k} beyond K_MAX={K_MAX}")


def _fd_richardson(fun, x, k: int, h: float = _FD_SPACING) -> np.ndarray:
    if k == 0:
        return fun(x)
    return (4.0 * _fd(fun, x, k, h / 2) - _fd(fun, x, k, h)) / 3.0


# ---------------------------------------------------------------------------
# bump profile


def _bump_unnormalized(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    z = 1.0 - x * x
    out = np.zeros_like(z)
    m = z > 0
    with np.errstate(over="ignore", under="ignore"):
        out[m] = np.exp(-1.0 / z[m])
    return out


def _refined_trapezoid(fun, a: float, b: float, rel_tol: float = 1e-13, n0: int = 2001):
    """Trapezoid with factor-4 refinement until two values agree."""
    n = n0
    prev = None
    for _ in range(12):
        xs = np.linspace(a, b, n)
        val = float(np.trapezoid(fun(xs), xs))
        if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), 1e-300):
            return val
        prev = val
        n = 4 * (n - 1) + 1
    return prev


@dataclass(frozen=True)
class BumpProfile:
    """Smooth non-negative bump supported in [-1, 1] with unit L2 norm."""

    normalization: float

    def __call__(self, x) -> np.ndarray:
        return self.normalization * _bump_unnormalized(np.asarray(x, dtype=float))

    def derivative(self, x, order: int) -> np.ndarray:
        if order < 0 or order > K_MAX:
            raise ValueError(f"order must be in 0..{K_MAX}")
        return _fd_richardson(self.__call__, np.asarray(x, dtype=float), order)

    def sup_norm(self) -> float:
        xs = np.linspace(-1, 1, 10001)
        return float(np.max(self(xs)))


_BUMP_CACHE: dict = {}


def make_bump() -> BumpProfile:
    """Normalized mollifier c * exp(-1/(1-x^2)) with integral of square 1."""
    if "bump" not in _BUMP_CACHE:
        integral = _refined_trapezoid(lambda x: _bump_unnormalized(x) ** 2, -1.0, 1.0)
        _BUMP_CACHE["bump"] = BumpProfile(normalization=integral**-0.5)
    return _BUMP_CACHE["bump"]


# ---------------------------------------------------------------------------
# smooth step


def _two_sided(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    m = y > 0
    with np.errstate(over="ignore", under="ignore"):
        out[m] = np.exp(-1.0 / y[m])
    return out


def _step_closed(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g_hi = _two_sided(1.0 - x)
    g_lo = _two_sided(x - 0.5)
    den = g_hi + g_lo
    with np.errstate(invalid="ignore"):
        frac = np.divide(g_hi, den, out=np.ones_like(g_hi), where=den > 0)
    return 0.5 + 0.5 * frac


@dataclass(frozen=True)
class SmoothStep:
    """Smooth monotone plateau: 1 on (-inf, 1/2], 1/2 on [1, inf)."""

    def __call__(self, x) -> np.ndarray:
        return _step_closed(x)

    def derivative(self, x, order: int) -> np.ndarray:
        if order < 0 or order > K_MAX:
            raise ValueError(f"order must be in 0..{K_MAX}")
        return _fd_richardson(_step_closed, np.asarray(x, dtype=float), order)

    def derivative_sup(self, order: int) -> float:
        """Sup of |f^(order)| by dense sampling of the transition interval."""
        xs = np.linspace(0.4, 1.1, 10001)
        return float(np.max(np.abs(self.derivative(xs, order))))


def make_smooth_step() -> SmoothStep:
    return SmoothStep()


# ---------------------------------------------------------------------------
# shifts and pairings


def shift_amount(t: float) -> float:
    """exp(1/t) for t > 0 (may be inf for extremely small t)."""
    if t <= 0:
        raise ValueError("shift defined only for t > 0")
    return _safe_exp(1.0 / t)


def is_representable(t: float) -> bool:
    """Whether the shifted bump at this t fits the direct grid path."""
    return t > 0 and 1.0 / t <= math.log(MAX_SHIFT)


def shifted_bump(
    t: float,
    order: int = 0,
    spacing: float = DEFAULT_SPACING,
    margin: float = DEFAULT_MARGIN,
) -> GridFunction:
    """Grid sampling of the order-th bump derivative shifted to -exp(1/t)."""
    if t <= 0:
        raise ValueError("shifted bump defined only for t > 0")
    if not is_representable(t):
        raise RepresentabilityError(
            f"exp(1/t) = exp({1.0 / t:.3g}) exceeds the grid policy bound "
            f"{MAX_SHIFT:g}; use the log-domain path"
        )
    bump = make_bump()
    n = round(2 * (1.0 + margin) / spacing) + 1
    u = -(1.0 + margin) + spacing * np.arange(n)
    vals = bump.derivative(u, order) if order else bump(u)
    return GridFunction(x0=-shift_amount(t) - (1.0 + margin), spacing=spacing, values=vals)


def _far_left_of(f: GridFunction, t: float) -> bool:
    """True when the bump window at t lies strictly left of f's window."""
    # support right edge is -exp(1/t) + 1; compare in log form to dodge overflow
    if f.x0 >= 1.0:
        return True
    return 1.0 / t > math.log(1.0 - f.x0 + 2.0)


def pair_with_bump(
    f: Union[GridFunction, AnalyticTailFunction],
    t: float,
    spacing: float = DEFAULT_SPACING,
    margin: float = DEFAULT_MARGIN,
) -> Union[float, LogScalar]:
    """L2 pairing of f with the shifted bump.

    Grid inputs pair by trapezoid quadrature on the overlap and return a
    float; analytic tails pair by log-domain quadrature and return a
    LogScalar, which stays meaningful when the result underflows floats.
    """
    if t <= 0:
        raise ValueError("pairing defined only for t > 0")
    if isinstance(f, AnalyticTailFunction):
        return _pair_tail_log(f, t, spacing)
    if not is_representable(t):
        if _far_left_of(f, t):
            return 0.0
        raise RepresentabilityError(
            "bump shift not representable and the windows may overlap; "
            "use an analytic tail input for the log-domain path"
        )
    return grid_l2_inner(f, shifted_bump(t, 0, spacing, margin))


def _pair_tail_log(f: AnalyticTailFunction, t: float, spacing: float) -> LogScalar:
    shift = shift_amount(t)
    if not math.isfinite(shift):
        raise RepresentabilityError("exp(1/t) overflows floats even for the log path")
    bump = make_bump()

    def quad(h: float) -> LogScalar:
        n = round(2.0 / h) + 1
        u = np.linspace(-1.0, 1.0, n)
        bv = bump(u)
        keep = bv > 0
        u = u[keep]
        bv = bv[keep]
        logw = math.log(h)
        log_terms = np.log(bv) + logw
        signs = np.empty(u.size)
        for j, uu in enumerate(u):
            ls = f.log_evaluate(uu - shift)
            log_terms[j] += ls.logmag
            signs[j] = ls.sign
        pos = log_terms[signs > 0]
        neg = log_terms[signs < 0]
        lp = logsumexp(pos) if pos.size else -math.inf
        ln = logsumexp(neg) if neg.size else -math.inf
        return LogScalar.from_log(1, float(lp)).add(LogScalar.from_log(-1, float(ln)))

    # factor-4 refinement until the log magnitudes settle
    h = spacing
    prev = quad(h)
    for _ in range(4):
        h /= 4.0
        cur = quad(h)
        if (
            prev.sign == cur.sign
            and abs(prev.logmag - cur.logmag) <= 1e-9 * max(1.0, abs(cur.logmag))
        ):
            return cur
        prev = cur
    return prev


# ---------------------------------------------------------------------------
# the double-exponential gate


def phi_gate_logmag(t: float) -> float:
    """-exp(1/t^2), clamped to the most negative finite float."""
    e = _safe_exp(1.0 / (t * t))
    return -e if math.isfinite(e) else _LOG_MIN


def phi_gate(t: float) -> LogScalar:
    """exp(-exp(1/t^2)) for t > 0, zero for t <= 0, as a LogScalar."""
    if t <= 0:
        return LogScalar.zero()
    return LogScalar(1, phi_gate_logmag(t))


# ---------------------------------------------------------------------------
# reparameterized steps


def step_n(n: int, t: float, order: int = 0) -> float:
    """order-th derivative of f(0.5*(n(n+1)t + 1 - n)) by the chain rule."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if order < 0 or order > K_MAX:
        raise ValueError(f"order must be in 0..{K_MAX}")
    step = make_smooth_step()
    arg = 0.5 * (n * (n + 1) * t + 1 - n)
    scale = (n * (n + 1) / 2.0) ** order
    return float(scale * step.derivative(np.asarray(arg, dtype=float), order))


# ---------------------------------------------------------------------------
# vanishing-limit probe for the gated shifts


def log_limit_probe(
    l: int, m: int, n: int, delta: float, t_grid: Sequence[float]
) -> list:
    """Log of t^-l * exp(delta*exp(1/t)/2 + m/t^2 + n/t - exp(1/t^2)) per t.

    The double-exponential decay of the gate dominates every other factor, so
    the values must dive to -inf as t decreases; callers check that trend.
    """
    ts = list(t_grid)
    if any(t <= 0 or t > 1 for t in ts):
        raise ValueError("t grid must lie in (0, 1]")
    if any(b < a for a, b in zip(ts, ts[1:])):
        pass  # decreasing expected; tolerate but evaluate as given
    out = []
    for t in ts:
        gate = phi_gate_logmag(t)
        envelope = 0.5 * delta * _safe_exp(1.0 / t)
        if not math.isfinite(envelope):
            raise RepresentabilityError("exp(1/t) overflows the probe envelope")
        lm = math.fsum([-l * math.log(t), envelope, m / (t * t), n / t, gate])
        out.append(LogScalar.from_log(1, max(lm, _LOG_MIN)))
    return out
