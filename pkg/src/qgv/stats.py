"""Hypothesis-testing layer: Chernoff significance, infidelity bounds, budgets.

The maximal passing probability ``p_A(Theta, eps)`` of a gate with infidelity
at least ``eps`` is replaced everywhere by its spectral-gap upper bound
``1 - (d + 1)/d * nu * eps``.  Because ``D(p_hat || x)`` decreases in ``x`` on
``(0, p_hat]`` the reported significance stays a valid (conservative) bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

KL_INVERSE_FLOOR = 1e-15
_BISECT_MAX_ITER = 200
_BISECT_BRACKET = 1e-14
_BISECT_RESIDUAL = 1e-12
_CEIL_NUDGE = 1e-12


@dataclass(frozen=True)
class VerificationTarget:
    """Infidelity threshold ``epsilon`` to certify at significance ``delta``."""

    epsilon: float
    delta: float
    d: int
    nu: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.d < 2:
            raise ValueError(f"dimension must be at least 2, got {self.d}")
        if not 0.0 < self.nu <= 1.0:
            raise ValueError(f"spectral gap must lie in (0, 1], got {self.nu}")


def kl(x: float, y: float) -> float:
    """Binary relative entropy D(x || y) in nats, with 0 ln 0 = 0."""
    if not 0.0 < y < 1.0:
        raise ValueError(f"y must lie strictly between 0 and 1, got {y}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    out = 0.0
    if x > 0.0:
        out += x * math.log(x / y)
    if x < 1.0:
        out += (1.0 - x) * math.log((1.0 - x) / (1.0 - y))
    return max(out, 0.0)


def kl_inverse(p_hat: float, y: float, full_output: bool = False):
    """Solve D(p_hat || x) = y for x in (0, p_hat].

    D is strictly decreasing in x on that interval, so the root is found by
    bisection on ln x.  When ``y`` exceeds D(p_hat || 1e-15) the result is
    clamped to 1e-15.  With ``full_output=True`` returns ``(x, saturated)``.
    """
    if not 0.0 < p_hat <= 1.0:
        raise ValueError(f"p_hat must lie in (0, 1], got {p_hat}")
    if y < 0.0 or math.isnan(y):
        raise ValueError(f"y must be non-negative, got {y}")

    saturated = False
    if y == 0.0:
        x = p_hat
    elif p_hat == 1.0:
        # D(1 || x) = -ln x
        x = math.exp(-y)
        if x < KL_INVERSE_FLOOR:
            x, saturated = KL_INVERSE_FLOOR, True
    elif p_hat <= KL_INVERSE_FLOOR or kl(p_hat, KL_INVERSE_FLOOR) <= y:
        x, saturated = min(KL_INVERSE_FLOOR, p_hat), True
    else:
        lo, hi = math.log(KL_INVERSE_FLOOR), math.log(p_hat)
        x = p_hat
        for _ in range(_BISECT_MAX_ITER):
            mid = 0.5 * (lo + hi)
            x = math.exp(mid)
            r = kl(p_hat, x) - y
            # relative residual: an absolute 1e-12 stop loses x for tiny y
            if abs(r) < _BISECT_RESIDUAL * y:
                break
            if r > 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < _BISECT_BRACKET:
                x = math.exp(0.5 * (lo + hi))
                break
    return (x, saturated) if full_output else x


def passing_bound(t: VerificationTarget) -> float:
    """Upper bound 1 - (d+1)/d * nu * eps on the passing probability p_A."""
    pb = 1.0 - (t.d + 1) / t.d * t.nu * t.epsilon
    if pb <= 0.0:
        raise ValueError(f"epsilon = {t.epsilon} is too large for a positive passing bound")
    return pb


def significance(p_hat: float, n: int, t: VerificationTarget) -> float:
    """Chernoff bound on the significance level after ``n`` tests.

    Returns 1 (no conclusion) when there is no data or when the passing rate
    does not exceed the passing bound.
    """
    if n < 0:
        raise ValueError("number of tests must be non-negative")
    if n == 0:
        return 1.0
    pb = passing_bound(t)
    if p_hat <= pb:
        return 1.0
    if p_hat >= 1.0:
        exponent = n * math.log(pb)
    else:
        exponent = -kl(p_hat, pb) * n
    return min(1.0, max(0.0, math.exp(exponent)))


def infidelity_bound(p_hat: float, n: int, delta: float, d: int, nu: float) -> float:
    """Upper bound on the average gate infidelity at confidence 1 - delta."""
    if n < 1:
        raise ValueError("infidelity bound needs at least one test")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if not 0.0 <= p_hat <= 1.0:
        raise ValueError(f"p_hat must lie in [0, 1], got {p_hat}")
    x = 0.0 if p_hat == 0.0 else kl_inverse(p_hat, math.log(1.0 / delta) / n)
    return d / (d + 1) * (1.0 - x) / nu


def _ceil(x: float) -> int:
    return math.ceil(x - _CEIL_NUDGE * max(1.0, abs(x)))


class Budget(NamedTuple):
    n_general: int
    n_optimal: int
    n_local_tight: int
    n_local_loose: int


def plan(t: VerificationTarget, p_a_override: Optional[float] = None) -> Budget:
    """Number of tests needed to certify ``t`` when every test passes.

    ``n_general`` uses ``p_a_override`` when given and otherwise the
    spectral-gap passing bound.
    """
    if t.epsilon <= 0.0:
        raise ValueError("planning needs epsilon > 0")
    if p_a_override is not None:
        if not 0.0 < p_a_override < 1.0:
            raise ValueError(f"p_a_override must lie in (0, 1), got {p_a_override}")
        p_a = p_a_override
    else:
        p_a = passing_bound(t)
    log_delta = math.log(t.delta)
    return Budget(
        n_general=_ceil(log_delta / math.log(p_a)),
        n_optimal=_ceil(log_delta / math.log1p(-t.epsilon)),
        n_local_tight=_ceil(log_delta / math.log1p(-t.nu * t.epsilon)),
        n_local_loose=_ceil(-log_delta / (t.nu * t.epsilon)),
    )
