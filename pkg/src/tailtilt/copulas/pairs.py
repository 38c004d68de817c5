"""Bivariate copula families and their conditional distribution functions.

For a pair copula C(v1, v2) the h-function is the conditional CDF of the
second argument given the first, h(v2 | v1) = dC(v1, v2)/dv1. Every family
here is exchangeable, so a single formula serves both conditioning orders
(callers swap arguments when they need the other one). Gaussian, t, Clayton,
and Frank inverses exist in closed form; Gumbel and Joe are inverted
numerically to 1e-10 by a bracketed Newton iteration in a transformed
coordinate where the root problem is monotone and well scaled.

Inputs are clamped a hair inside (0,1) so that compositions of many
h-functions cannot round onto the boundary and poison downstream quantile
transforms. Clayton evaluations run in log space throughout because v^(-delta)
overflows long before v reaches the smallest normal double.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri, stdtr, stdtrit

from ..errors import ParameterError

__all__ = ["PairCopula", "h_func", "h_inv"]

_FAMILIES = ("gaussian", "student-t", "clayton", "gumbel", "frank", "joe")

# keep probabilities strictly inside the open unit interval
_LO = 1e-15
_HI = 1.0 - 1e-15


@dataclass(frozen=True)
class PairCopula:
    """One bivariate copula: family name plus that family's parameters."""

    family: str
    rho: float = 0.0
    nu: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ParameterError(f"unknown pair copula family {self.family!r}")
        if self.family in ("gaussian", "student-t") and not abs(self.rho) < 1:
            raise ParameterError(f"correlation must satisfy |rho| < 1, got {self.rho}")
        if self.family == "student-t" and not self.nu > 0:
            raise ParameterError(f"degrees of freedom must be positive, got {self.nu}")
        if self.family == "clayton" and not self.delta > 0:
            raise ParameterError(f"clayton parameter must be positive, got {self.delta}")
        if self.family in ("gumbel", "joe") and not self.delta >= 1:
            raise ParameterError(
                f"{self.family} parameter must be at least 1, got {self.delta}"
            )
        if self.family == "frank" and (self.delta == 0 or not np.isfinite(self.delta)):
            raise ParameterError(f"frank parameter must be finite and nonzero, got {self.delta}")

    def label(self) -> str:
        if self.family == "gaussian":
            return f"gaussian(rho={self.rho:g})"
        if self.family == "student-t":
            return f"student-t(nu={self.nu:g}, rho={self.rho:g})"
        return f"{self.family}(delta={self.delta:g})"


def _clip01(v) -> np.ndarray:
    return np.clip(np.asarray(v, dtype=np.float64), _LO, _HI)


def h_func(pc: PairCopula, v2, v1) -> np.ndarray:
    """Conditional CDF of ``v2`` given ``v1`` under the pair copula."""
    v2 = _clip01(v2)
    v1 = _clip01(v1)
    if pc.family == "gaussian":
        q2, q1 = ndtri(v2), ndtri(v1)
        out = ndtr((q2 - pc.rho * q1) / np.sqrt(1.0 - pc.rho**2))
    elif pc.family == "student-t":
        nu, rho = pc.nu, pc.rho
        q2, q1 = stdtrit(nu, v2), stdtrit(nu, v1)
        z = np.sqrt((nu + 1.0) / (nu + q1**2)) * (q2 - rho * q1) / np.sqrt(1.0 - rho**2)
        out = stdtr(nu + 1.0, z)
    elif pc.family == "clayton":
        d = pc.delta
        l1, l2 = -d * np.log(v1), -d * np.log(v2)
        m = np.maximum(l1, l2)
        log_s = m + np.log(np.exp(l1 - m) + np.exp(l2 - m) - np.exp(-m))
        out = np.exp((1.0 + 1.0 / d) * (l1 - log_s))
    elif pc.family == "gumbel":
        d = pc.delta
        x, y = -np.log(v1), -np.log(v2)
        log_s = np.logaddexp(d * np.log(x), d * np.log(y)) / d
        out = np.exp(x - np.exp(log_s) + (d - 1.0) * (np.log(x) - log_s))
    elif pc.family == "frank":
        d = pc.delta
        num = np.exp(-d * v1) * np.expm1(-d * v2)
        den = np.expm1(-d) + np.expm1(-d * v1) * np.expm1(-d * v2)
        out = num / den
    else:  # joe
        d = pc.delta
        ub, vb = 1.0 - v1, 1.0 - v2
        s = ub**d + vb**d * (1.0 - ub**d)
        out = s ** (1.0 / d - 1.0) * ub ** (d - 1.0) * (1.0 - vb**d)
    return np.clip(out, _LO, _HI)


def h_inv(pc: PairCopula, q, v1) -> np.ndarray:
    """Solve h_func(pc, v2, v1) = q for v2."""
    q = _clip01(q)
    v1 = _clip01(v1)
    if pc.family == "gaussian":
        out = ndtr(np.sqrt(1.0 - pc.rho**2) * ndtri(q) + pc.rho * ndtri(v1))
    elif pc.family == "student-t":
        nu, rho = pc.nu, pc.rho
        q1 = stdtrit(nu, v1)
        scale = np.sqrt((nu + q1**2) * (1.0 - rho**2) / (nu + 1.0))
        out = stdtr(nu, stdtrit(nu + 1.0, q) * scale + rho * q1)
    elif pc.family == "clayton":
        d = pc.delta
        log_b = -d * np.log(v1)
        log_inner = log_b + np.log(np.expm1(-d / (d + 1.0) * np.log(q)) + np.exp(-log_b))
        out = np.exp(-log_inner / d)
    elif pc.family == "gumbel":
        out = _gumbel_h_inv(pc.delta, q, v1)
    elif pc.family == "frank":
        d = pc.delta
        den = np.exp(-d * v1) - q * np.expm1(-d * v1)
        out = -np.log1p(q * np.expm1(-d) / den) / d
    else:  # joe
        out = _joe_h_inv(pc.delta, q, v1)
    return np.clip(out, _LO, _HI)


def _gumbel_h_inv(d: float, q: np.ndarray, v1: np.ndarray) -> np.ndarray:
    """Invert the Gumbel h-function by Newton in s = (x^d + y^d)^(1/d).

    With x = -ln v1 held fixed, ln h = x - s + (d-1) ln(x/s) is strictly
    decreasing and convex in s on (x, inf), and g(s0) <= 0 at the starting
    point s0 = x - ln q, so the iteration decreases monotonically onto the
    root. y is recovered through expm1 to survive the s ~ x regime.
    """
    x = -np.log(v1)
    ln_q = np.log(q)
    s = x - ln_q
    lo = x
    for _ in range(100):
        g = x - s + (d - 1.0) * (np.log(x) - np.log(s)) - ln_q
        s_new = np.maximum(s - g / (-1.0 - (d - 1.0) / s), lo * (1.0 + 1e-16))
        moved = np.max(np.abs(s_new - s))
        s = s_new
        if moved < 1e-13:
            break
    y = x * np.expm1(d * np.log(s / x)) ** (1.0 / d)
    return np.exp(-y)


def _joe_h_inv(d: float, q: np.ndarray, v1: np.ndarray) -> np.ndarray:
    """Invert the Joe h-function by bracketed Newton in t = (1 - v2)^d.

    g(t) = ln h - ln q is strictly decreasing on (0,1) with g(0) = -ln q > 0,
    so a sign-change bracket always exists; Newton steps that leave the
    bracket fall back to bisection.
    """
    ub = 1.0 - v1
    a = ub**d
    ln_q = np.log(q)
    c1 = 1.0 / d - 1.0
    base = (d - 1.0) * np.log(ub)

    lo = np.zeros_like(q)
    hi = np.full_like(q, 1.0 - 1e-16)
    t = np.clip(1.0 - q, 1e-16, 1.0 - 1e-16)
    for _ in range(100):
        s = a + t * (1.0 - a)
        g = c1 * np.log(s) + np.log1p(-t) + base - ln_q
        lo = np.where(g > 0, t, lo)
        hi = np.where(g < 0, t, hi)
        gp = c1 * (1.0 - a) / s - 1.0 / (1.0 - t)
        step = g / gp
        t_new = t - step
        outside = (t_new <= lo) | (t_new >= hi)
        t_new = np.where(outside, 0.5 * (lo + hi), t_new)
        done = np.max(np.abs(t_new - t)) < 1e-14
        t = t_new
        if done:
            break
    return 1.0 - t ** (1.0 / d)
