"""Reference probabilities the estimator tests are judged against.

Gaussian rectangles are integrated deterministically: after a Cholesky
factorization the tail event is rewritten as an integral over the unit cube
(sequential conditioning, each coordinate mapped through the normal CDF),
then evaluated by tensorized Gauss-Legendre quadrature whose node count
doubles until two successive estimates agree to 1e-9. Dimensions up to four
are supported, which keeps tensor quadrature both exact enough and cheap.

Student t rectangles reuse the Gaussian integrator under the scale-mixture
representation of the t law, integrating the conditional Gaussian rectangle
over the chi-square mixing variable (reparameterized through its CDF so the
integrand lives on (0,1) for any degrees of freedom).

Clayton equal corners have an exact closed form. Vine corners do not, so the
vine reference is a large crude Monte Carlo run with a reported 99.9%
confidence half-width; callers must treat it as ground truth only through
that interval.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache, reduce
from math import comb

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.special import ndtr, ndtri
from scipy.stats import chi2

from .errors import ParameterError, ShapeError, SolverError
from .randkit import _cholesky, make_stream

__all__ = [
    "rect_prob_gaussian",
    "rect_prob_t",
    "clayton_corner_prob",
    "vine_corner_prob",
    "CornerReference",
]

# two-sided 99.9% normal quantile, used for the vine reference interval
_Z_999 = float(ndtri(0.9995))


def _check_direction(direction: str) -> None:
    if direction not in ("upper", "lower"):
        raise ParameterError(f"direction must be 'upper' or 'lower', got {direction!r}")


def rect_prob_gaussian(sigma, a, direction: str = "upper") -> float:
    """P(V > a) (or P(V < a)) for V ~ MN(0, sigma), to absolute error 1e-8.

    Lower corners are mapped to upper ones through the symmetry V ~ -V.
    """
    _check_direction(direction)
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    d = a.shape[0]
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.shape != (d, d):
        raise ShapeError(f"covariance shape {sigma.shape} does not match {d} thresholds")
    if d > 4:
        raise ParameterError(f"quadrature oracle supports d <= 4, got d={d}")
    if direction == "lower":
        a = -a
    L = _cholesky(sigma)
    if d == 1:
        return float(ndtr(-a[0] / L[0, 0]))

    # node count doubles per refinement; memory grows as m^(d-1)
    m, m_max = 8, 4096 if d == 2 else (1024 if d == 3 else 128)
    prev = None
    while m <= m_max:
        val = _genz_tensor(L, a, m)
        if prev is not None and abs(val - prev) < 1e-9:
            return val
        prev = val
        m *= 2
    raise SolverError(f"rectangle quadrature did not stabilize below m={m_max} nodes")


@lru_cache(maxsize=None)
def _unit_nodes(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on (0,1) composed with a cosine map.

    The sequentially conditioned integrand has derivative blow-ups at the
    cube boundary (a normal quantile of an argument tending to 0 or 1), which
    stalls plain Gauss-Legendre. Substituting x = (1 - cos(pi s))/2 flattens
    the integrand at both endpoints and restores fast convergence.
    """
    x, w = leggauss(m)
    s = 0.5 * (x + 1.0)
    nodes = 0.5 * (1.0 - np.cos(np.pi * s))
    weights = 0.5 * w * 0.5 * np.pi * np.sin(np.pi * s)
    return nodes, weights


def _genz_tensor(L: np.ndarray, a: np.ndarray, m: int) -> float:
    """One tensor Gauss-Legendre pass of the sequentially conditioned integral."""
    d = a.shape[0]
    x, w = _unit_nodes(m)

    grids = np.meshgrid(*([x] * (d - 1)), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = reduce(np.multiply.outer, [w] * (d - 1)).ravel() if d > 2 else w

    d1 = float(ndtr(a[0] / L[0, 0]))
    dk = np.full(pts.shape[0], d1)
    fk = np.full(pts.shape[0], 1.0 - d1)
    ys = np.empty((pts.shape[0], d - 1))
    for k in range(1, d):
        # fk already carries a zero factor wherever dk rounded to 1, so the
        # quantile argument only needs to stay finite there
        q_arg = np.clip(dk + pts[:, k - 1] * (1.0 - dk), 1e-300, 1.0 - 1e-16)
        ys[:, k - 1] = ndtri(q_arg)
        shifted = a[k] - ys[:, :k] @ L[k, :k]
        dk = ndtr(shifted / L[k, k])
        fk *= 1.0 - dk
    return float(fk @ wts)


def rect_prob_t(nu: float, sigma, a, direction: str = "upper") -> float:
    """Tail rectangle probability for a centered multivariate t, d <= 2.

    Conditional on the chi-square mixing variable Y, the t vector is Gaussian
    with thresholds scaled by sqrt(Y/nu); the outer integral runs over the CDF
    of Y so its domain is (0,1) regardless of nu.
    """
    _check_direction(direction)
    if not nu > 0:
        raise ParameterError(f"degrees of freedom must be positive, got {nu}")
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    if a.shape[0] > 2:
        raise ParameterError(f"t-rectangle oracle supports d <= 2, got d={a.shape[0]}")
    if direction == "lower":
        a = -a
    law = chi2(nu)

    def integrand(u: float) -> float:
        y = law.ppf(u)
        return rect_prob_gaussian(sigma, np.sqrt(y / nu) * a, "upper")

    val, err = quad(integrand, 0.0, 1.0, epsabs=1e-9, epsrel=1e-9, limit=200)
    if err > 1e-7:
        raise SolverError(f"mixture quadrature error estimate {err:.2e} exceeds 1e-7")
    return float(val)


def clayton_corner_prob(delta: float, u0: float, d: int = 2) -> float:
    """Exact P(U_1 > u0, ..., U_d > u0) under a Clayton copula.

    Inclusion-exclusion over the k-margin CDFs, each written as
    u0 * (k - (k-1) u0^delta)^(-1/delta) so no intermediate quantity
    overflows however small u0 or large delta gets.
    """
    if not delta > 0:
        raise ParameterError(f"clayton parameter must be positive, got {delta}")
    if not 0.0 < u0 < 1.0:
        raise ParameterError(f"threshold must lie in (0,1), got {u0}")
    if d < 1:
        raise ParameterError(f"dimension must be at least 1, got {d}")
    ud = u0**delta
    total = 0.0
    for k in range(d + 1):
        total += (-1) ** k * comb(d, k) * u0 * (k - (k - 1) * ud) ** (-1.0 / delta)
    return total


@dataclass(frozen=True)
class CornerReference:
    """A Monte Carlo reference probability with its 99.9% half-width."""

    value: float
    half_width: float
    n_draws: int

    def covers(self, x: float, slack: float = 0.0) -> bool:
        return abs(x - self.value) <= self.half_width + slack


def vine_corner_prob(
    rv,
    p: float,
    n_draws: int = 10_000_000,
    seed: int = 990_001,
    chunk: int = 100_000,
) -> CornerReference:
    """Crude reference for P(U_i > p for all i) under a vine copula.

    Draws are split into fixed chunks, one stream per chunk, and hit counts
    are summed, so the result is identical however the chunks are scheduled.
    """
    from .copulas.vines import sample_vine_uniforms

    if not 0.0 < p < 1.0:
        raise ParameterError(f"threshold must lie in (0,1), got {p}")
    n_chunks, rem = divmod(n_draws, chunk)
    sizes = [chunk] * n_chunks + ([rem] if rem else [])

    def count_hits(i: int) -> int:
        u = sample_vine_uniforms(make_stream(seed, i), rv, sizes[i])
        return int(np.count_nonzero(np.all(u > p, axis=1)))

    workers = min(8, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        hits = sum(pool.map(count_hits, range(len(sizes))))
    p_hat = hits / n_draws
    hw = _Z_999 * np.sqrt(max(p_hat * (1.0 - p_hat), 1e-300) / n_draws)
    return CornerReference(value=p_hat, half_width=float(hw), n_draws=n_draws)
