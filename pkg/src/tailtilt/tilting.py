"""Exponential tilting families and the solvers for the optimal tilt.

Each family fixes a latent base measure P, a statistic T with cumulant
ψ(θ) = ln E_P[e^{θ·T}], and the tilted measure Q_θ with dQ_θ/dP =
e^{θ·T − ψ(θ)}. An importance-sampling estimator draws from Q_θ and weighs
by the inverse ratio, so every tilted draw carries log dP/dQ_θ =
ψ(θ) − θ·T. The conjugate measure Q̄_θ used in the optimality condition is
simply Q_{−θ}, and ``sample_tilted`` exposes it through a flag that negates
θ on the same code path, which makes the two bit-identical by construction.

Five families are provided:

``trunc-exp-product``
    d independent uniforms, each tilted to density θ_i e^{θ_i v}/(e^{θ_i}−1).
``mvn-shift``
    a centered normal vector with covariance Σ, tilted to mean Σθ.
``t-gamma-normal``
    the latent (Y, Z) pair behind a multivariate t vector X = Z √(ν/Y),
    with statistic W = √(Y/ν) Z − (Y/ν) a*, so that {X > a*} = {W > 0}.
``clayton-mo``
    the frailty construction of a Clayton corner: a gamma frailty W plus d
    uniforms, with θ = (θ_w, θ_1, …, θ_d).
``hazard-rate``
    d uniforms sharing one scalar twist of the hazard −ln(1−v), density
    (1−θ)(1−v)^{−θ} per component.

The solvers minimize the second-moment proxy G(θ) = E_P[1{A} e^{−θ·T+ψ(θ)}]:
``solve_theta_saa`` freezes a pilot sample and runs damped Newton on the
resulting deterministic convex surface, ``solve_theta_gaussian_tallis``
solves the Gaussian first-order condition through the closed-form truncated
normal moment, ``solve_theta_large_deviation`` minimizes ψ itself for the t
family, and ``solve_hrt_theta`` handles the scalar hazard-rate twist.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import logsumexp, ndtr, softmax

from .errors import (
    DegeneratePilotError,
    DomainError,
    ParameterError,
    ShapeError,
    SolverError,
)
from .oracle import rect_prob_gaussian
from .randkit import RngStream, _cholesky, _trunc_exp_inverse_cdf, sample_gamma, sample_mvn

__all__ = [
    "TiltFamily",
    "TiltedSample",
    "Pilot",
    "TiltSolution",
    "psi",
    "grad_psi",
    "hess_psi",
    "sample_tilted",
    "G_hat",
    "draw_pilot",
    "first_order_gap",
    "solve_theta_saa",
    "truncated_mvn_first_moment",
    "solve_theta_gaussian_tallis",
    "solve_theta_large_deviation",
    "solve_hrt_theta",
]

_KINDS = ("trunc-exp-product", "mvn-shift", "t-gamma-normal", "clayton-mo", "hazard-rate")
_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class TiltFamily:
    """One of the five tilting families, with its fixed shape parameters.

    ``d`` is the number of model coordinates. The tilt vector has length
    ``d`` for most kinds, ``d + 1`` for ``clayton-mo`` (frailty coordinate
    first), and 1 for ``hazard-rate`` (a single shared twist).
    """

    kind: str
    d: int
    sigma: np.ndarray | None = field(default=None, repr=False)
    nu: float = 0.0
    delta: float = 0.0
    a_star: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown tilting family {self.kind!r}")
        if self.d < 1:
            raise ParameterError(f"dimension must be at least 1, got {self.d}")
        if self.kind in ("mvn-shift", "t-gamma-normal"):
            if self.sigma is None:
                raise ParameterError(f"{self.kind} requires a covariance matrix")
            sigma = np.asarray(self.sigma, dtype=np.float64)
            if sigma.shape != (self.d, self.d):
                raise ShapeError(f"covariance shape {sigma.shape} does not match d={self.d}")
            if not np.allclose(sigma, sigma.T, atol=1e-12):
                raise ParameterError("covariance must be symmetric")
            _cholesky(sigma)
            object.__setattr__(self, "sigma", sigma)
        if self.kind == "t-gamma-normal":
            if not self.nu > 0:
                raise ParameterError(f"degrees of freedom must be positive, got {self.nu}")
            if self.a_star is None:
                raise ParameterError("t-gamma-normal requires the corner point a_star")
            a = np.atleast_1d(np.asarray(self.a_star, dtype=np.float64))
            if a.shape != (self.d,):
                raise ShapeError(f"a_star shape {a.shape} does not match d={self.d}")
            if not np.all(np.isfinite(a)):
                raise ParameterError("a_star must be finite")
            object.__setattr__(self, "a_star", a)
        if self.kind == "clayton-mo" and not self.delta > 0:
            raise ParameterError(f"clayton-mo parameter must be positive, got {self.delta}")

    @property
    def theta_dim(self) -> int:
        if self.kind == "clayton-mo":
            return self.d + 1
        if self.kind == "hazard-rate":
            return 1
        return self.d

    def label(self) -> str:
        if self.kind == "t-gamma-normal":
            return f"t-gamma-normal(nu={self.nu:g}, d={self.d})"
        if self.kind == "clayton-mo":
            return f"clayton-mo(delta={self.delta:g}, d={self.d})"
        return f"{self.kind}(d={self.d})"


@dataclass(frozen=True)
class TiltedSample:
    """A batch of draws from Q_θ (rows) with their importance weights.

    ``x`` is the model-scale output: the uniforms themselves for
    ``trunc-exp-product`` and ``hazard-rate``, the normal vector for
    ``mvn-shift``, the t vector for ``t-gamma-normal``, and the copula-scale
    vector for ``clayton-mo``. ``stat`` holds the tilting statistic entering
    the weight, and ``log_lr`` is log dP/dQ_θ at each row. ``latent`` keeps
    the raw pieces, such as (Y, Z) for the t family or (W, V) for the
    frailty construction.
    """

    x: np.ndarray
    stat: np.ndarray
    log_lr: np.ndarray
    latent: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class Pilot:
    """A frozen pilot: statistic rows and log weights of the event hits.

    ``size`` counts every draw of the pilot, hits or not; weighted averages
    over the hit rows divide by it. ``log_weight`` is log dP/dQ at each hit
    under the proposal the pilot was drawn from.
    """

    stat: np.ndarray
    log_weight: np.ndarray
    size: int
    hits: int
    proposal_theta: np.ndarray


@dataclass(frozen=True)
class TiltSolution:
    """Output of a tilt solver, with enough diagnostics to audit it."""

    theta_o: np.ndarray
    method: str
    residual_norm: float
    iterations: int
    pilot_size: int
    pilot_hits: int
    G_hat_at_solution: float | None
    converged: bool
    reflected: bool = False

    def report(self) -> str:
        lines = [
            f"method: {self.method}",
            "theta_o: " + np.array2string(self.theta_o, precision=6, separator=", "),
            f"residual_norm: {self.residual_norm:.6e}",
            f"iterations: {self.iterations}",
            f"pilot: size={self.pilot_size} hits={self.pilot_hits}",
            f"converged: {self.converged}",
        ]
        if self.G_hat_at_solution is not None:
            lines.insert(2, f"G_hat: {self.G_hat_at_solution:.6e}")
        if self.reflected:
            lines.append("reflected: true")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# cumulant, gradient, Hessian


def _as_theta(f: TiltFamily, theta) -> np.ndarray:
    th = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if th.shape != (f.theta_dim,):
        raise ShapeError(f"tilt vector shape {th.shape} does not match {f.label()}")
    if not np.all(np.isfinite(th)):
        raise DomainError(f"tilt vector must be finite, got {th}")
    return th


def _t_ellipsoid_margin(f: TiltFamily, th: np.ndarray) -> float:
    # positive inside the domain of the t family's cumulant
    return 1.0 + 2.0 * (th @ f.a_star) / f.nu - (th @ f.sigma @ th) / f.nu


def _check_domain(f: TiltFamily, th: np.ndarray) -> None:
    if f.kind == "t-gamma-normal":
        margin = _t_ellipsoid_margin(f, th)
        if not margin > 0.0:
            raise DomainError(
                "tilt outside the t family's ellipsoid: "
                f"1 + 2 theta'a*/nu - theta'Sigma theta/nu = {margin:.6g} must be positive"
            )
    elif f.kind == "clayton-mo":
        if not th[0] < 1.0:
            raise DomainError(f"frailty tilt must satisfy theta_w < 1, got {th[0]:.6g}")
    elif f.kind == "hazard-rate":
        if not th[0] < 1.0:
            raise DomainError(f"hazard twist must satisfy theta < 1, got {th[0]:.6g}")


def _psi_te(t: np.ndarray) -> np.ndarray:
    """ln((e^t - 1)/t) per component, stable across signs and magnitudes."""
    t = np.asarray(t, dtype=np.float64)
    a = np.abs(t)
    small = a < 1e-4
    asafe = np.where(small, 1.0, a)
    big = asafe + np.log1p(-np.exp(-asafe)) - np.log(asafe)
    series = t / 2.0 + t * t / 24.0 - t**4 / 2880.0
    return np.where(small, series, big + np.minimum(t, 0.0))


def _dpsi_te(t: np.ndarray) -> np.ndarray:
    """Mean of the tilted uniform, e^t/(e^t - 1) - 1/t."""
    t = np.asarray(t, dtype=np.float64)
    small = np.abs(t) < 1e-4
    tsafe = np.where(small, 1.0, t)
    with np.errstate(over="ignore"):
        exact = 1.0 / (-np.expm1(-tsafe)) - 1.0 / tsafe
    series = 0.5 + t / 12.0 - t**3 / 720.0
    return np.where(small, series, exact)


def _d2psi_te(t: np.ndarray) -> np.ndarray:
    """Variance of the tilted uniform, 1/t^2 - e^t/(e^t - 1)^2."""
    t = np.asarray(t, dtype=np.float64)
    small = np.abs(t) < 0.05
    tsafe = np.where(small, 1.0, t)
    half = np.minimum(np.abs(tsafe) / 2.0, 400.0)
    with np.errstate(over="ignore"):
        exact = 1.0 / (tsafe * tsafe) - 1.0 / (4.0 * np.sinh(half) ** 2)
    series = 1.0 / 12.0 - t * t / 240.0 + t**4 / 6048.0
    return np.where(small, series, exact)


def psi(f: TiltFamily, theta) -> float:
    """Cumulant of the tilting statistic; zero at the zero tilt."""
    th = _as_theta(f, theta)
    _check_domain(f, th)
    if f.kind == "trunc-exp-product":
        return float(np.sum(_psi_te(th)))
    if f.kind == "mvn-shift":
        return float(0.5 * th @ f.sigma @ th)
    if f.kind == "t-gamma-normal":
        return float(-(f.nu / 2.0) * np.log(_t_ellipsoid_margin(f, th)))
    if f.kind == "clayton-mo":
        return float(-np.log1p(-th[0]) / f.delta + np.sum(_psi_te(th[1:])))
    return float(-f.d * np.log1p(-th[0]))


def grad_psi(f: TiltFamily, theta) -> np.ndarray:
    """Gradient of the cumulant, the tilted mean of the statistic."""
    th = _as_theta(f, theta)
    _check_domain(f, th)
    if f.kind == "trunc-exp-product":
        return _dpsi_te(th)
    if f.kind == "mvn-shift":
        return f.sigma @ th
    if f.kind == "t-gamma-normal":
        return (f.sigma @ th - f.a_star) / _t_ellipsoid_margin(f, th)
    if f.kind == "clayton-mo":
        out = np.empty(f.d + 1)
        out[0] = 1.0 / (f.delta * (1.0 - th[0]))
        out[1:] = _dpsi_te(th[1:])
        return out
    return np.array([f.d / (1.0 - th[0])])


def hess_psi(f: TiltFamily, theta) -> np.ndarray:
    """Hessian of the cumulant, the tilted covariance of the statistic."""
    th = _as_theta(f, theta)
    _check_domain(f, th)
    if f.kind == "trunc-exp-product":
        return np.diag(_d2psi_te(th))
    if f.kind == "mvn-shift":
        return f.sigma.copy()
    if f.kind == "t-gamma-normal":
        margin = _t_ellipsoid_margin(f, th)
        r = (f.sigma @ th - f.a_star) / margin
        return f.sigma / margin + (2.0 / f.nu) * np.outer(r, r)
    if f.kind == "clayton-mo":
        diag = np.empty(f.d + 1)
        diag[0] = 1.0 / (f.delta * (1.0 - th[0]) ** 2)
        diag[1:] = _d2psi_te(th[1:])
        return np.diag(diag)
    return np.array([[f.d / (1.0 - th[0]) ** 2]])


# ---------------------------------------------------------------------------
# tilted sampling


def sample_tilted(
    f: TiltFamily, s: RngStream, theta, n: int = 1, *, conjugate: bool = False
) -> TiltedSample:
    """Draw ``n`` rows from Q_θ, or from Q̄_θ = Q_{−θ} when ``conjugate``.

    At the zero tilt every family consumes the stream exactly like the
    matching crude sampler and reproduces its draws bit for bit, with all
    log likelihood ratios equal to zero.
    """
    th = _as_theta(f, theta)
    _check_domain(f, th)
    if conjugate:
        th = -th
        _check_domain(f, th)
    if n < 1:
        raise ParameterError(f"sample size must be at least 1, got {n}")

    if f.kind == "trunc-exp-product":
        u = s.uniforms(n * f.d).reshape(n, f.d)
        v = np.empty_like(u)
        for j in range(f.d):
            v[:, j] = _trunc_exp_inverse_cdf(u[:, j], th[j])
        x, stat, latent = v, v, (v,)
    elif f.kind == "mvn-shift":
        x = sample_mvn(s, f.sigma @ th, f.sigma, n)
        stat, latent = x, (x,)
    elif f.kind == "t-gamma-normal":
        rate = _t_ellipsoid_margin(f, th) / 2.0
        y = sample_gamma(s, f.nu / 2.0, rate, n)
        z = sample_mvn(s, 0.0, f.sigma, n)
        r = np.sqrt(y / f.nu)
        z = z + r[:, None] * (f.sigma @ th)[None, :]
        stat = r[:, None] * z - (y / f.nu)[:, None] * f.a_star[None, :]
        x = z * np.sqrt(f.nu / y)[:, None]
        latent = (y, z)
    elif f.kind == "clayton-mo":
        w = sample_gamma(s, 1.0 / f.delta, 1.0 - th[0], n)
        u = s.uniforms(n * f.d).reshape(n, f.d)
        v = np.empty_like(u)
        for j in range(f.d):
            v[:, j] = _trunc_exp_inverse_cdf(u[:, j], th[1 + j])
        x = (1.0 - np.log(v) / w[:, None]) ** (-1.0 / f.delta)
        stat = np.column_stack([w, v])
        latent = (w, v)
    else:
        u = s.uniforms(n * f.d).reshape(n, f.d)
        if th[0] == 0.0:
            v = u
        else:
            v = 1.0 - (1.0 - u) ** (1.0 / (1.0 - th[0]))
            v = np.minimum(v, 1.0 - 1e-16)
        stat = -np.sum(np.log1p(-v), axis=1)[:, None]
        x, latent = v, (v,)

    log_lr = psi(f, th) - stat @ th
    return TiltedSample(x=x, stat=stat, log_lr=log_lr, latent=latent)


# ---------------------------------------------------------------------------
# pilot machinery and the second-moment proxy


def draw_pilot(f: TiltFamily, indicator, s: RngStream, n: int, proposal_theta) -> Pilot:
    """Draw ``n`` rows from Q at ``proposal_theta`` and keep the event hits."""
    th = _as_theta(f, proposal_theta)
    ts = sample_tilted(f, s, th, n)
    keep = np.asarray(indicator(ts), dtype=bool)
    if keep.shape != (n,):
        raise ShapeError(f"indicator returned shape {keep.shape} for {n} draws")
    return Pilot(
        stat=ts.stat[keep],
        log_weight=ts.log_lr[keep],
        size=n,
        hits=int(np.count_nonzero(keep)),
        proposal_theta=th,
    )


def G_hat(f: TiltFamily, theta, pilot: Pilot) -> float:
    """Pilot average of 1{A} e^{−θ·T + ψ(θ)}, reweighted to the base measure.

    For a pilot drawn at the zero tilt the weights are all one and the value
    at θ = 0 is the pilot's empirical event probability.
    """
    th = _as_theta(f, theta)
    _check_domain(f, th)
    if pilot.size == 0 or pilot.hits == 0:
        raise DegeneratePilotError(
            f"pilot carries no event hits ({pilot.hits} of {pilot.size} draws)"
        )
    return float(np.exp(_log_g(f, th, pilot)))


def _log_g(f: TiltFamily, th: np.ndarray, pilot: Pilot) -> float:
    return float(
        psi(f, th)
        + logsumexp(pilot.log_weight - pilot.stat @ th)
        - np.log(pilot.size)
    )


def first_order_gap(f: TiltFamily, theta, pilot: Pilot) -> tuple[np.ndarray, np.ndarray]:
    """Optimality-condition gap on a pilot, with its standard errors.

    Returns ``lhs − rhs`` where the left side is the self-normalized pilot
    estimate of the event-conditional statistic mean under the conjugate
    measure at ``theta`` and the right side is the cumulant gradient, along
    with a componentwise standard error for the left side.
    """
    th = _as_theta(f, theta)
    if pilot.hits == 0:
        raise DegeneratePilotError("pilot carries no event hits")
    p = softmax(pilot.log_weight - pilot.stat @ th)
    lhs = p @ pilot.stat
    centered = pilot.stat - lhs[None, :]
    se = np.sqrt((p * p) @ (centered * centered))
    return lhs - grad_psi(f, th), se


# ---------------------------------------------------------------------------
# coarse pre-tilt by conditional-mean matching


def _match_te_mean(m: np.ndarray) -> np.ndarray:
    """Per-component tilt whose tilted-uniform mean equals m."""
    m = np.clip(np.asarray(m, dtype=np.float64), 1e-9, 1.0 - 1e-9)
    out = np.empty_like(m)
    for i, mi in enumerate(m):
        if abs(mi - 0.5) < 1e-9:
            out[i] = 0.0
            continue
        lo, hi = -2.0, 2.0
        while _dpsi_te(np.array([hi]))[0] < mi:
            hi *= 2.0
        while _dpsi_te(np.array([lo]))[0] > mi:
            lo *= 2.0
        out[i] = brentq(lambda t: float(_dpsi_te(np.array([t]))[0]) - mi, lo, hi, xtol=1e-10)
    return out


def _match_mean(f: TiltFamily, m: np.ndarray) -> np.ndarray:
    """Solve grad_psi(θ) = m for θ, the moment-matching pre-tilt."""
    if f.kind == "trunc-exp-product":
        return _match_te_mean(m)
    if f.kind == "mvn-shift":
        return np.linalg.solve(f.sigma, m)
    if f.kind == "t-gamma-normal":
        # grad equals m at θ = Σ^{-1}(a* + c m) where the scalar c must
        # reproduce the ellipsoid margin; a sign change always exists
        def gap(c: float) -> float:
            th = np.linalg.solve(f.sigma, f.a_star + c * m)
            return _t_ellipsoid_margin(f, th) - c

        hi = 2.0
        while gap(hi) > 0.0:
            hi *= 2.0
            if hi > 2.0**40:
                raise SolverError("moment matching for the t family did not bracket")
        c = brentq(gap, 0.0, hi, xtol=1e-12)
        return np.linalg.solve(f.sigma, f.a_star + c * m)
    if f.kind == "clayton-mo":
        out = np.empty(f.d + 1)
        out[0] = min(max(1.0 - 1.0 / (f.delta * max(m[0], 1e-12)), -5.0), 0.98)
        out[1:] = _match_te_mean(m[1:])
        return out
    return np.array([min(max(1.0 - f.d / max(m[0], 1e-12), 0.0), 0.98)])


def _rejection_stat_mean(
    f: TiltFamily, indicator, s: RngStream, n_pre: int, min_hits: int
) -> tuple[np.ndarray | None, int]:
    """Event-conditional mean of the statistic from crude draws.

    Draws in chunks at the zero tilt, escalating to ten times ``n_pre``
    before giving up. Returns (mean, hits) with mean None when too few
    draws landed in the event.
    """
    zero = np.zeros(f.theta_dim)
    total = 0
    hits = 0
    acc = np.zeros(f.theta_dim)
    budget = 10 * n_pre
    chunk = 100_000
    while total < n_pre or (hits < min_hits and total < budget):
        m = min(chunk, budget - total)
        ts = sample_tilted(f, s, zero, m)
        keep = np.asarray(indicator(ts), dtype=bool)
        hits += int(np.count_nonzero(keep))
        acc += ts.stat[keep].sum(axis=0)
        total += m
    if hits < min_hits:
        return None, hits
    return acc / hits, hits


# ---------------------------------------------------------------------------
# sample-average-approximation solver


def _fraction_to_boundary(f: TiltFamily, th: np.ndarray, step: np.ndarray) -> float:
    """Largest multiple of ``step`` from ``th`` staying inside the domain."""
    if f.kind == "t-gamma-normal":
        c2 = -(step @ f.sigma @ step) / f.nu
        c1 = 2.0 * (step @ (f.a_star - f.sigma @ th)) / f.nu
        c0 = _t_ellipsoid_margin(f, th)
        if c2 >= -1e-300:
            return np.inf if c1 >= 0 else -c0 / c1
        disc = c1 * c1 - 4.0 * c2 * c0
        return (-c1 - np.sqrt(disc)) / (2.0 * c2)
    if f.kind in ("clayton-mo", "hazard-rate") and step[0] > 0.0:
        return (1.0 - th[0]) / step[0]
    return np.inf


def _newton_minimize_log_g(
    f: TiltFamily, pilot: Pilot, theta0: np.ndarray, tol: float, max_iters: int
) -> tuple[np.ndarray, float, int, bool]:
    """Damped Newton descent of log Ĝ from ``theta0``.

    Returns (theta, gradient norm of log Ĝ, iterations, converged). The
    surface is convex, so the Hessian only needs jitter against roundoff.
    """
    stat = pilot.stat
    lw = pilot.log_weight
    log_n = np.log(pilot.size)

    def value(th: np.ndarray) -> float:
        return psi(f, th) + float(logsumexp(lw - stat @ th)) - log_n

    th = theta0.astype(np.float64).copy()
    fval = value(th)
    gnorm = np.inf
    for it in range(1, max_iters + 1):
        p = softmax(lw - stat @ th)
        mu = p @ stat
        g = grad_psi(f, th) - mu
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol:
            return th, gnorm, it - 1, True
        cov = (stat * p[:, None]).T @ stat - np.outer(mu, mu)
        H = hess_psi(f, th) + 0.5 * (cov + cov.T)
        jitter = 0.0
        while True:
            try:
                d = np.linalg.solve(H + jitter * np.eye(len(th)), -g)
                if np.all(np.isfinite(d)):
                    break
            except np.linalg.LinAlgError:
                pass
            jitter = max(jitter * 100.0, 1e-10 * max(np.trace(H), 1.0))
            if jitter > 1e6 * max(np.trace(H), 1.0):
                return th, gnorm, it, False
        step = min(1.0, 0.95 * _fraction_to_boundary(f, th, d))
        slope = float(g @ d)
        while step > 1e-14:
            trial = th + step * d
            tval = value(trial)
            if tval <= fval + 1e-4 * step * slope:
                th, fval = trial, tval
                break
            step /= 2.0
        else:
            return th, gnorm, it, False
    p = softmax(lw - stat @ th)
    g = grad_psi(f, th) - p @ stat
    gnorm = float(np.linalg.norm(g))
    return th, gnorm, max_iters, gnorm <= tol


def solve_theta_saa(
    f: TiltFamily,
    indicator,
    s: RngStream,
    *,
    n_pilot: int = 20_000,
    pilot_min_hits: int = 200,
    tol: float = 1e-6,
    max_iters: int = 100,
    n_pre: int = 200_000,
    pre_min_hits: int = 50,
    pre_theta=None,
    fallback_theta=None,
    reflected: bool = False,
) -> TiltSolution:
    """Minimize the pilot estimate of the second-moment proxy G.

    The pilot proposal comes from a coarse pre-tilt: the tilt whose
    statistic mean matches the event-conditional mean estimated by crude
    rejection. ``pre_theta`` overrides that stage; when rejection cannot
    reach ``pre_min_hits`` the solver falls back to ``fallback_theta``, or
    to the large-deviation tilt for the t family, and otherwise raises.
    ``tol`` bounds the gradient norm of log Ĝ, so it is relative to Ĝ.

    ``indicator`` receives a :class:`TiltedSample` and must return one
    boolean per row; it should already describe an upper-corner event, with
    any reflection applied by the caller and recorded through ``reflected``.
    """
    hits_pre = 0
    if pre_theta is not None:
        theta_hat = _as_theta(f, pre_theta)
        _check_domain(f, theta_hat)
    else:
        mean, hits_pre = _rejection_stat_mean(f, indicator, s, n_pre, pre_min_hits)
        if mean is not None:
            theta_hat = _match_mean(f, mean)
        elif fallback_theta is not None:
            theta_hat = _as_theta(f, fallback_theta)
            _check_domain(f, theta_hat)
        elif f.kind == "t-gamma-normal":
            theta_hat = solve_theta_large_deviation(f).theta_o
        else:
            raise DegeneratePilotError(
                f"crude pre-stage saw {hits_pre} event hits and no fallback tilt was given"
            )

    pilot = draw_pilot(f, indicator, s, n_pilot, theta_hat)
    if pilot.hits < pilot_min_hits:
        extra = draw_pilot(f, indicator, s, 3 * n_pilot, theta_hat)
        pilot = Pilot(
            stat=np.vstack([pilot.stat, extra.stat]),
            log_weight=np.concatenate([pilot.log_weight, extra.log_weight]),
            size=pilot.size + extra.size,
            hits=pilot.hits + extra.hits,
            proposal_theta=theta_hat,
        )
    if pilot.hits < pilot_min_hits:
        raise DegeneratePilotError(
            f"pilot proposal produced {pilot.hits} event hits of {pilot.size} draws, "
            f"below the required {pilot_min_hits}"
        )

    theta, gnorm, iters, converged = _newton_minimize_log_g(f, pilot, theta_hat, tol, max_iters)
    g_val = float(np.exp(_log_g(f, theta, pilot)))
    return TiltSolution(
        theta_o=theta,
        method="saa",
        residual_norm=gnorm * g_val,
        iterations=iters,
        pilot_size=pilot.size,
        pilot_hits=pilot.hits,
        G_hat_at_solution=g_val,
        converged=converged,
        reflected=reflected,
    )


# ---------------------------------------------------------------------------
# Gaussian corner: closed-form moment and deterministic Newton


def _check_correlation(sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.float64)
    d = sigma.shape[0]
    if sigma.shape != (d, d) or d < 1 or d > 4:
        raise ShapeError(f"need a square matrix of dimension 1..4, got shape {sigma.shape}")
    if not np.allclose(sigma, sigma.T, atol=1e-12):
        raise ParameterError("matrix must be symmetric")
    if not np.allclose(np.diag(sigma), 1.0, atol=1e-12):
        raise ParameterError("matrix must have a unit diagonal")
    _cholesky(sigma)
    return sigma


def _norm_pdf(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def truncated_mvn_first_moment(sigma, lower, theta) -> np.ndarray:
    """E[V | V > lower] componentwise for V ~ MN(−Σθ, Σ).

    Uses the closed-form first moment of a truncated centered normal: each
    coordinate contributes a normal density at its shifted threshold times
    the survival probability of the remaining coordinates conditioned on
    that threshold. Dimensions up to four are supported, the conditional
    survivals coming from the rectangle oracle beyond the bivariate case.
    """
    sigma = _check_correlation(sigma)
    d = sigma.shape[0]
    lower = np.broadcast_to(np.asarray(lower, dtype=np.float64), (d,))
    th = np.broadcast_to(np.asarray(theta, dtype=np.float64), (d,))
    shift = sigma @ th
    b = lower + shift
    den = rect_prob_gaussian(sigma, b, "upper")
    if not den > 0.0:
        raise SolverError(f"survival probability underflowed at thresholds {b}")
    w = np.empty(d)
    for q in range(d):
        pdf_q = float(_norm_pdf(b[q]))
        if d == 1:
            w[q] = pdf_q
            continue
        rest = [i for i in range(d) if i != q]
        r = sigma[rest, q]
        scale = np.sqrt(1.0 - r * r)
        b_cond = (b[rest] - r * b[q]) / scale
        if d == 2:
            surv = float(ndtr(-b_cond[0]))
        else:
            corr = (sigma[np.ix_(rest, rest)] - np.outer(r, r)) / np.outer(scale, scale)
            np.fill_diagonal(corr, 1.0)
            surv = rect_prob_gaussian(corr, b_cond, "upper")
        w[q] = pdf_q * surv
    return sigma @ w / den - shift


def solve_theta_gaussian_tallis(
    sigma, a_star, *, tol: float = 1e-10, max_iters: int = 100
) -> TiltSolution:
    """Solve the Gaussian upper-corner optimality condition deterministically.

    The condition equates the event-conditional mean under the conjugate
    shifted normal with Σθ. Damped Newton on that residual with a central
    finite-difference Jacobian converges in a handful of steps; if it
    stalls on an exchangeable problem the equation collapses to one scalar
    unknown and is bracketed instead.
    """
    sigma = _check_correlation(sigma)
    d = sigma.shape[0]
    a = np.broadcast_to(np.asarray(a_star, dtype=np.float64), (d,)).copy()

    def resid(th: np.ndarray) -> np.ndarray:
        return truncated_mvn_first_moment(sigma, a, th) - sigma @ th

    theta = np.linalg.solve(sigma, a)
    r = resid(theta)
    iters = 0
    for _ in range(max_iters):
        rnorm = float(np.linalg.norm(r))
        if rnorm <= tol:
            break
        J = np.empty((d, d))
        for j in range(d):
            h = 1e-6 * (1.0 + abs(theta[j]))
            e = np.zeros(d)
            e[j] = h
            J[:, j] = (resid(theta + e) - resid(theta - e)) / (2.0 * h)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        improved = False
        while lam > 1e-8:
            trial = theta + lam * step
            rt = resid(trial)
            if np.linalg.norm(rt) < rnorm:
                theta, r = trial, rt
                improved = True
                break
            lam /= 2.0
        iters += 1
        if not improved:
            break

    rnorm = float(np.linalg.norm(r))
    if rnorm > tol:
        off = sigma[~np.eye(d, dtype=bool)]
        exchangeable = (d == 1 or np.ptp(off) < 1e-12) and np.ptp(a) < 1e-12
        if exchangeable:
            ones = np.ones(d)

            def scalar_resid(t: float) -> float:
                return float(resid(t * ones)[0])

            hi = max(2.0 * abs(theta[0]), 1.0)
            lo = -hi
            while scalar_resid(lo) * scalar_resid(hi) > 0.0 and hi < 1024.0:
                lo, hi = lo * 2.0, hi * 2.0
            if scalar_resid(lo) * scalar_resid(hi) <= 0.0:
                t = brentq(scalar_resid, lo, hi, xtol=1e-12)
                theta = t * ones
                r = resid(theta)
                rnorm = float(np.linalg.norm(r))
                iters += 1

    g_exact = float(np.exp(theta @ sigma @ theta) * rect_prob_gaussian(sigma, a + sigma @ theta))
    return TiltSolution(
        theta_o=theta,
        method="tallis-newton",
        residual_norm=rnorm,
        iterations=iters,
        pilot_size=0,
        pilot_hits=0,
        G_hat_at_solution=g_exact,
        converged=rnorm <= tol,
    )


# ---------------------------------------------------------------------------
# large-deviation tilt for the t family


def solve_theta_large_deviation(f: TiltFamily, a_star=None) -> TiltSolution:
    """Minimize the t family's cumulant over the nonnegative orthant.

    The cumulant decreases with the ellipsoid margin, so this is the
    quadratic program min ½θ'Σθ − θ'a* subject to θ ≥ 0, solved exactly by
    enumerating active sets (the dimension is at most a handful). With Σ
    equal to the identity the answer is a* itself.
    """
    if f.kind != "t-gamma-normal":
        raise ParameterError(f"large-deviation tilt applies to t-gamma-normal, not {f.kind}")
    a = f.a_star if a_star is None else np.atleast_1d(np.asarray(a_star, dtype=np.float64))
    if a.shape != (f.d,):
        raise ShapeError(f"corner shape {a.shape} does not match d={f.d}")
    if np.any(a <= 0.0):
        raise DomainError(f"corner must be componentwise positive, got {a}")

    d = f.d
    tried = 0
    for mask in range(1, 2**d):
        idx = [i for i in range(d) if mask >> i & 1]
        tried += 1
        sub = np.linalg.solve(f.sigma[np.ix_(idx, idx)], a[idx])
        if np.any(sub < -1e-12):
            continue
        theta = np.zeros(d)
        theta[idx] = np.maximum(sub, 0.0)
        slack = f.sigma @ theta - a
        rest = [i for i in range(d) if i not in idx]
        if rest and np.any(slack[rest] < -1e-10):
            continue
        resid = float(np.linalg.norm(np.minimum(theta, slack), np.inf))
        return TiltSolution(
            theta_o=theta,
            method="large-deviation",
            residual_norm=resid,
            iterations=tried,
            pilot_size=0,
            pilot_hits=0,
            G_hat_at_solution=None,
            converged=True,
        )
    raise SolverError("no active set satisfied the optimality conditions")


# ---------------------------------------------------------------------------
# scalar hazard-rate twist


def solve_hrt_theta(
    f: TiltFamily,
    indicator,
    s: RngStream,
    *,
    n_pilot: int = 20_000,
    pilot_min_hits: int = 200,
    n_pre: int = 200_000,
    pre_min_hits: int = 50,
    pre_theta=None,
) -> tuple[float, TiltSolution]:
    """Minimize the pilot second-moment proxy over the scalar twist (0, 1).

    Same pilot scheme as :func:`solve_theta_saa`, then a bounded scalar
    minimization of log Ĝ. Convergence is judged on the argument to within
    the minimizer's tolerance, since a boundary minimum (an event needing
    no twist) legitimately keeps a nonzero gradient.
    """
    if f.kind != "hazard-rate":
        raise ParameterError(f"hazard twist solver applies to hazard-rate, not {f.kind}")
    if pre_theta is not None:
        theta_hat = _as_theta(f, pre_theta)
        _check_domain(f, theta_hat)
    else:
        mean, hits_pre = _rejection_stat_mean(f, indicator, s, n_pre, pre_min_hits)
        if mean is None:
            raise DegeneratePilotError(
                f"crude pre-stage saw {hits_pre} event hits and no pre_theta was given"
            )
        theta_hat = _match_mean(f, mean)

    pilot = draw_pilot(f, indicator, s, n_pilot, theta_hat)
    if pilot.hits < pilot_min_hits:
        raise DegeneratePilotError(
            f"pilot proposal produced {pilot.hits} event hits of {pilot.size} draws, "
            f"below the required {pilot_min_hits}"
        )

    def value(t: float) -> float:
        return _log_g(f, np.array([t]), pilot)

    res = minimize_scalar(value, bounds=(1e-9, 1.0 - 1e-9), method="bounded",
                          options={"xatol": 1e-9, "maxiter": 200})
    theta = float(res.x)
    p = softmax(pilot.log_weight - pilot.stat[:, 0] * theta)
    grad = float(grad_psi(f, np.array([theta]))[0] - p @ pilot.stat[:, 0])
    g_val = float(np.exp(res.fun))
    solution = TiltSolution(
        theta_o=np.array([theta]),
        method="saa",
        residual_norm=abs(grad) * g_val,
        iterations=int(getattr(res, "nit", res.nfev)),
        pilot_size=pilot.size,
        pilot_hits=pilot.hits,
        G_hat_at_solution=g_val,
        converged=bool(res.success),
    )
    return theta, solution
