"""Corner-probability estimators and the replication engine.

A corner event is estimated by one of five methods. ``naive`` averages the
plain indicator over crude draws. ``is-t1`` tilts the uniform block feeding
the conditional-inverse sampler with a product of truncated exponentials,
which works for every model including vines. ``is-t2`` tilts the model's
own latent representation (mean shift for the Gaussian copula, the
gamma-normal pair for the t copula, the frailty construction for Clayton).
``is-t3`` twists the hazard of each uniform with one shared scalar.
``is-ld`` samples the t family at its large-deviation point.

Every method draws replication r from ``make_stream(seed, r)``, so results
are bit-identical no matter how replications are scheduled across threads.
With the tilt vector at zero the importance samplers consume the stream
exactly like the crude sampler on the matching route and reproduce its
estimate bit for bit.

Lower corners reuse the upper-corner machinery. The trunc-exp family simply
tilts toward zero (its tilt space is two-sided), the hazard twist feeds
reflected uniforms through the inverse map, and the elliptical families
solve the mirrored corner at the negated threshold, which has the same
probability by symmetry. Mirrored constructions are recorded on the
solution's ``reflected`` flag. The frailty tilt covers upper corners only.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .copulas import (
    CopulaSpec,
    CornerEvent,
    RVineSpec,
    event_uniform_thresholds,
    rosenblatt_inverse,
    sample_copula_uniforms,
    sample_vine_uniforms,
    transform_event,
    vine_rosenblatt_inverse,
)
from .errors import ConfigError, DomainError, ParameterError
from .randkit import make_stream
from .tilting import (
    TiltFamily,
    TiltSolution,
    psi,
    sample_tilted,
    solve_hrt_theta,
    solve_theta_gaussian_tallis,
    solve_theta_large_deviation,
    solve_theta_saa,
)

__all__ = [
    "ExperimentConfig",
    "EstimateResult",
    "estimate_crude",
    "estimate_is",
    "estimate_hrt",
    "replicate",
    "solve_event_theta",
    "sd_eff",
    "wnrv",
    "SOLVER_STREAM",
]

_METHODS = ("naive", "is-t1", "is-t2", "is-t3", "is-ld")

# stream id reserved for solver pilots, far above any sane replication count
SOLVER_STREAM = 999_983


@dataclass(frozen=True)
class ExperimentConfig:
    """One estimation task: model, corner event, method, and budget.

    ``theta`` is the tilt to use; leave it None to have :func:`replicate`
    solve for it. The crude ``route`` selects between the model's direct
    sampler and the conditional-inverse chain; importance samplers imply
    their own route and ignore it.
    """

    model: CopulaSpec | RVineSpec
    event: CornerEvent
    method: str = "naive"
    n: int = 500
    M: int = 5000
    seed: int = 0
    theta: object = None
    route: str = "direct"

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose one of {_METHODS}")
        if self.n < 1 or self.M < 1:
            raise ConfigError(f"need n >= 1 and M >= 1, got n={self.n}, M={self.M}")
        if self.route not in ("direct", "cim"):
            raise ConfigError(f"unknown route {self.route!r}")


@dataclass(frozen=True)
class EstimateResult:
    """Aggregated estimate with its replication spread and timing.

    ``sd`` is the standard deviation of the M per-replication estimates;
    with a single replication it falls back to the within-run standard
    error and ``sd_within_run`` is set. ``wnrv`` uses the estimate itself
    as reference unless :func:`replicate` was given one.
    """

    u_hat: float
    sd: float
    n: int
    reps: int
    seconds: float
    wnrv: float | None
    method: str
    sd_within_run: bool = False


@dataclass(frozen=True)
class _Plan:
    family: TiltFamily
    indicator: object
    reflected: bool


def _is_vine(model) -> bool:
    return isinstance(model, RVineSpec)


def _rinv(model, v: np.ndarray) -> np.ndarray:
    if _is_vine(model):
        return vine_rosenblatt_inverse(model, v)
    return rosenblatt_inverse(model, v)


def _corner_hits(u: np.ndarray, u0: np.ndarray, direction: str) -> np.ndarray:
    if direction == "upper":
        return np.all(u > u0, axis=1)
    return np.all(u < u0, axis=1)


def _plan_for(cfg: ExperimentConfig) -> _Plan:
    """Tilting family and event indicator for an importance-sampling method."""
    model, ev = cfg.model, cfg.event
    u0 = event_uniform_thresholds(model, ev)
    d = model.d
    lower = ev.direction == "lower"

    if cfg.method == "is-t1":
        f = TiltFamily("trunc-exp-product", d)

        def indicator(ts):
            return _corner_hits(_rinv(model, ts.x), u0, ev.direction)

        return _Plan(f, indicator, False)

    if cfg.method == "is-t3":
        f = TiltFamily("hazard-rate", d)
        if lower:

            def indicator(ts):
                return np.all(_rinv(model, 1.0 - ts.x) < u0, axis=1)

            return _Plan(f, indicator, True)

        def indicator(ts):
            return np.all(_rinv(model, ts.x) > u0, axis=1)

        return _Plan(f, indicator, False)

    if _is_vine(model):
        raise ConfigError(f"{cfg.method} tilts a parametric copula family; vines support "
                          "is-t1 and is-t3 through the conditional-inverse route")
    if cfg.method == "is-ld" and model.family != "student-t":
        raise ConfigError("the large-deviation tilt is defined for the t copula only")

    a = np.asarray(transform_event(model, ev).a_star, dtype=np.float64)
    if model.family == "gaussian":
        f = TiltFamily("mvn-shift", d, sigma=model.sigma)
        corner = -a if lower else a

        def indicator(ts):
            return np.all(ts.x > corner, axis=1)

        return _Plan(f, indicator, lower)

    if model.family == "student-t":
        corner = -a if lower else a
        f = TiltFamily("t-gamma-normal", d, sigma=model.sigma, nu=model.nu, a_star=corner)

        def indicator(ts):
            return np.all(ts.stat > 0.0, axis=1)

        return _Plan(f, indicator, lower)

    if lower:
        raise ConfigError("the frailty tilt covers upper corners only; "
                          "use is-t1 or is-t3 for a lower corner")
    f = TiltFamily("clayton-mo", d, delta=model.delta)

    def indicator(ts):
        return np.all(ts.x > u0, axis=1)

    return _Plan(f, indicator, False)


def solve_event_theta(
    cfg: ExperimentConfig,
    *,
    stream_id: int = SOLVER_STREAM,
    solver: str | None = None,
    **solver_kw,
) -> TiltSolution:
    """Solve for the method's tilt on this model and event.

    The default picks the deterministic closed-form solver for bivariate
    Gaussian corners under is-t2, the large-deviation point for is-ld, the
    scalar twist search for is-t3, and the pilot-based sample-average
    solver everywhere else. Pass ``solver="saa"`` to force the pilot route,
    or ``solver="tallis"`` to insist on the closed-form one. Extra keywords
    go to the chosen solver.
    """
    if cfg.method == "naive":
        raise ConfigError("the crude estimator uses no tilt")
    plan = _plan_for(cfg)
    model = cfg.model

    if cfg.method == "is-ld":
        return replace(solve_theta_large_deviation(plan.family, **solver_kw),
                       reflected=plan.reflected)
    if cfg.method == "is-t3":
        _, sol = solve_hrt_theta(plan.family, plan.indicator,
                                 make_stream(cfg.seed, stream_id), **solver_kw)
        return replace(sol, reflected=plan.reflected)

    gaussian = cfg.method == "is-t2" and not _is_vine(model) and model.family == "gaussian"
    if solver == "tallis" or (solver is None and gaussian and model.d <= 2):
        if not gaussian:
            raise ConfigError("the closed-form solver applies to Gaussian corners under is-t2")
        a = np.asarray(transform_event(model, cfg.event).a_star, dtype=np.float64)
        corner = -a if cfg.event.direction == "lower" else a
        return replace(solve_theta_gaussian_tallis(model.sigma, corner, **solver_kw),
                       reflected=plan.reflected)
    if solver not in (None, "saa"):
        raise ConfigError(f"unknown solver {solver!r}")
    return solve_theta_saa(plan.family, plan.indicator, make_stream(cfg.seed, stream_id),
                           reflected=plan.reflected, **solver_kw)


def _resolve_theta(cfg: ExperimentConfig, plan: _Plan) -> np.ndarray:
    if cfg.theta is None:
        return np.asarray(solve_event_theta(cfg).theta_o, dtype=np.float64)
    th = np.atleast_1d(np.asarray(cfg.theta, dtype=np.float64))
    if cfg.method == "is-t3" and not 0.0 <= th[0] < 1.0:
        raise DomainError(f"hazard twist must lie in [0, 1), got {th[0]:.6g}")
    psi(plan.family, th)  # validates shape and domain
    return th


def _build_rep_fn(cfg: ExperimentConfig, plan: _Plan | None, theta: np.ndarray | None):
    """Per-replication worker returning the n weighted indicator terms."""
    model, ev, n = cfg.model, cfg.event, cfg.n
    if cfg.method == "naive":
        u0 = event_uniform_thresholds(model, ev)
        if _is_vine(model):

            def rep(s):
                hits = _corner_hits(sample_vine_uniforms(s, model, n), u0, ev.direction)
                return hits * 1.0

            return rep

        def rep(s):
            u = sample_copula_uniforms(model, s, n, cfg.route)
            return _corner_hits(u, u0, ev.direction) * 1.0

        return rep

    family, indicator = plan.family, plan.indicator

    def rep(s):
        ts = sample_tilted(family, s, theta, n)
        return indicator(ts) * np.exp(ts.log_lr)

    return rep


def _thread_count(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("TAILTILT_THREADS", "").strip()
        threads = int(env) if env else min(4, os.cpu_count() or 1)
    if threads < 1:
        raise ParameterError(f"thread count must be at least 1, got {threads}")
    return threads


def replicate(
    cfg: ExperimentConfig, *, threads: int | None = None, u_ref: float | None = None
) -> EstimateResult:
    """Run M independent replications and aggregate them.

    Replication r draws from ``make_stream(cfg.seed, r)``; the result is
    identical for any thread count (set via ``threads`` or the
    TAILTILT_THREADS environment variable). Solving for the tilt, when
    requested, happens before the clock starts.
    """
    plan = _plan_for(cfg) if cfg.method != "naive" else None
    theta = _resolve_theta(cfg, plan) if plan is not None else None
    rep_fn = _build_rep_fn(cfg, plan, theta)

    M = cfg.M
    est = np.empty(M)
    within = np.empty(M)

    def run(r: int) -> None:
        terms = rep_fn(make_stream(cfg.seed, r))
        est[r] = terms.mean()
        within[r] = terms.std() / np.sqrt(cfg.n)

    workers = _thread_count(threads)
    t0 = time.perf_counter()
    if workers == 1 or M == 1:
        for r in range(M):
            run(r)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(M), chunksize=max(1, M // (workers * 8))))
    seconds = time.perf_counter() - t0

    u_hat = float(est.mean())
    if M > 1:
        sd = float(est.std(ddof=1))
        sd_within = False
    else:
        sd = float(within[0])
        sd_within = True
    ref = u_ref if u_ref is not None else (u_hat if u_hat > 0.0 else None)
    wn = (sd * sd / (ref * ref)) * (seconds / M) if ref else None
    return EstimateResult(u_hat=u_hat, sd=sd, n=cfg.n, reps=M, seconds=seconds,
                          wnrv=wn, method=cfg.method, sd_within_run=sd_within)


def estimate_crude(cfg: ExperimentConfig, **kw) -> EstimateResult:
    """Crude Monte Carlo estimate of the corner probability."""
    if cfg.method != "naive":
        cfg = replace(cfg, method="naive")
    return replicate(cfg, **kw)


def estimate_is(cfg: ExperimentConfig, **kw) -> EstimateResult:
    """Importance-sampling estimate with any of the tilted methods."""
    if cfg.method == "naive":
        raise ConfigError("estimate_is needs an importance-sampling method")
    return replicate(cfg, **kw)


def estimate_hrt(cfg: ExperimentConfig, **kw) -> EstimateResult:
    """Hazard-twist estimate; the scalar twist must lie strictly in (0, 1)."""
    if cfg.method != "is-t3":
        cfg = replace(cfg, method="is-t3")
    if cfg.theta is not None:
        t0 = float(np.atleast_1d(np.asarray(cfg.theta, dtype=np.float64))[0])
        if not 0.0 < t0 < 1.0:
            raise DomainError(f"hazard twist must lie in (0, 1), got {t0:.6g}")
    return replicate(cfg, **kw)


def sd_eff(a: EstimateResult, b: EstimateResult) -> float:
    """Spread ratio sd(a)/sd(b), the variance-reduction factor of b over a."""
    if not b.sd > 0.0:
        raise ParameterError("reference estimator has zero spread")
    return a.sd / b.sd


def wnrv(r: EstimateResult, u_ref: float) -> float:
    """Work-normalized relative variance against a reference probability."""
    if not u_ref > 0.0:
        raise ParameterError(f"reference probability must be positive, got {u_ref}")
    return (r.sd * r.sd / (u_ref * u_ref)) * (r.seconds / r.reps)
