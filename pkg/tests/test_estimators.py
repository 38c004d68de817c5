"""Estimation methods, replication engine, efficiency metrics."""

import numpy as np
import pytest
from scipy.special import ndtr, stdtr

from tailtilt.copulas import CopulaSpec, CornerEvent, vine_preset
from tailtilt.errors import ConfigError, DomainError, ParameterError
from tailtilt.estimators import (
    EstimateResult,
    ExperimentConfig,
    estimate_crude,
    estimate_hrt,
    estimate_is,
    replicate,
    sd_eff,
    solve_event_theta,
    wnrv,
)
from tailtilt.oracle import clayton_corner_prob, rect_prob_t
from tailtilt.randkit import MarginSpec

NORMAL = MarginSpec("std-normal")
T2_MARGIN = MarginSpec("student-t", df=2.0)


def corr(rho: float, d: int = 2) -> np.ndarray:
    s = np.full((d, d), rho)
    np.fill_diagonal(s, 1.0)
    return s


def gauss_model(rho: float = 0.0) -> CopulaSpec:
    return CopulaSpec("gaussian", (NORMAL, NORMAL), sigma=corr(rho))


def upper(p: float, d: int = 2) -> CornerEvent:
    return CornerEvent("upper", (p,) * d)


T_MODEL = CopulaSpec("student-t", (T2_MARGIN, T2_MARGIN), sigma=corr(0.0), nu=5.0)
CLAYTON_MODEL = CopulaSpec("clayton", (NORMAL, NORMAL), delta=3.0)


# ---------------------------------------------------------------------------
# configuration


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(gauss_model(), upper(1.0), "is-t9")
    with pytest.raises(ConfigError):
        ExperimentConfig(gauss_model(), upper(1.0), "naive", n=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(gauss_model(), upper(1.0), "naive", M=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(gauss_model(), upper(1.0), "naive", route="fancy")
    with pytest.raises(ConfigError):
        estimate_is(ExperimentConfig(gauss_model(), upper(1.0), "naive"))


# ---------------------------------------------------------------------------
# crude estimation


def test_crude_gaussian_corner():
    cfg = ExperimentConfig(gauss_model(), upper(1.282), "naive", n=500, M=2000, seed=501)
    r = estimate_crude(cfg)
    truth = float(ndtr(-1.282)) ** 2
    assert abs(r.u_hat - truth) < 3.0 * r.sd / np.sqrt(r.reps)
    assert abs(r.sd / 4.44e-3 - 1.0) < 0.25
    assert r.method == "naive" and r.n == 500 and r.reps == 2000


def test_crude_whole_space():
    cfg = ExperimentConfig(gauss_model(), upper(-37.0), "naive", n=200, M=50, seed=502)
    r = estimate_crude(cfg)
    assert r.u_hat == 1.0
    assert r.sd == 0.0


def test_crude_clayton_corner():
    cfg = ExperimentConfig(CLAYTON_MODEL, upper(2.130), "naive", n=500, M=2000, seed=503)
    r = estimate_crude(cfg)
    truth = clayton_corner_prob(3.0, float(ndtr(2.130)))
    assert abs(r.u_hat - truth) < 3.0 * r.sd / np.sqrt(r.reps)


# ---------------------------------------------------------------------------
# importance sampling


def test_is_t1_deep_gaussian_corner():
    cfg = ExperimentConfig(gauss_model(), upper(1.857), "is-t1", n=500, M=1000,
                           seed=504, theta=(50.34, 50.34))
    r = estimate_is(cfg)
    truth = float(ndtr(-1.857)) ** 2
    assert abs(r.u_hat - truth) < 3.0 * r.sd / np.sqrt(r.reps)
    assert 0.5 < r.sd / 5.20e-5 < 2.0


def test_is_t2_t_copula_corner():
    cfg = ExperimentConfig(T_MODEL, upper(6.128), "is-t2", n=500, M=1000,
                           seed=505, theta=(3.68, 3.68))
    r = estimate_is(cfg)
    a = 3.1419202680056277
    truth = rect_prob_t(5.0, corr(0.0), np.array([a, a]))
    assert abs(r.u_hat - truth) < 3.0 * r.sd / np.sqrt(r.reps)
    assert 0.5 < r.sd / 1.00e-4 < 2.0


def test_is_theta_outside_domain():
    cfg = ExperimentConfig(T_MODEL, upper(6.128), "is-t2", theta=(20.0, 20.0))
    with pytest.raises(DomainError):
        estimate_is(cfg)


def test_zero_tilt_matches_crude_bitwise():
    model = gauss_model()
    ev = upper(1.282)
    direct = estimate_crude(ExperimentConfig(model, ev, "naive", n=500, M=100, seed=7))
    cim = estimate_crude(ExperimentConfig(model, ev, "naive", n=500, M=100, seed=7, route="cim"))
    t2 = replicate(ExperimentConfig(model, ev, "is-t2", n=500, M=100, seed=7, theta=(0.0, 0.0)))
    t1 = replicate(ExperimentConfig(model, ev, "is-t1", n=500, M=100, seed=7, theta=(0.0, 0.0)))
    t3 = replicate(ExperimentConfig(model, ev, "is-t3", n=500, M=100, seed=7, theta=(0.0,)))
    assert (t2.u_hat, t2.sd) == (direct.u_hat, direct.sd)
    assert (t1.u_hat, t1.sd) == (cim.u_hat, cim.sd)
    assert (t3.u_hat, t3.sd) == (cim.u_hat, cim.sd)


def test_zero_tilt_matches_crude_t_and_clayton():
    tev = upper(2.0)
    td = estimate_crude(ExperimentConfig(T_MODEL, tev, "naive", n=400, M=50, seed=8))
    tz = replicate(ExperimentConfig(T_MODEL, tev, "is-t2", n=400, M=50, seed=8, theta=(0.0, 0.0)))
    assert (tz.u_hat, tz.sd) == (td.u_hat, td.sd)
    cev = upper(1.115)
    cd = estimate_crude(ExperimentConfig(CLAYTON_MODEL, cev, "naive", n=400, M=50, seed=8))
    cz = replicate(ExperimentConfig(CLAYTON_MODEL, cev, "is-t2", n=400, M=50, seed=8,
                                    theta=(0.0, 0.0, 0.0)))
    assert (cz.u_hat, cz.sd) == (cd.u_hat, cd.sd)


def test_hazard_twist_estimate():
    cfg = ExperimentConfig(gauss_model(), upper(1.857), "is-t3", n=500, M=1000,
                           seed=506, theta=0.71)
    r = estimate_hrt(cfg)
    truth = float(ndtr(-1.857)) ** 2
    assert abs(r.u_hat - truth) < 3.0 * r.sd / np.sqrt(r.reps)
    assert 0.5 < r.sd / 2.43e-4 < 2.0


def test_hazard_twist_clayton():
    cfg = ExperimentConfig(CLAYTON_MODEL, upper(2.130), "is-t3", n=500, M=1000,
                           seed=507, theta=0.71)
    r = estimate_hrt(cfg)
    truth = clayton_corner_prob(3.0, float(ndtr(2.130)))
    assert abs(r.u_hat - truth) < 3.0 * r.sd / np.sqrt(r.reps)


def test_hazard_twist_domain():
    base = ExperimentConfig(gauss_model(), upper(1.857), "is-t3", n=100, M=10, seed=1)
    for bad in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(DomainError):
            estimate_hrt(ExperimentConfig(gauss_model(), upper(1.857), "is-t3",
                                          n=100, M=10, seed=1, theta=bad))
    # the unified entry keeps zero as the crude-degenerate case
    r = replicate(ExperimentConfig(gauss_model(), upper(1.857), "is-t3",
                                   n=100, M=10, seed=1, theta=(0.0,)))
    assert r.method == "is-t3"
    with pytest.raises(DomainError):
        replicate(ExperimentConfig(gauss_model(), upper(1.857), "is-t3",
                                   n=100, M=10, seed=1, theta=(-0.2,)))
    assert base.theta is None


# ---------------------------------------------------------------------------
# lower corners


def test_lower_corner_estimates():
    model = gauss_model()
    ev = CornerEvent("lower", (-1.282, -1.282))
    truth = float(ndtr(-1.282)) ** 2
    sol = solve_event_theta(ExperimentConfig(model, ev, "is-t2", seed=510))
    assert sol.reflected
    r2 = estimate_is(ExperimentConfig(model, ev, "is-t2", n=500, M=500, seed=510,
                                      theta=sol.theta_o))
    assert abs(r2.u_hat - truth) < 3.0 * r2.sd / np.sqrt(r2.reps)
    # the trunc-exp tilt handles the lower corner with a negative tilt
    sol1 = solve_event_theta(ExperimentConfig(model, ev, "is-t1", seed=510))
    assert np.all(sol1.theta_o < 0.0) and not sol1.reflected
    r1 = estimate_is(ExperimentConfig(model, ev, "is-t1", n=500, M=500, seed=510,
                                      theta=sol1.theta_o))
    assert abs(r1.u_hat - truth) < 3.0 * r1.sd / np.sqrt(r1.reps)
    assert r1.sd < r2.sd < 2.5e-3


def test_lower_corner_hazard_reflects():
    model = gauss_model()
    ev = CornerEvent("lower", (-1.857, -1.857))
    sol = solve_event_theta(ExperimentConfig(model, ev, "is-t3", seed=511))
    assert sol.reflected
    r = estimate_is(ExperimentConfig(model, ev, "is-t3", n=500, M=500, seed=511,
                                     theta=sol.theta_o))
    truth = float(ndtr(-1.857)) ** 2
    assert abs(r.u_hat - truth) < 3.0 * r.sd / np.sqrt(r.reps)


def test_lower_corner_frailty_rejected():
    ev = CornerEvent("lower", (-1.0, -1.0))
    with pytest.raises(ConfigError):
        solve_event_theta(ExperimentConfig(CLAYTON_MODEL, ev, "is-t2"))


# ---------------------------------------------------------------------------
# tilt solving dispatch


def test_solver_dispatch():
    model = gauss_model()
    cfg = ExperimentConfig(model, upper(1.282), "is-t2", seed=512)
    det = solve_event_theta(cfg)
    assert det.method == "tallis-newton"
    assert np.all(np.abs(det.theta_o - 1.58) < 0.05)
    saa = solve_event_theta(cfg, solver="saa")
    assert saa.method == "saa"
    assert np.all(np.abs(saa.theta_o / det.theta_o - 1.0) < 0.05)
    with pytest.raises(ConfigError):
        solve_event_theta(ExperimentConfig(model, upper(1.282), "naive"))
    with pytest.raises(ConfigError):
        solve_event_theta(cfg, solver="simplex")
    with pytest.raises(ConfigError):
        solve_event_theta(ExperimentConfig(T_MODEL, upper(6.128), "is-t2"), solver="tallis")


def test_large_deviation_dispatch():
    cfg = ExperimentConfig(T_MODEL, upper(6.128), "is-ld", seed=513)
    sol = solve_event_theta(cfg)
    assert sol.method == "large-deviation"
    a = 3.1419202680056277
    assert np.allclose(sol.theta_o, [a, a], atol=1e-12)
    with pytest.raises(ConfigError):
        solve_event_theta(ExperimentConfig(gauss_model(), upper(1.0), "is-ld"))
    r = estimate_is(ExperimentConfig(T_MODEL, upper(6.128), "is-ld", n=500, M=500,
                                     seed=513, theta=sol.theta_o))
    truth = rect_prob_t(5.0, corr(0.0), np.array([a, a]))
    assert abs(r.u_hat - truth) < 3.0 * r.sd / np.sqrt(r.reps)


def test_vine_family_tilt_rejected():
    rv = vine_preset("3d")
    ev = CornerEvent("upper", (0.95, 0.95, 0.95))
    with pytest.raises(ConfigError):
        solve_event_theta(ExperimentConfig(rv, ev, "is-t2"))


# ---------------------------------------------------------------------------
# replication engine


def test_replicate_thread_determinism():
    cfg = ExperimentConfig(gauss_model(), upper(1.282), "is-t2", n=500, M=200,
                           seed=9, theta=(1.58, 1.58))
    a = replicate(cfg, threads=1)
    b = replicate(cfg, threads=8)
    assert a.u_hat == b.u_hat
    assert a.sd == b.sd


def test_replicate_single_run_flagged():
    cfg = ExperimentConfig(gauss_model(), upper(1.282), "naive", n=2000, M=1, seed=10)
    r = replicate(cfg)
    assert r.sd_within_run
    assert r.sd > 0.0
    assert r.reps == 1


def test_replicate_correlated_gaussian_example():
    model = gauss_model(0.5)
    cfg = ExperimentConfig(model, upper(2.395), "is-t2", n=500, M=1000, seed=514)
    sol = solve_event_theta(cfg)
    assert np.all(np.abs(sol.theta_o / 1.77 - 1.0) < 0.1)
    r = replicate(ExperimentConfig(model, upper(2.395), "is-t2", n=500, M=1000,
                                   seed=514, theta=sol.theta_o))
    from tailtilt.oracle import rect_prob_gaussian
    truth = rect_prob_gaussian(corr(0.5), np.array([2.395, 2.395]))
    assert abs(r.u_hat - truth) < 3.0 * r.sd / np.sqrt(r.reps)
    assert 0.5 < r.sd / 1.00e-4 < 2.0


def test_replicate_solves_when_theta_missing():
    cfg = ExperimentConfig(gauss_model(), upper(1.282), "is-t2", n=500, M=300, seed=515)
    r = replicate(cfg)
    truth = float(ndtr(-1.282)) ** 2
    assert abs(r.u_hat - truth) < 4.0 * r.sd / np.sqrt(r.reps)


def test_vine_estimates_agree():
    rv = vine_preset("3d")
    ev = CornerEvent("upper", (0.95, 0.95, 0.95))
    naive = estimate_crude(ExperimentConfig(rv, ev, "naive", n=500, M=400, seed=516))
    t1 = estimate_is(ExperimentConfig(rv, ev, "is-t1", n=500, M=400, seed=516))
    gap = abs(naive.u_hat - t1.u_hat)
    joint = np.hypot(naive.sd, t1.sd) / np.sqrt(400)
    assert gap < 3.0 * joint
    assert t1.sd < naive.sd / 4.0


# ---------------------------------------------------------------------------
# efficiency metrics


def make_result(sd: float, seconds: float, u: float = 1e-3, reps: int = 100) -> EstimateResult:
    return EstimateResult(u_hat=u, sd=sd, n=500, reps=reps, seconds=seconds,
                          wnrv=None, method="naive")


def test_sd_eff_basics():
    a = make_result(4e-3, 1.0)
    assert sd_eff(a, a) == 1.0
    b = make_result(1e-3, 1.0)
    assert sd_eff(a, b) * sd_eff(b, a) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ParameterError):
        sd_eff(a, make_result(0.0, 1.0))


def test_sd_eff_deep_corner():
    naive = estimate_crude(ExperimentConfig(gauss_model(), upper(1.857), "naive",
                                            n=500, M=2000, seed=517))
    t1 = estimate_is(ExperimentConfig(gauss_model(), upper(1.857), "is-t1",
                                      n=500, M=2000, seed=517, theta=(50.34, 50.34)))
    assert abs(sd_eff(naive, t1) / 27.13 - 1.0) < 0.4


def test_wnrv_formula():
    r = make_result(0.0, 5.0)
    assert wnrv(r, 1e-3) == 0.0
    a = make_result(2e-3, 1.0)
    b = make_result(2e-3, 2.0)
    assert wnrv(b, 1e-3) == pytest.approx(2.0 * wnrv(a, 1e-3), rel=1e-12)
    with pytest.raises(ParameterError):
        wnrv(a, 0.0)
    assert wnrv(a, 1e-3) == pytest.approx((4e-6 / 1e-6) * (1.0 / 100), rel=1e-12)


def test_wnrv_field_and_ordering():
    naive = estimate_crude(ExperimentConfig(gauss_model(), upper(1.857), "naive",
                                            n=500, M=1000, seed=518))
    t1 = estimate_is(ExperimentConfig(gauss_model(), upper(1.857), "is-t1",
                                      n=500, M=1000, seed=518, theta=(50.34, 50.34)))
    assert naive.wnrv == pytest.approx(wnrv(naive, naive.u_hat), rel=1e-12)
    truth = float(ndtr(-1.857)) ** 2
    assert wnrv(t1, truth) < wnrv(naive, truth)


def test_variance_ordering_shallow_corner():
    model, ev = gauss_model(), upper(1.282)
    naive = estimate_crude(ExperimentConfig(model, ev, "naive", n=500, M=1000, seed=519))
    t1 = estimate_is(ExperimentConfig(model, ev, "is-t1", n=500, M=1000, seed=519,
                                      theta=(15.95, 15.95)))
    t2 = estimate_is(ExperimentConfig(model, ev, "is-t2", n=500, M=1000, seed=519,
                                      theta=(1.58, 1.58)))
    t3 = replicate(ExperimentConfig(model, ev, "is-t3", n=500, M=1000, seed=519,
                                    theta=(0.57,)))
    assert t1.sd < t2.sd < t3.sd < naive.sd
