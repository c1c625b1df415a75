import numpy as np
import pytest

from torsionflow import (
    ConfigError,
    EpsilonOutOfRange,
    FlowConfig,
    NonConvexBody,
    NonPositiveBody,
    NonPositiveT,
    SolverDiverged,
    SupportFunction,
    angle_grid,
    build_body,
    build_mesh,
    functional_j,
    power,
    residual_profile,
    run,
    solve_torsion,
)
from torsionflow import flow as flow_mod
from torsionflow.flow import (
    SERIES_FIELDS,
    eta,
    initial_state,
    step_state,
    velocity,
)

N = 64
ONES = np.ones(N)


def ellipse_config(**kw):
    base = dict(
        family=power(1.0), f_samples=ONES,
        h0=SupportFunction.ellipse(1.2, 1.0, N), mode="epsilon",
        epsilon=0.1, dt_max=2e-3, residual_tol=1e-12, max_steps=10,
    )
    base.update(kw)
    return FlowConfig(**base)


def test_config_rejects_bad_mode():
    with pytest.raises(ConfigError, match="mode"):
        ellipse_config(mode="implicit")


def test_config_rejects_density_shape_and_sign():
    with pytest.raises(ConfigError, match="grid"):
        ellipse_config(f_samples=np.ones(32))
    with pytest.raises(ConfigError, match="positive"):
        ellipse_config(f_samples=np.zeros(N))


def test_config_rejects_nonpositive_stepping():
    for field in ("dt0", "dt_max", "safety", "residual_tol"):
        with pytest.raises(ConfigError, match=field):
            ellipse_config(**{field: 0.0})
    with pytest.raises(ConfigError, match="delta_max"):
        ellipse_config(delta_max=-1.0)
    with pytest.raises(ConfigError, match="max_steps"):
        ellipse_config(max_steps=0)


def test_plain_mode_needs_fast_small_s_decay():
    # psi(s) = s keeps s^2/psi bounded, so the positivity barrier fails
    with pytest.raises(ConfigError, match="s\\^2"):
        ellipse_config(mode="plain")
    cfg = ellipse_config(mode="plain", allow_degenerate_plain=True)
    assert cfg.mode == "plain"
    cfg3 = ellipse_config(family=power(3.0), mode="plain")
    assert cfg3.family.p == 3.0


def test_plain_mode_rejects_class_c():
    with pytest.raises(ConfigError, match="class B"):
        ellipse_config(family=power(0.0), mode="plain")


def test_epsilon_mode_validates_epsilon():
    with pytest.raises(EpsilonOutOfRange):
        ellipse_config(epsilon=0.7)


def test_even_log_requires_even_data():
    theta = angle_grid(N)
    cfg = ellipse_config(family=power(0.0), mode="even_log",
                         f_samples=1.0 + 0.05 * np.cos(2 * theta))
    assert cfg.mode == "even_log"
    with pytest.raises(ConfigError, match="even"):
        ellipse_config(family=power(0.0), mode="even_log",
                       f_samples=1.0 + 0.05 * np.cos(theta))
    with pytest.raises(ConfigError, match="even"):
        ellipse_config(family=power(0.0), mode="even_log",
                       h0=SupportFunction.translated_disk(1.0, (0.3, 0.0), N))


def test_psi_star_dispatch():
    cfg = ellipse_config()
    s = 0.05  # inside the regularized core for eps = 0.1
    assert cfg.psi_star(s) == pytest.approx(s ** 2.1, rel=1e-14)
    plain = ellipse_config(family=power(3.0), mode="plain")
    assert plain.psi_star(s) == pytest.approx(s ** 3, rel=1e-14)


def test_eta_ball_closed_form():
    # on B_R: sum f psi(R) dtheta / (4T) = 2 pi R^p / (2 pi R^4)
    for radius in (1.0, 2.0):
        for p in (0.0, 1.0, 3.0):
            body = build_body(SupportFunction.disk(radius, N))
            sol = solve_torsion(build_mesh(body, 32))
            value = eta(ONES, power(p).psi(body.h), sol.t_boundary)
            assert value * radius ** (4.0 - p) == pytest.approx(1.0, rel=5e-3)
    with pytest.raises(NonPositiveT):
        eta(ONES, ONES, 0.0)


def test_velocity_vanishes_on_ball():
    body = build_body(SupportFunction.disk(1.0, N))
    sol = solve_torsion(build_mesh(body, 32))
    psi_h = power(3.0).psi(body.h)
    ev = eta(ONES, psi_h, sol.t_boundary)
    v, clamped = velocity(body, sol, ONES, psi_h, ev)
    assert clamped == 0
    assert np.max(np.abs(v)) <= 1e-11 * ev  # measured 3.6e-12


def test_velocity_clamps_small_gradients():
    body = build_body(SupportFunction.disk(1.0, N))
    sol = solve_torsion(build_mesh(body, 32))
    psi_h = power(3.0).psi(body.h)
    ev = eta(ONES, psi_h, sol.t_boundary)
    _, clamped = velocity(body, sol, ONES, psi_h, ev, q_floor=50.0)
    assert clamped == N


def test_residual_profile_on_stationary_ball():
    body = build_body(SupportFunction.disk(1.0, N))
    sol = solve_torsion(build_mesh(body, 32))
    psi_h = power(3.0).psi(body.h)
    gamma = 1.0 / eta(ONES, psi_h, sol.t_boundary)
    profile, sup_rel = residual_profile(body, sol, ONES, psi_h, gamma)
    assert profile.shape == (N,)
    assert sup_rel <= 1e-11


def test_functional_j_matches_primitive():
    from torsionflow import regularize

    cfg = ellipse_config()
    h = SupportFunction.disk(1.0, N)
    expected = 2.0 * np.pi * regularize(power(1.0), 0.1).capital_psi_hat(1.0)
    assert functional_j(cfg, h) == pytest.approx(expected, rel=1e-12)


def test_initial_state_fields():
    cfg = ellipse_config()
    state = initial_state(cfg)
    assert state.step == 0
    assert state.t == 0.0
    assert state.dt_used == 0.0
    assert state.dt_next == cfg.dt0
    assert state.residual_sup > 0.1  # ellipse is far from stationary
    assert state.t0 == state.torsion.t_boundary


def test_initial_state_wraps_bad_body():
    with pytest.raises(ConfigError, match="initial"):
        initial_state(ellipse_config(
            h0=SupportFunction.translated_disk(0.5, (1.0, 0.0), N)))


def test_step_conserves_rigidity_exactly():
    cfg = ellipse_config()
    state = initial_state(cfg)
    for _ in range(5):
        state = step_state(state, cfg)
        assert abs(state.torsion.t_boundary - state.t0) / state.t0 <= 1e-14


def test_step_growth_after_streak():
    cfg = ellipse_config(dt0=1e-4, max_steps=100)
    state = initial_state(cfg)
    for _ in range(5):
        state = step_state(state, cfg)
    assert state.dt_next == pytest.approx(1.25e-4, rel=1e-12)
    assert state.accept_streak == 0
    state = step_state(state, cfg)
    assert state.dt_used == pytest.approx(1.25e-4, rel=1e-12)


def test_rigidity_drifts_without_renormalization():
    res = run(ellipse_config(renormalize=False, max_steps=20))
    drift = abs(res.series[-1, 2] - res.t0) / res.t0
    assert drift > 1e-8  # measured 7.1e-6


def test_run_converges_immediately_on_stationary_ball():
    cfg = FlowConfig(family=power(3.0), f_samples=ONES,
                     h0=SupportFunction.disk(1.0, N), mode="plain")
    res = run(cfg)
    assert res.stop_reason == "Converged"
    assert res.steps == 0
    assert res.diagnostics["residual_sup"] <= 1e-11
    assert res.gamma == pytest.approx(1.0, rel=5e-3)
    assert res.gamma * res.eta == pytest.approx(1.0, rel=1e-15)


def test_run_respects_step_and_time_budgets():
    res = run(ellipse_config(max_steps=3))
    assert res.stop_reason == "MaxSteps"
    assert res.steps == 3
    assert res.series.shape == (4, len(SERIES_FIELDS))
    res_t = run(ellipse_config(t_max=5e-3, max_steps=10_000, dt0=1e-3))
    assert res_t.stop_reason == "MaxSteps"
    assert res_t.steps == 5


def test_run_snapshot_cadence():
    res = run(ellipse_config(max_steps=25, snapshot_every=10))
    assert [step for step, _ in res.snapshots] == [0, 10, 20]
    for _, points in res.snapshots:
        assert points.shape == (N, 2)


def test_run_series_is_clean_for_smooth_flow():
    res = run(ellipse_config(max_steps=30))
    assert np.all(res.series[:, 11] == 0.0)       # no gradient clamps
    assert np.all(np.isfinite(res.series))
    assert np.all(np.diff(res.series[:, 0]) > 0)  # time increases


@pytest.mark.parametrize("exc,reason", [
    (NonPositiveBody(-0.1, 3), "PositivityLoss"),
    (NonConvexBody(-0.5, 7), "ConvexityLoss"),
    (SolverDiverged(100, 1.0), "SolverFailure"),
])
def test_run_maps_step_failures_to_stop_reasons(monkeypatch, exc, reason):
    def explode(state, config):
        raise exc
    monkeypatch.setattr(flow_mod, "step_state", explode)
    res = flow_mod.run(ellipse_config(max_steps=50))
    assert res.stop_reason == reason
    assert res.steps == 0


def test_even_log_preserves_evenness_exactly():
    theta = angle_grid(N)
    cfg = FlowConfig(family=power(0.0), f_samples=1.0 + 0.05 * np.cos(2 * theta),
                     h0=SupportFunction.disk(1.0, N), mode="even_log",
                     dt_max=2e-3, residual_tol=1e-12, max_steps=30)
    res = run(cfg)
    h = res.final_h.samples
    assert np.max(np.abs(h - np.roll(h, -N // 2))) == 0.0
