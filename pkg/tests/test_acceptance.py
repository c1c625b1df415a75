"""Acceptance gate: ten end-to-end checks against analytic oracles.

Each test prints one summary line (collected again by the terminal
summary hook in conftest.py).  Tolerances are stated inline; none are
loosened to pass — the anchors are closed-form disk/ellipse rigidity,
exact scaling laws, and conservation identities of the marching scheme.
"""

import json
import time

import numpy as np
import pytest

from torsionflow import (
    FlowConfig,
    SupportFunction,
    angle_grid,
    build_body,
    build_mesh,
    minkowski_combine,
    power,
    regularize,
    run,
    solve_torsion,
    variational_derivative,
)
from torsionflow.cli import main
from torsionflow.flow import eta as eta_of
from torsionflow.flow import velocity

N, M = 64, 32
THETA = angle_grid(N)
ONES = np.ones(N)


def _solve(h):
    body = build_body(h)
    return body, solve_torsion(build_mesh(body, M))


def report(n, text):
    print(f"ACCEPTANCE {n}: {text}")


@pytest.fixture(scope="module")
def ellipse_run():
    """Shared constant-data run: ellipse (1.2, 1) relaxing to a ball.

    Criterion 4 reads its conservation series, criterion 5 its limit."""
    config = FlowConfig(
        family=power(1.0), f_samples=ONES,
        h0=SupportFunction.ellipse(1.2, 1.0, N), mode="epsilon",
        epsilon=0.1, n_radial=M, dt_max=2e-3, residual_tol=1e-4,
        max_steps=20_000,
    )
    t0 = time.perf_counter()
    result = run(config)
    return result, time.perf_counter() - t0


def test_01_disk_rigidity_oracle():
    t0 = time.perf_counter()
    _, sol = _solve(SupportFunction.disk(1.0, N))
    solve_seconds = time.perf_counter() - t0
    exact = np.pi / 2.0
    t_err = abs(sol.t_volume - exact) / exact
    q_err = np.max(np.abs(sol.q - 1.0))
    assert t_err <= 1e-2
    assert q_err <= 2e-2
    assert solve_seconds < 1.0
    report(1, f"disk T err {t_err:.2e} (<=1e-2), q err {q_err:.2e} "
              f"(<=2e-2), solve {solve_seconds * 1e3:.0f} ms (<1 s)")


def test_02_scaling_and_translation():
    worst_scale, worst_shift = 0.0, 0.0
    for label, h in (("disk", SupportFunction.disk(1.0, N)),
                     ("ellipse", SupportFunction.ellipse(1.5, 1.0, N))):
        _, base = _solve(h)
        for lam in (0.5, 2.0, 3.0):
            _, scaled = _solve(SupportFunction(lam * h.samples))
            ratio = scaled.t_boundary / base.t_boundary / lam ** 4
            worst_scale = max(worst_scale, abs(ratio - 1.0))
        for shift in ((0.2, 0.0), (-0.15, 0.25)):
            linear = shift[0] * np.cos(THETA) + shift[1] * np.sin(THETA)
            _, moved = _solve(SupportFunction(h.samples + linear))
            worst_shift = max(
                worst_shift,
                abs(moved.t_boundary - base.t_boundary) / base.t_boundary,
            )
    assert worst_scale <= 1e-2
    assert worst_shift <= 1e-2
    report(2, f"worst scaling defect {worst_scale:.2e}, worst translation "
              f"defect {worst_shift:.2e} (both <=1e-2)")


def test_03_first_variation_formula():
    pairs = [
        ("disk+disk", SupportFunction.disk(1.0, N), SupportFunction.disk(0.7, N)),
        ("disk+ellipse", SupportFunction.disk(1.0, N),
         SupportFunction.ellipse(1.5, 1.0, N)),
        ("ellipse+disk", SupportFunction.ellipse(1.5, 1.0, N),
         SupportFunction.disk(0.7, N)),
    ]
    delta = 1e-3
    worst = 0.0
    for label, h0, h1 in pairs:
        body0, sol0 = _solve(h0)
        predicted = variational_derivative(body0, h1, sol0)
        t_plus = _solve(minkowski_combine(h0, h1, delta))[1].t_boundary
        t_minus = _solve(minkowski_combine(h0, h1, -delta))[1].t_boundary
        fd = (t_plus - t_minus) / (2.0 * delta)
        worst = max(worst, abs(predicted - fd) / abs(fd))
    assert worst <= 2e-2
    report(3, f"surface form vs centered difference, worst rel err "
              f"{worst:.2e} (<=2e-2) over 3 body pairs")


def test_04_conservation_and_monotonicity(ellipse_run):
    result, _ = ellipse_run
    assert result.steps >= 500
    t_series = result.series[:, 2]
    conservation = np.max(np.abs(t_series - result.t0)) / result.t0
    j_increase = np.max(np.diff(result.series[:, 3]))
    assert conservation <= 1e-12
    assert j_increase <= 1e-8
    report(4, f"T drift {conservation:.2e} (<=1e-12), max J step increase "
              f"{j_increase:+.2e} (<=+1e-8) over {result.steps} steps")


def test_05_convergence_to_known_ball(ellipse_run):
    result, seconds = ellipse_run
    assert result.stop_reason == "Converged"
    assert result.diagnostics["residual_sup"] <= 1e-4
    r_star = (2.0 * result.t0 / np.pi) ** 0.25
    shape_err = np.max(np.abs(result.final_h.samples - r_star)) / r_star
    assert shape_err <= 1e-2
    assert seconds <= 300.0
    report(5, f"converged in {result.steps} steps / {seconds:.0f} s (<=300), "
              f"|h - r*|/r* {shape_err:.2e} (<=1e-2), residual "
              f"{result.diagnostics['residual_sup']:.2e} (<=1e-4)")


def test_06_ball_stationarity_and_multiplier():
    worst_v, worst_g = 0.0, 0.0
    for radius in (1.0, 2.0):
        body, sol = _solve(SupportFunction.disk(radius, N))
        for p in (0.0, 1.0, 3.0):
            psi_h = power(p).psi(body.h)
            ev = eta_of(ONES, psi_h, sol.t_boundary)
            v, _ = velocity(body, sol, ONES, psi_h, ev)
            worst_v = max(worst_v, np.max(np.abs(v)) / (ev * radius))
            gamma = 1.0 / ev
            worst_g = max(worst_g, abs(gamma / radius ** (4.0 - p) - 1.0))
    assert worst_v <= 1e-2
    assert worst_g <= 3e-2
    report(6, f"sup|v|/(eta R) {worst_v:.2e} (<=1e-2), gamma vs R^(4-p) "
              f"worst rel err {worst_g:.2e} (<=3e-2) over 6 cases")


def test_07_regularization_contract():
    grid = np.geomspace(1e-3, 10.0, 120)
    cases = 0
    for eps in (0.5, 0.25, 0.1, 0.01):
        for p in (0.5, 1.0, 2.0, 3.0):
            fam = power(p)
            reg = regularize(fam, eps)
            core = np.linspace(0.0, eps, 40)
            assert np.array_equal(reg.psi_hat(core), core ** (2.0 + eps))
            outer = np.geomspace(2.0 * eps, 10.0, 40)
            assert np.array_equal(reg.psi_hat(outer), fam.psi(outer))
            bridge = np.linspace(eps, 2.0 * eps, 400)
            assert np.all(reg.psi_hat(bridge) <= reg.c0)
            floor = fam.capital_psi(grid) - fam.capital_psi(2.0 * eps)
            assert np.all(reg.capital_psi_hat(grid) >= floor - 1e-12)
            cases += 1
    assert cases == 16
    report(7, "exact branches, bounded bridge and primitive sandwich hold "
              "for all 16 (epsilon, p) pairs")


def test_08_regularized_positivity_floor():
    h0 = SupportFunction.translated_disk(0.525, (0.475, 0.0), N)
    assert np.min(h0.samples) == pytest.approx(0.05, abs=1e-15)
    config = FlowConfig(
        family=power(1.0), f_samples=ONES, h0=h0, mode="epsilon",
        epsilon=0.1, n_radial=M, dt_max=2e-3, residual_tol=1e-4,
        max_steps=2_000,
    )
    result = run(config)
    min_h = result.series[:, 5]
    floor = float(np.min(min_h))
    assert floor >= 0.04  # never undercuts the starting margin
    tail = min_h[min_h.size // 2:]
    slope = np.polyfit(np.arange(tail.size, dtype=float), tail, 1)[0]
    assert slope >= -1e-6  # no decreasing trend over the final half
    report(8, f"min h floor {floor:.4f} (>=0.04) over {result.steps} steps, "
              f"final-half trend {slope:+.2e}/step (>=-1e-6)")


def test_09_even_log_mode():
    config_a = FlowConfig(
        family=power(0.0), f_samples=1.0 + 0.05 * np.cos(2 * THETA),
        h0=SupportFunction.disk(1.0, N), mode="even_log", n_radial=M,
        dt_max=2e-3, residual_tol=1e-4, max_steps=20_000,
    )
    res_a = run(config_a)
    h = res_a.final_h.samples
    asymmetry = float(np.max(np.abs(h - np.roll(h, -N // 2))))
    assert res_a.stop_reason == "Converged"
    assert res_a.diagnostics["residual_sup"] <= 1e-4
    assert asymmetry <= 1e-12

    config_b = FlowConfig(
        family=power(0.0), f_samples=ONES,
        h0=SupportFunction.ellipse(1.2, 1.0, N), mode="even_log",
        n_radial=M, dt_max=2e-3, residual_tol=1e-4, max_steps=20_000,
    )
    res_b = run(config_b)
    assert res_b.stop_reason == "Converged"
    r_star = (2.0 * res_b.t0 / np.pi) ** 0.25
    disk_err = np.max(np.abs(res_b.final_h.samples - r_star)) / r_star
    assert disk_err <= 1e-2
    report(9, f"cosine data: antipodal dev {asymmetry:.1e} (<=1e-12) in "
              f"{res_a.steps} steps; flat data: |h - r*|/r* {disk_err:.2e} "
              f"(<=1e-2) in {res_b.steps} steps")


def test_10_run_determinism(tmp_path):
    payload = {
        "mode": "epsilon",
        "psi": {"kind": "power", "p": 1.0},
        "initial": {"kind": "ellipse", "a": 1.2, "b": 1.0},
        "stepping": {"dt_max": 2e-3},
        "stop": {"max_steps": 50},
    }
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(payload))
    blobs = []
    for sub in ("first", "second"):
        out = tmp_path / sub
        code = main(["run", "--config", str(cfg), "--out", str(out)])
        assert code == 2  # step budget, by design of the short config
        blobs.append((out / "series.csv").read_bytes())
    assert blobs[0] == blobs[1]
    rows = blobs[0].decode().splitlines()
    assert len(rows) == 52  # header + initial row + 50 steps
    report(10, f"two invocations, {len(blobs[0])} bytes of series output, "
               f"byte-identical")
