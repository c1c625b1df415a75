"""Normalized support-function flow driving a body toward the
Orlicz-Minkowski equation for torsional rigidity.

Each accepted step advances the support samples by forward Euler,

    h <- h + dt * v,
    v_j = -f_j psi*(h_j) / (q_j^2 rho_j) + eta * h_j,

where q is the recovered boundary gradient, rho the curvature radius,
psi* the mode's weight (psi itself, or its epsilon-regularization),
and

    eta = sum_j f_j psi*(h_j) dtheta / (4 T)

with T the surface-form rigidity of the current body.  That choice of
normalization makes the discrete ball an exact stationary point and
gives the discrete energy

    J = sum_j f_j Psi*(h_j) dtheta

the same one-step monotonicity the continuous flow enjoys.  T is a
first integral; with renormalization on, each accepted body is rescaled
by lam = (T0/T)^(1/4) and the cached torsion solution is carried along
by its exact scaling law, so the reported T equals T0 to rounding.

Stopping: the run converges when the residual profile

    h_j q_j^2 rho_j - gamma f_j psi*(h_j),   gamma = 1/eta,

has sup norm below residual_tol relative to max gamma f psi*(h).
Other stop reasons: MaxSteps, ConvexityLoss, PositivityLoss,
SolverFailure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    ConfigError,
    NonConvexBody,
    NonPositiveBody,
    NonPositiveT,
    SolverDiverged,
)
from .geometry import ConvexBody, SupportFunction, build_body, even_project
from .orlicz import OrliczFamily, RegularizedOrlicz, regularize
from .torsion import TorsionSolution, build_mesh, solve_torsion

MODES = ("plain", "epsilon", "even_log")
MAX_HALVINGS = 30
GROW_FACTOR = 1.25
GROW_AFTER = 5
DELTA_MAX_REL = 1e-3
Q_FLOOR_REL = 1e-6

SERIES_FIELDS = [
    "t", "dt", "T", "J", "eta", "min_h", "max_h",
    "min_rho", "max_rho", "min_q", "residual_sup", "clamps",
]


def _is_even(samples: np.ndarray, tol: float = 1e-12) -> bool:
    half = samples.size // 2
    scale = max(1.0, float(np.max(np.abs(samples))))
    return float(np.max(np.abs(samples - np.roll(samples, -half)))) <= tol * scale


@dataclass
class FlowConfig:
    """Everything needed to reproduce a run.

    delta_max and q_floor may be left None to track the body:
    1e-3 * max h and 1e-6 * diameter respectively.

    The explicit march is only stable when dt stays below roughly
    (2/n_theta)^2 / max(f * psi(h) / (q^2 rho^2)); dt_max defaults to a
    value safe for unit-scale bodies on the default 64-point grid.
    Raising it past the stability ceiling does not speed convergence:
    the step-size halvings kick in and the residual stalls.
    """

    family: OrliczFamily
    f_samples: np.ndarray
    h0: SupportFunction
    mode: str = "plain"
    epsilon: float = 0.1
    n_radial: int = 32
    dt0: float = 1e-3
    dt_max: float = 2e-3
    delta_max: Optional[float] = None
    safety: float = 0.5
    renormalize: bool = True
    q_floor: Optional[float] = None
    residual_tol: float = 1e-4
    t_max: float = float("inf")
    max_steps: int = 1_000_000
    snapshot_every: int = 0
    allow_degenerate_plain: bool = False
    _regularized: Optional[RegularizedOrlicz] = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        self.f_samples = np.asarray(self.f_samples, dtype=float)
        self.validate()

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode: expected one of {MODES}, got {self.mode!r}")
        f = self.f_samples
        if f.shape != (self.h0.n_theta,):
            raise ConfigError(
                f"f_samples: length {f.size} does not match the angular "
                f"grid of h0 ({self.h0.n_theta})"
            )
        if not np.all(np.isfinite(f)) or np.any(f <= 0):
            raise ConfigError("f_samples: density must be finite and positive")
        for name in ("dt0", "dt_max", "safety", "residual_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"stepping.{name}: must be positive")
        if self.delta_max is not None and self.delta_max <= 0:
            raise ConfigError("stepping.delta_max: must be positive when set")
        if self.q_floor is not None and self.q_floor <= 0:
            raise ConfigError("q_floor: must be positive when set")
        if self.max_steps < 1:
            raise ConfigError("stop.max_steps: must be >= 1")
        if self.n_radial < 1:
            raise ConfigError("grid.n_radial: must be >= 1")

        tag = self.family.class_tag
        if self.mode == "plain":
            if tag != "B":
                raise ConfigError(
                    "mode plain: needs a class B weight (psi(0) = 0)"
                )
            if not (self.family.satisfies_small_s_condition()
                    or self.allow_degenerate_plain):
                raise ConfigError(
                    "mode plain: psi grows too slowly near 0 "
                    "(s^2/psi(s) must diverge as s -> 0+); positivity of "
                    "the body is then not guaranteed.  Use mode epsilon, "
                    "or set allow_degenerate_plain to proceed anyway"
                )
        elif self.mode == "epsilon":
            # constructs eagerly so bad epsilon/class fail at config time
            self._regularized = regularize(self.family, self.epsilon)
        else:  # even_log
            if tag != "C":
                raise ConfigError("mode even_log: needs a class C weight")
            if not _is_even(f):
                raise ConfigError("mode even_log: f must be even (antipodally symmetric)")
            if not _is_even(self.h0.samples):
                raise ConfigError("mode even_log: initial h must be even")

    # mode's weight evaluators
    def psi_star(self, s):
        if self.mode == "epsilon":
            return self._regularized.psi_hat(s)
        return self.family.psi(s)

    def capital_psi_star(self, s):
        if self.mode == "epsilon":
            return self._regularized.capital_psi_hat(s)
        return self.family.capital_psi(s)


def eta(f_samples, psi_h, t_rigidity: float) -> float:
    """Normalization sum_j f_j psi*(h_j) dtheta / (4 T)."""
    if t_rigidity <= 0:
        raise NonPositiveT(f"torsional rigidity must be positive, got {t_rigidity}")
    f = np.asarray(f_samples, dtype=float)
    dtheta = 2.0 * np.pi / f.size
    return float(np.sum(f * psi_h) * dtheta / (4.0 * t_rigidity))


def velocity(body: ConvexBody, torsion: TorsionSolution, f_samples,
             psi_h, eta_value: float, q_floor: Optional[float] = None):
    """Pointwise speed of the support function, with gradient clamping.

    Returns (v, n_clamped): q is floored at q_floor (default
    1e-6 * diameter) before the division, and the number of floored
    nodes is reported so runs can surface clamp telemetry.
    """
    if q_floor is None:
        q_floor = Q_FLOOR_REL * body.diameter
    q = torsion.q
    clamped = q < q_floor
    q_eff = np.where(clamped, q_floor, q)
    v = -np.asarray(f_samples) * psi_h / (q_eff * q_eff * body.rho) \
        + eta_value * body.h
    return v, int(np.count_nonzero(clamped))


def residual_profile(body: ConvexBody, torsion: TorsionSolution, f_samples,
                     psi_h, gamma: float):
    """Pointwise defect h q^2 rho - gamma f psi*(h) and its sup norm
    relative to max gamma f psi*(h)."""
    target = gamma * np.asarray(f_samples) * psi_h
    profile = body.h * torsion.q ** 2 * body.rho - target
    scale = float(np.max(np.abs(target)))
    if scale == 0.0:
        scale = 1.0
    return profile, float(np.max(np.abs(profile)) / scale)


def functional_j(config: FlowConfig, h: SupportFunction) -> float:
    """Energy J = sum_j f_j Psi*(h_j) dtheta monitored along the flow."""
    dtheta = 2.0 * np.pi / h.n_theta
    return float(np.sum(config.f_samples * config.capital_psi_star(h.samples)) * dtheta)


@dataclass
class FlowState:
    """One accepted point of the discrete flow.

    dt_used is the step size that produced this state (0 for the
    initial state); dt_next is the trust size the next step starts
    from, which grows after sustained acceptance.
    """

    step: int
    t: float
    dt_used: float
    dt_next: float
    h: SupportFunction
    body: ConvexBody
    torsion: TorsionSolution
    t0: float
    eta: float
    j_value: float
    residual_sup: float
    clamp_events: int
    accept_streak: int = 0

    @property
    def diagnostics(self) -> dict:
        return {
            "min_h": float(np.min(self.body.h)),
            "max_h": float(np.max(self.body.h)),
            "min_rho": float(np.min(self.body.rho)),
            "max_rho": float(np.max(self.body.rho)),
            "min_q": float(np.min(self.torsion.q)),
            "J": self.j_value,
            "T": self.torsion.t_boundary,
            "residual_sup": self.residual_sup,
            "clamp_events": self.clamp_events,
        }

    def series_row(self):
        d = self.diagnostics
        return (self.t, self.dt_used, d["T"], d["J"], self.eta, d["min_h"],
                d["max_h"], d["min_rho"], d["max_rho"], d["min_q"],
                d["residual_sup"], float(d["clamp_events"]))


def _evaluate(config: FlowConfig, h: SupportFunction, body: ConvexBody,
              torsion: TorsionSolution, t0: float, step: int, t: float,
              dt_used: float, dt_next: float, clamp_events: int,
              accept_streak: int) -> FlowState:
    psi_h = config.psi_star(body.h)
    eta_value = eta(config.f_samples, psi_h, torsion.t_boundary)
    _, sup_rel = residual_profile(
        body, torsion, config.f_samples, psi_h, 1.0 / eta_value
    )
    return FlowState(
        step=step, t=t, dt_used=dt_used, dt_next=dt_next, h=h, body=body,
        torsion=torsion, t0=t0, eta=eta_value,
        j_value=functional_j(config, h), residual_sup=sup_rel,
        clamp_events=clamp_events, accept_streak=accept_streak,
    )


def initial_state(config: FlowConfig) -> FlowState:
    try:
        body = build_body(config.h0)
    except (NonPositiveBody, NonConvexBody) as err:
        raise ConfigError(f"initial body invalid: {err}") from err
    torsion = solve_torsion(build_mesh(body, config.n_radial))
    return _evaluate(config, config.h0, body, torsion,
                     t0=torsion.t_boundary, step=0, t=0.0, dt_used=0.0,
                     dt_next=config.dt0, clamp_events=0, accept_streak=0)


def step_state(state: FlowState, config: FlowConfig) -> FlowState:
    """Advance one accepted step (possibly several dt halvings).

    Raises NonConvexBody / NonPositiveBody when 30 halvings cannot
    produce an admissible candidate, and SolverDiverged if the torsion
    solve fails on the accepted geometry.
    """
    psi_h = config.psi_star(state.body.h)
    v, n_clamped = velocity(
        state.body, state.torsion, config.f_samples, psi_h,
        state.eta, config.q_floor,
    )
    sup_v = float(np.max(np.abs(v)))
    delta = config.delta_max
    if delta is None:
        delta = DELTA_MAX_REL * float(np.max(state.body.h))

    dt = min(state.dt_next, config.dt_max)
    if sup_v > 0:
        dt = min(dt, config.safety * delta / sup_v)

    halved = False
    last_err = None
    for _ in range(MAX_HALVINGS + 1):
        cand = SupportFunction(state.h.samples + dt * v)
        if config.mode == "even_log":
            cand = even_project(cand)
        try:
            body = build_body(cand)
            break
        except (NonPositiveBody, NonConvexBody) as err:
            last_err = err
            dt /= 2.0
            halved = True
    else:
        raise last_err

    sol = solve_torsion(build_mesh(body, config.n_radial),
                        x0=_warm_start(state, body))
    if config.renormalize:
        lam4 = state.t0 / sol.t_boundary
        lam = lam4 ** 0.25
        cand = SupportFunction(lam * cand.samples)
        body = build_body(cand)
        sol = sol.scaled(lam, lam4)

    streak = 0 if halved else state.accept_streak + 1
    dt_next = dt
    if streak >= GROW_AFTER:
        dt_next = min(dt * GROW_FACTOR, config.dt_max)
        streak = 0

    return _evaluate(
        config, cand, body, sol, t0=state.t0, step=state.step + 1,
        t=state.t + dt, dt_used=dt, dt_next=dt_next,
        clamp_events=state.clamp_events + n_clamped, accept_streak=streak,
    )


def _warm_start(state: FlowState, body: ConvexBody):
    # same mesh topology every step: previous nodal field is a good
    # initial CG guess once the geometry has settled
    u = state.torsion.u
    return u if u.size == 1 + body.n_theta * state.torsion.mesh.n_radial else None


@dataclass
class FlowResult:
    final_h: SupportFunction
    gamma: float
    eta: float
    stop_reason: str
    steps: int
    series: np.ndarray          # shape (n_rows, len(SERIES_FIELDS))
    snapshots: list             # (step, boundary polyline (N, 2))
    diagnostics: dict
    t0: float


def run(config: FlowConfig) -> FlowResult:
    """March the flow to a stop condition.

    Stop reasons: "Converged" (residual_sup <= residual_tol),
    "MaxSteps" (step or time budget exhausted), "ConvexityLoss",
    "PositivityLoss" (step-size halving could not restore an admissible
    body), "SolverFailure".
    """
    state = initial_state(config)
    rows = [state.series_row()]
    snapshots = []
    if config.snapshot_every:
        snapshots.append((0, np.array(state.body.boundary)))

    stop = None
    while stop is None:
        if state.residual_sup <= config.residual_tol:
            stop = "Converged"
        elif state.step >= config.max_steps or state.t >= config.t_max:
            stop = "MaxSteps"
        else:
            try:
                state = step_state(state, config)
                rows.append(state.series_row())
                if config.snapshot_every and state.step % config.snapshot_every == 0:
                    snapshots.append((state.step, np.array(state.body.boundary)))
            except NonPositiveBody:
                stop = "PositivityLoss"
            except NonConvexBody:
                stop = "ConvexityLoss"
            except SolverDiverged:
                stop = "SolverFailure"

    return FlowResult(
        final_h=state.h,
        gamma=1.0 / state.eta,
        eta=state.eta,
        stop_reason=stop,
        steps=state.step,
        series=np.array(rows),
        snapshots=snapshots,
        diagnostics=state.diagnostics,
        t0=state.t0,
    )
