"""Orlicz weight families psi and their small-argument regularization.

Two admissibility classes are carried as tags on the family:

  class "B": psi > 0 on (0, inf), psi(0) = 0, and the primitive
             Psi(s) = integral_0^s psi(t)/t dt exists with
             Psi(inf) = inf.  Powers s^p with p > 0 live here.
  class "C": Psi is based at 1 (so it may be negative below 1) with
             Psi(inf) = inf; the constant weight psi == 1, whose
             primitive is log s, is the canonical member.

The plain flow additionally needs s^2/psi(s) -> inf as s -> 0+ (n = 2
here); powers satisfy it exactly when p > 2.  When it fails, the
epsilon regularization splices the hard power s^(2+eps) below eps into
psi above 2*eps through a quintic smoothstep, keeping the blend C^2 and
bounded by C0 = max{1, max_[0,2] psi}.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, EpsilonOutOfRange, WrongClass

logger = logging.getLogger(__name__)

QUAD_ABS_TOL = 1e-10
SKIP_TOL = 1e-12  # admissibility quadrature skips |<u,x>| below this


class OrliczFamily:
    """Weight function psi with class tag and cached bound C0.

    Construct through `power` or `table`.
    """

    def __init__(self, kind, class_tag, p=None, s_grid=None, values=None):
        self.kind = kind
        self.class_tag = class_tag
        self.p = p
        self.s_grid = None if s_grid is None else np.asarray(s_grid, dtype=float)
        self.values = None if values is None else np.asarray(values, dtype=float)
        self.c0 = self._bound_c0()

    def _bound_c0(self) -> float:
        if self.kind == "power":
            return max(1.0, 2.0 ** self.p) if self.p > 0 else 1.0
        lo, hi = self.s_grid[0], self.s_grid[-1]
        cand = [np.max(self.values[(self.s_grid >= 0) & (self.s_grid <= 2)], initial=0.0)]
        for end in (max(lo, 0.0), min(hi, 2.0)):
            cand.append(float(np.interp(end, self.s_grid, self.values)))
        return max(1.0, *cand)

    def psi(self, s):
        """Evaluate psi; scalar in, scalar out.  Raises DomainError for
        s < 0 or, for table families, s outside the tabulated range."""
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < 0):
            raise DomainError("psi is defined for s >= 0 only")
        if self.kind == "power":
            out = np.ones_like(s_arr) if self.p == 0 else s_arr ** self.p
        else:
            if np.any(s_arr < self.s_grid[0]) or np.any(s_arr > self.s_grid[-1]):
                raise DomainError(
                    f"table family covers [{self.s_grid[0]:.6g}, "
                    f"{self.s_grid[-1]:.6g}] only"
                )
            out = np.interp(s_arr, self.s_grid, self.values)
        return out if np.ndim(s) else float(out)

    def capital_psi(self, s):
        """Primitive Psi(s) = integral psi(t)/t dt from the class base
        point (0 for class B, 1 for class C)."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        if self.kind == "power":
            if self.p > 0:
                if np.any(s_arr < 0):
                    raise DomainError("capital_psi needs s >= 0 for class B")
                out = s_arr ** self.p / self.p
            else:
                if np.any(s_arr <= 0):
                    raise DomainError("capital_psi needs s > 0 when psi == 1")
                out = np.log(s_arr)
        else:
            base = 0.0 if self.class_tag == "B" else 1.0
            if self.class_tag == "C" and np.any(s_arr <= 0):
                raise DomainError("capital_psi needs s > 0 for class C")
            out = np.array([self._quad_primitive(base, float(v)) for v in s_arr])
        return out if np.ndim(s) else float(out[0])

    def _quad_primitive(self, base: float, s: float) -> float:
        if s == base:
            return 0.0
        lo, hi = (base, s) if s > base else (s, base)
        knots = self.s_grid[(self.s_grid > lo) & (self.s_grid < hi)]

        def integrand(t):
            return np.interp(t, self.s_grid, self.values) / t

        val, _ = quad(integrand, lo, hi, points=knots[:50], limit=200,
                      epsabs=QUAD_ABS_TOL, epsrel=1e-12)
        return val if s > base else -val

    def satisfies_small_s_condition(self) -> bool:
        """Whether s^2/psi(s) -> inf as s -> 0+ (plain-flow admissibility).

        Exact for powers (p > 2).  For table families the limit is
        probed on a decreasing dyadic sample; the answer is a heuristic
        trend estimate, logged as such.
        """
        if self.kind == "power":
            return self.p > 2.0
        lo = max(self.s_grid[0], 1e-300)
        start = min(1.0, self.s_grid[-1])
        samples = []
        s = start
        while s >= lo and len(samples) < 40:
            psi_s = float(np.interp(s, self.s_grid, self.values))
            if psi_s > 0:
                samples.append(s * s / psi_s)
            s /= 2.0
        logger.info(
            "small-s admissibility for table family decided heuristically "
            "from %d dyadic samples", len(samples)
        )
        if len(samples) < 4:
            return False
        tail = samples[-4:]
        increasing = all(b > a for a, b in zip(tail, tail[1:]))
        return increasing and samples[-1] > 10.0 * samples[0]


def power(p: float) -> OrliczFamily:
    """Power family psi(s) = s^p (class B for p > 0; p = 0 gives the
    constant weight, class C with Psi = log)."""
    if p < 0:
        raise DomainError(f"power exponent must be >= 0, got {p}")
    return OrliczFamily("power", "C" if p == 0 else "B", p=float(p))


def table(s_grid, values, class_tag: str) -> OrliczFamily:
    """Tabulated family, linearly interpolated between samples."""
    s_grid = np.asarray(s_grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if class_tag not in ("B", "C"):
        raise ValueError(f"class_tag must be 'B' or 'C', got {class_tag!r}")
    if s_grid.ndim != 1 or s_grid.size < 2 or values.shape != s_grid.shape:
        raise ValueError("table needs matching 1-d s_grid and values, size >= 2")
    if np.any(np.diff(s_grid) <= 0) or s_grid[0] < 0:
        raise ValueError("s_grid must be strictly increasing and >= 0")
    if np.any(values < 0):
        raise ValueError("psi values must be >= 0")
    if class_tag == "B":
        if s_grid[0] != 0:
            raise ValueError(
                "class B tables must start at s = 0 so the primitive "
                "based there is determined"
            )
        if values[0] != 0:
            raise WrongClass("class B requires psi(0) = 0")
        if np.any(values[s_grid > 0] <= 0):
            raise WrongClass("class B requires psi > 0 away from 0")
    if class_tag == "C" and not (s_grid[0] < 1 < s_grid[-1] or 1 in s_grid):
        raise ValueError("class C tables must cover the base point s = 1")
    return OrliczFamily("table", class_tag, s_grid=s_grid, values=values)


def _smoothstep(u):
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


class RegularizedOrlicz:
    """Blend psi_hat_eps: s^(2+eps) on [0, eps], psi on [2 eps, inf),
    quintic smoothstep mix in between.

    The blend at s is a convex combination of the two branch values at
    the same s, so psi_hat <= C0 on [0, 2 eps] and the splice is C^2.
    """

    def __init__(self, base: OrliczFamily, epsilon: float):
        if not 0.0 < epsilon <= 0.5:
            raise EpsilonOutOfRange(
                f"epsilon must lie in (0, 1/2], got {epsilon}"
            )
        if base.class_tag != "B":
            raise WrongClass("only class B families are regularized")
        self.base = base
        self.epsilon = float(epsilon)
        self.exponent = 2.0 + self.epsilon
        self.c0 = base.c0
        self._bridge_value = None

    def psi_hat(self, s):
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < 0):
            raise DomainError("psi_hat is defined for s >= 0 only")
        eps = self.epsilon
        out = np.empty_like(s_arr)
        core = s_arr <= eps
        outer = s_arr >= 2 * eps
        mid = ~(core | outer)
        out[core] = s_arr[core] ** self.exponent
        if np.any(outer):
            out[outer] = self.base.psi(s_arr[outer])
        if np.any(mid):
            sm = s_arr[mid]
            w = _smoothstep((sm - eps) / eps)
            out[mid] = (1.0 - w) * sm ** self.exponent + w * self.base.psi(sm)
        return out if np.ndim(s) else float(out)

    def _bridge(self) -> float:
        """integral of psi_hat(t)/t over the blend window [eps, 2 eps]."""
        if self._bridge_value is None:
            val, _ = quad(lambda t: self.psi_hat(t) / t, self.epsilon,
                          2 * self.epsilon, epsabs=QUAD_ABS_TOL,
                          epsrel=1e-12, limit=200)
            self._bridge_value = val
        return self._bridge_value

    def capital_psi_hat(self, s):
        """Primitive integral_0^s psi_hat(t)/t dt.

        Closed form s^(2+eps)/(2+eps) on the core; above 2*eps the tail
        reuses the base primitive, so for s >= 2 eps

            Psi_hat(s) = Psi_hat(2 eps) + Psi(s) - Psi(2 eps)
                       >= Psi(s) - Psi(2 eps).
        """
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s_arr < 0):
            raise DomainError("capital_psi_hat is defined for s >= 0 only")
        eps, expo = self.epsilon, self.exponent
        at_eps = eps ** expo / expo
        at_2eps = at_eps + self._bridge()
        out = np.empty_like(s_arr)
        core = s_arr <= eps
        outer = s_arr >= 2 * eps
        mid = ~(core | outer)
        out[core] = s_arr[core] ** expo / expo
        if np.any(mid):
            out[mid] = at_eps + np.array([
                quad(lambda t: self.psi_hat(t) / t, eps, float(v),
                     epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=200)[0]
                for v in s_arr[mid]
            ])
        if np.any(outer):
            tail = self.base.capital_psi(s_arr[outer]) \
                - self.base.capital_psi(2 * eps)
            out[outer] = at_2eps + tail
        return out if np.ndim(s) else float(out[0])


def regularize(family: OrliczFamily, epsilon: float) -> RegularizedOrlicz:
    """Regularized family psi_hat_eps; epsilon in (0, 1/2], class B only."""
    return RegularizedOrlicz(family, epsilon)


def class_c_admissibility(family: OrliczFamily, f_samples) -> float:
    """inf over grid directions u of sum_j Psi(|<u, x_j>|) f_j dtheta.

    A finite (possibly negative) value certifies the lower-bound
    constant the class C theory needs for the data f.  Grid points with
    |<u, x>| < 1e-12 are skipped; the singularity of log is integrable,
    so the omitted mass vanishes with the grid.
    """
    f = np.asarray(f_samples, dtype=float)
    n = f.size
    theta = 2.0 * np.pi * np.arange(n) / n
    dtheta = 2.0 * np.pi / n
    # |<u_k, x_j>| = |cos(theta_j - theta_k)|, so the integrand against
    # direction u_k is a circular shift of the one for u_0
    dots = np.abs(np.cos(theta))
    keep = dots >= SKIP_TOL
    g = np.zeros(n)
    g[keep] = family.capital_psi(dots[keep])
    g[~keep] = 0.0  # integrable singularity: skip, do not extrapolate
    totals = np.array([float(np.dot(np.roll(g, k), f)) for k in range(n)])
    return float(np.min(totals) * dtheta)
