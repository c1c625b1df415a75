"""Support-function calculus for planar convex bodies on a uniform angle grid.

A convex body is carried as samples of its support function h on the
grid theta_j = 2*pi*j/N.  All downstream geometry (boundary points,
curvature radii, widths) is derived from h by periodic finite
differences:

    X(theta)   = h(theta) x(theta) + h'(theta) x_perp(theta)
    rho(theta) = h''(theta) + h(theta)        (curvature radius)

with x = (cos theta, sin theta) and x_perp = (-sin theta, cos theta).
The body is convex with the origin in its interior exactly when h > 0
and rho > 0 on the grid.

The five-point derivative stencils are calibrated so that modes up to
cos(2 theta), sin(2 theta) differentiate exactly (to rounding); for
smoother content they are fourth-order accurate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import GridMismatch, NonConvexBody, NonPositiveBody

MIN_GRID = 16
RHO_FLOOR = 1e-8


@lru_cache(maxsize=None)
def _stencil_weights(n_theta: int):
    """Five-point periodic stencil weights for d/dtheta and d2/dtheta2.

    The weights solve small exactness systems so that the stencils are
    exact on span{1, cos t, sin t, cos 2t, sin 2t}.  As the grid is
    refined they approach the classical fourth-order coefficients
    (2/3, -1/12)/dt and (-5/2, 4/3, -1/12)/dt^2.
    """
    dt = 2.0 * np.pi / n_theta
    c1 = np.cos(dt)
    s1 = np.sin(dt)
    # first derivative: a*(h[j+1]-h[j-1]) + b*(h[j+2]-h[j-2])
    a = (c1 + 1.0) / (s1 * (2.0 * c1 + 1.0))
    b = -1.0 / (4.0 * s1 * c1 * (2.0 * c1 + 1.0))
    # second derivative: e*h[j] + c*(h[j+1]+h[j-1]) + d*(h[j+2]+h[j-2])
    d = 1.0 / (4.0 * (c1 + 1.0) * (2.0 * c1 + 1.0) * (c1 - 1.0))
    c = -(c1 + 1.0) / ((2.0 * c1 + 1.0) * (c1 - 1.0))
    e = -2.0 * (c + d)
    return (a, b), (e, c, d)


def angle_grid(n_theta: int) -> np.ndarray:
    """Uniform angles theta_j = 2*pi*j/n_theta, j = 0..n_theta-1."""
    return 2.0 * np.pi * np.arange(n_theta) / n_theta


def _check_grid_size(n_theta: int):
    if n_theta < MIN_GRID or n_theta % 2 != 0:
        raise ValueError(
            f"angular grid must be even and >= {MIN_GRID}, got {n_theta}"
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SupportFunction:
    """Support function samples on the uniform angle grid.

    Attributes
    ----------
    samples : ndarray, shape (n_theta,)
        h(theta_j); finite.  Strict positivity is only required when a
        body is built from the samples.
    """

    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError("support samples must be a 1-d array")
        _check_grid_size(samples.size)
        if not np.all(np.isfinite(samples)):
            raise ValueError("support samples must be finite")
        object.__setattr__(self, "samples", _frozen(samples))

    @property
    def n_theta(self) -> int:
        return self.samples.size

    @property
    def theta(self) -> np.ndarray:
        return angle_grid(self.n_theta)

    @staticmethod
    def disk(radius: float, n_theta: int = 64) -> "SupportFunction":
        if radius <= 0:
            raise ValueError(f"disk radius must be positive, got {radius}")
        return SupportFunction(np.full(n_theta, float(radius)))

    @staticmethod
    def ellipse(a: float, b: float, n_theta: int = 64) -> "SupportFunction":
        """Origin-centred ellipse with semi-axes a, b:
        h(theta) = sqrt(a^2 cos^2 + b^2 sin^2)."""
        if a <= 0 or b <= 0:
            raise ValueError(f"semi-axes must be positive, got ({a}, {b})")
        t = angle_grid(n_theta)
        return SupportFunction(
            np.sqrt((a * np.cos(t)) ** 2 + (b * np.sin(t)) ** 2)
        )

    @staticmethod
    def translated_disk(radius: float, center, n_theta: int = 64) -> "SupportFunction":
        """Disk of given radius centred at `center`:
        h(theta) = R + <center, x(theta)>."""
        if radius <= 0:
            raise ValueError(f"disk radius must be positive, got {radius}")
        cx, cy = float(center[0]), float(center[1])
        t = angle_grid(n_theta)
        return SupportFunction(radius + cx * np.cos(t) + cy * np.sin(t))


def differentiate(h: SupportFunction):
    """First and second periodic derivatives of the support samples.

    Returns
    -------
    dh, d2h : ndarray, shape (n_theta,)
        Exact (to rounding) for trigonometric polynomials of degree <= 2,
        fourth-order accurate otherwise.
    """
    (a, b), (e, c, d) = _stencil_weights(h.n_theta)
    s = h.samples
    sp1, sm1 = np.roll(s, -1), np.roll(s, 1)
    sp2, sm2 = np.roll(s, -2), np.roll(s, 2)
    dh = a * (sp1 - sm1) + b * (sp2 - sm2)
    d2h = e * s + c * (sp1 + sm1) + d * (sp2 + sm2)
    return dh, d2h


@dataclass(frozen=True)
class ConvexBody:
    """Geometry derived from positive, convex support samples.

    Fields are read-only arrays over the angle grid: derivatives dh and
    d2h, boundary points (n_theta, 2), curvature radii rho = d2h + h,
    the radial profile r = |X| with its polar angles xi, the width
    extremes and the diameter of the boundary point cloud.
    """

    support: SupportFunction
    dh: np.ndarray
    d2h: np.ndarray
    boundary: np.ndarray
    rho: np.ndarray
    r: np.ndarray
    xi: np.ndarray
    width_min: float
    width_max: float
    diameter: float

    @property
    def h(self) -> np.ndarray:
        return self.support.samples

    @property
    def n_theta(self) -> int:
        return self.support.n_theta

    @property
    def theta(self) -> np.ndarray:
        return self.support.theta


def build_body(h: SupportFunction, rho_floor: float = RHO_FLOOR) -> ConvexBody:
    """Construct the derived geometry, validating positivity and convexity.

    Raises
    ------
    NonPositiveBody
        If min h <= 0 (origin not interior).
    NonConvexBody
        If min (d2h + h) <= rho_floor.  Near-degenerate curvature makes
        the boundary map singular, so this is a hard error rather than a
        clamped continue.
    """
    s = h.samples
    j_min = int(np.argmin(s))
    if s[j_min] <= 0.0:
        raise NonPositiveBody(s[j_min], j_min)
    dh, d2h = differentiate(h)
    rho = d2h + s
    j_rho = int(np.argmin(rho))
    if rho[j_rho] <= rho_floor:
        raise NonConvexBody(rho[j_rho], j_rho)

    t = h.theta
    ct, st = np.cos(t), np.sin(t)
    boundary = np.column_stack((s * ct - dh * st, s * st + dh * ct))
    r = np.hypot(s, dh)
    xi = np.arctan2(boundary[:, 1], boundary[:, 0])

    half = h.n_theta // 2
    widths = s + np.roll(s, -half)
    # max pairwise distance of the boundary cloud
    diff = boundary[:, None, :] - boundary[None, :, :]
    diameter = float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))

    return ConvexBody(
        support=h,
        dh=_frozen(dh),
        d2h=_frozen(d2h),
        boundary=_frozen(boundary),
        rho=_frozen(rho),
        r=_frozen(r),
        xi=_frozen(xi),
        width_min=float(np.min(widths)),
        width_max=float(np.max(widths)),
        diameter=diameter,
    )


def even_project(h: SupportFunction) -> SupportFunction:
    """Antipodal symmetrization (h(theta) + h(theta + pi)) / 2.

    Idempotent; the output satisfies out[j] == out[j + N/2] exactly
    because both averages see the same two operands.
    """
    s = h.samples
    return SupportFunction((s + np.roll(s, -h.n_theta // 2)) / 2.0)


def minkowski_combine(h0: SupportFunction, h1: SupportFunction, t: float) -> SupportFunction:
    """Support function of the Minkowski combination Omega0 + t*Omega1."""
    if h0.n_theta != h1.n_theta:
        raise GridMismatch(
            f"grids differ: {h0.n_theta} vs {h1.n_theta}"
        )
    return SupportFunction(h0.samples + float(t) * h1.samples)


def support_of_polygon(points: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Support function of the convex hull of `points` at angles `theta`.

    Used as an independent reconstruction check: for a body built from
    h, the polygon through its boundary points under-approximates h by
    at most O(1/N^2).
    """
    directions = np.column_stack((np.cos(theta), np.sin(theta)))
    return np.max(directions @ np.asarray(points).T, axis=1)
