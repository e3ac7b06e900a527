"""Star-shaped cavity profiles and their boundary geometry.

A cavity is described by its radial function ``h(theta)``: the void is
``{rho * sigma(theta) : 0 <= rho <= h(theta)}`` and the elastic body is the
rest of the disk of radius ``R0``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import DomainError, GeometryViolationError, InvalidGridError
from .numerics import PeriodicGrid, fourier_diff, fourier_filter, periodic_quadrature

MIN_RELATIVE_RADIUS = 1e-6


class RadialProfile:
    """Band-limited samples of a radial function on a periodic grid.

    Modes above ``n_theta // 3`` are removed at construction so that the
    cubic products appearing in the boundary integrands are alias free.
    """

    def __init__(self, values, R0):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1:
            raise InvalidGridError("profile values must be one-dimensional")
        self.grid = PeriodicGrid(values.size)
        self.R0 = float(R0)
        if not self.R0 > 0:
            raise DomainError("outer radius must be positive")
        filtered = fourier_filter(values, self.grid.band_limit)
        # keep already band-limited input bit-for-bit (serialization round trips)
        if np.max(np.abs(filtered - values)) > 4 * np.finfo(float).eps * np.max(np.abs(values)):
            values = filtered
        self.values = values.copy()
        self.values.setflags(write=False)
        lo, hi = self.values.min(), self.values.max()
        if lo <= MIN_RELATIVE_RADIUS * self.R0 or hi >= self.R0:
            raise GeometryViolationError(
                f"profile range [{lo:.6g}, {hi:.6g}] not inside (0, R0={self.R0:g})"
            )

    @classmethod
    def circle(cls, r, n_theta=64, R0=1.0):
        return cls(np.full(n_theta, float(r)), R0)

    @classmethod
    def from_function(cls, func, n_theta=64, R0=1.0):
        theta = PeriodicGrid(n_theta).nodes
        return cls(np.broadcast_to(func(theta), theta.shape), R0)

    @property
    def n_theta(self):
        return self.grid.n_theta

    @property
    def theta(self):
        return self.grid.nodes

    @cached_property
    def d1(self):
        return fourier_diff(self.values, 1)

    @cached_property
    def d2(self):
        return fourier_diff(self.values, 2)

    @cached_property
    def line_element(self):
        return np.hypot(self.values, self.d1)

    @cached_property
    def frame(self):
        return boundary_frame(self)

    @property
    def is_round(self):
        return np.ptp(self.values) <= 1e-13 * self.R0

    def rotated(self, shift):
        """Profile rotated by ``shift`` grid steps."""
        return RadialProfile(np.roll(self.values, shift), self.R0)

    def with_values(self, values):
        return RadialProfile(values, self.R0)

    def l2_norm(self):
        return np.sqrt(periodic_quadrature(self.values**2))

    def to_dict(self):
        return {"R0": self.R0, "n_theta": self.n_theta, "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, record):
        values = np.asarray(record["values"], dtype=float)
        if "n_theta" in record and int(record["n_theta"]) != values.size:
            raise InvalidGridError("n_theta does not match the number of values")
        return cls(values, record["R0"])

    def __repr__(self):
        return (
            f"RadialProfile(n_theta={self.n_theta}, R0={self.R0:g}, "
            f"range=[{self.values.min():.6g}, {self.values.max():.6g}])"
        )


@dataclass(frozen=True)
class BoundaryFrame:
    """Unit normal (out of the cavity), counterclockwise unit tangent and
    curvature per node.

    Vectors are Cartesian, shape ``(n_theta, 2)``.
    """

    normal: np.ndarray
    tangent: np.ndarray
    curvature: np.ndarray
    line_element: np.ndarray
    sigma_dot_nu: np.ndarray


def boundary_frame(h):
    theta, g, g1 = h.theta, h.values, h.d1
    ell = h.line_element
    sig = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    sig_perp = np.stack([np.sin(theta), -np.cos(theta)], axis=1)
    nu = (g[:, None] * sig + g1[:, None] * sig_perp) / ell[:, None]
    tau = (g1[:, None] * sig - g[:, None] * sig_perp) / ell[:, None]
    return BoundaryFrame(
        normal=nu,
        tangent=tau,
        curvature=curvature(h),
        line_element=ell,
        sigma_dot_nu=g / ell,
    )


def curvature(h):
    """Curvature ``(h^2 + 2h'^2 - h h'') / (h^2 + h'^2)^(3/2)`` at each node."""
    g, g1, g2 = h.values, h.d1, h.d2
    return (g**2 + 2 * g1**2 - g * g2) / (g**2 + g1**2) ** 1.5


def perimeter(h):
    return periodic_quadrature(h.line_element)


def cavity_area(h):
    return 0.5 * periodic_quadrature(h.values**2)


def body_area(h):
    """Area of the elastic body ``B_R0 minus F_h``."""
    return np.pi * h.R0**2 - cavity_area(h)


def symmetric_difference_area(g, h):
    """``|F_g sym-diff F_h| = 1/2 * integral |g^2 - h^2| dtheta``."""
    return 0.5 * periodic_quadrature(np.abs(g.values**2 - h.values**2))


def path_values(h, direction, t):
    """Samples of ``(h + t*direction) * ||h|| / ||h + t*direction||``."""
    raw = h.values + t * np.asarray(direction, dtype=float)
    norm = np.sqrt(periodic_quadrature(raw**2))
    if norm == 0:
        raise GeometryViolationError("path passes through the zero profile")
    return raw * (h.l2_norm() / norm)


def volume_path(h, g, t):
    """Point ``g_t`` of the area-preserving path from ``h`` towards ``g``.

    The straight segment is rescaled to the L2 norm of ``h``; since the
    cavity area is half the squared L2 norm, the area stays constant in t.
    """
    if g.n_theta != h.n_theta or g.R0 != h.R0:
        raise InvalidGridError("profiles must share grid and outer radius")
    values = path_values(h, g.values - h.values, t)
    if values.min() <= MIN_RELATIVE_RADIUS * h.R0 or values.max() >= h.R0:
        raise GeometryViolationError(f"path point at t={t} leaves (0, R0)")
    return RadialProfile(values, h.R0)


def normal_trace(h, psi):
    """Normal component on the boundary of the radial field ``psi(theta) sigma``."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (h.n_theta,):
        raise InvalidGridError("perturbation must live on the profile grid")
    return psi * h.values / h.line_element


def tangent_trace(h, psi):
    """Tangential component ``<psi sigma, tau>`` with the counterclockwise tangent."""
    return np.asarray(psi, dtype=float) * h.d1 / h.line_element


def arclength_derivative(h, f):
    """Derivative along the boundary with respect to arclength."""
    return fourier_diff(f, 1) / h.line_element
