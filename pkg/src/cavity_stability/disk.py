"""Closed forms for the round configuration and its stability thresholds.

For a circular cavity of radius ``r`` inside ``B_R0`` with outer data
``alpha * x`` the equilibrium is radial, ``u = f(rho) sigma`` with
``f(rho) = a / rho + b rho``. Everything here is explicit; the numerical
pipeline is checked against it.
"""

import math
from dataclasses import dataclass

import numpy as np

from .elasticity import LameParams
from .exceptions import DomainError
from .numerics import bisect, fourier_diff, periodic_quadrature

THRESHOLD_TOL = 1e-8
PRESCAN_INTERVALS = 64
# eta / mu below this makes both thresholds meaningless
DEGENERATE_ETA = 1e-12


def beta(t, p: LameParams, R0):
    """``1 + ((mu + lam) / mu) t^2 / R0^2``."""
    return 1.0 + (p.mu + p.lam) / p.mu * np.asarray(t) ** 2 / R0**2


@dataclass(frozen=True)
class DiskConfig:
    """Round configuration and the coefficients of its radial solution."""

    r: float
    R0: float
    alpha: float
    p: LameParams
    a: float
    b: float
    beta_r: float

    def radial(self, rho):
        """Radial displacement ``f(rho)``."""
        rho = np.asarray(rho, dtype=float)
        return self.a / rho + self.b * rho

    def energy(self):
        """Bulk elastic energy of the radial solution."""
        mu, lam = self.p.mu, self.p.lam
        return 2 * np.pi * (
            (mu + lam) * self.b**2 * (self.R0**2 - self.r**2)
            + mu * self.a**2 * (1.0 / self.r**2 - 1.0 / self.R0**2)
        )

    @property
    def boundary_Q(self):
        return float(disk_energy_density(self, self.r))

    @property
    def boundary_dQ_dnu(self):
        """Radial derivative of the energy density at the cavity."""
        return -8 * self.p.mu * self.a**2 / self.r**5

    @property
    def lagrange_constant(self):
        """``Q - k`` on the cavity, constant by symmetry."""
        return self.boundary_Q - 1.0 / self.r


def disk_config(r, R0, alpha, p: LameParams) -> DiskConfig:
    if not 0 < r < R0:
        raise DomainError(f"need 0 < r < R0, got r={r}, R0={R0}")
    beta_r = float(beta(r, p, R0))
    b = alpha / beta_r
    a = (p.mu + p.lam) / p.mu * r**2 * b
    return DiskConfig(float(r), float(R0), float(alpha), p, a, b, beta_r)


def disk_energy_density(cfg: DiskConfig, rho):
    """``Q = 2 (mu + lam) b^2 + 2 mu a^2 / rho^4`` of the radial solution."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < cfg.r * (1 - 1e-14)) or np.any(rho > cfg.R0 * (1 + 1e-14)):
        raise DomainError("rho outside [r, R0]")
    return 2 * (cfg.p.mu + cfg.p.lam) * cfg.b**2 + 2 * cfg.p.mu * cfg.a**2 / rho**4


def _largest_crossing(phi, R0, tol):
    """Sup of ``{t in (0, R0) : phi(t) >= 0}`` assuming ``phi(R0^-) < 0``.

    Returns ``None`` when no pre-scan node satisfies the inequality.
    """
    grid = np.linspace(1e-6 * R0, R0, PRESCAN_INTERVALS + 1)
    vals = np.array([phi(t) for t in grid[:-1]])
    ok = np.nonzero(vals >= 0)[0]
    if ok.size == 0:
        return None
    i = ok[-1]
    # grid[-1] = R0 is excluded from the scan; phi < 0 there by assumption
    return bisect(phi, grid[i], grid[i + 1], tol=tol)


def r0_threshold(p: LameParams, R0=1.0, tol=THRESHOLD_TOL):
    """``sup {t <= R0 : (1 + t^2) log(R0 / t) >= eta / (4 mu)}``.

    Returns ``R0`` when ``eta / mu`` is negligible and ``0.0`` if the
    inequality holds nowhere.
    """
    rhs = p.eta / (4 * p.mu)
    if rhs <= DEGENERATE_ETA:
        return float(R0)

    def phi(t):
        return (1 + t**2) * math.log(R0 / t) - rhs

    root = _largest_crossing(phi, R0, tol)
    return 0.0 if root is None else root


def G_threshold(alpha, p: LameParams, R0=1.0, tol=THRESHOLD_TOL):
    """``sup {t <= R0 : t log(R0/t) beta(t)^2 >= eta / (32 (mu+lam)^2 alpha^2)}``.

    ``-inf`` when the set is empty, in particular for ``alpha = 0``.
    """
    if alpha == 0:
        return -math.inf
    s = p.mu + p.lam
    if s == 0:
        raise DomainError("mu + lambda = 0 with alpha != 0: threshold undefined")
    rhs = p.eta / (32 * s**2 * alpha**2)

    def phi(t):
        return t * math.log(R0 / t) * float(beta(t, p, R0)) ** 2 - rhs

    root = _largest_crossing(phi, R0, tol)
    return -math.inf if root is None else root


@dataclass(frozen=True)
class DiskStabilityReport:
    r: float
    R0: float
    r0: float
    G_alpha: float
    degenerate: bool

    @property
    def lower(self):
        return max(self.r0, self.G_alpha)

    @property
    def window(self):
        """Open interval of certified radii, ``None`` if empty."""
        lo = self.lower
        return None if self.degenerate or lo >= self.R0 else (lo, self.R0)

    @property
    def unconditional_in_alpha(self):
        return self.G_alpha == -math.inf

    @property
    def condition_met(self):
        return self.window is not None and self.r > self.r0 and self.r > self.G_alpha and self.r < self.R0

    def to_dict(self):
        g = "-inf" if self.unconditional_in_alpha else self.G_alpha
        return {
            "r0": self.r0,
            "G_alpha": g,
            "window": None if self.window is None else list(self.window),
            "condition_met": bool(self.condition_met),
            "margin_details": {
                "r": self.r,
                "r_minus_r0": self.r - self.r0,
                "r_minus_G_alpha": None if self.unconditional_in_alpha else self.r - self.G_alpha,
                "degenerate": self.degenerate,
            },
        }


def stability_window(alpha, p: LameParams, R0, r) -> DiskStabilityReport:
    """Thresholds and whether ``r`` lies in ``(max(r0, G(alpha)), R0)``."""
    degenerate = p.eta / p.mu <= DEGENERATE_ETA
    return DiskStabilityReport(
        r=float(r),
        R0=float(R0),
        r0=r0_threshold(p, R0),
        G_alpha=-math.inf if degenerate else G_threshold(alpha, p, R0),
        degenerate=bool(degenerate),
    )


def _circle_trace(cfg, psi):
    psi = np.asarray(psi, dtype=float)
    # on a circle the normal trace is psi itself and d_tau = (1/r) d/dtheta
    return psi, fourier_diff(psi, 1) / cfg.r


def bound_prefactor(cfg: DiskConfig):
    """``32 (mu + lam)^2 b^2 r log(R0/r) / eta``."""
    p = cfg.p
    return 32 * (p.mu + p.lam) ** 2 * cfg.b**2 * cfg.r * math.log(cfg.R0 / cfg.r) / p.eta


def lower_bound_form(cfg: DiskConfig, psi):
    """Closed-form lower bound of the second variation at the round configuration.

    Parameters
    ----------
    cfg : DiskConfig
    psi : array_like
        Samples on a periodic grid, mean zero.
    """
    f, df = _circle_trace(cfg, psi)
    wirtinger = periodic_quadrature((df**2 - f**2 / cfg.r**2) * cfg.r)
    return float((1.0 - bound_prefactor(cfg)) * wirtinger)


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float

    @property
    def margin(self):
        return self.rhs - self.lhs

    @property
    def holds(self):
        return self.margin >= 0

    def __bool__(self):
        return self.holds


def adjoint_energy_bound_check(cfg: DiskConfig, psi, numeric_adjoint_energy) -> BoundCheck:
    """Compare ``2 int Q(E(u_psi))`` with its explicit upper bound.

    The result is truthy iff the bound holds; ``margin`` is rhs - lhs.
    """
    f, df = _circle_trace(cfg, psi)
    h1 = periodic_quadrature((f**2 + df**2) * cfg.r)
    return BoundCheck(float(numeric_adjoint_energy), float(bound_prefactor(cfg) * h1))

