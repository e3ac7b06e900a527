"""Area-constrained penalized descent on radial profiles and a random probe of
quadratic energy growth around a critical configuration.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .elasticity import DEFAULT_N_RHO, BoundaryData, LameParams, elastic_energy, solve_equilibrium
from .exceptions import DomainError, GeometryViolationError, StalledDescentError
from .geometry import (
    MIN_RELATIVE_RADIUS,
    RadialProfile,
    cavity_area,
    curvature,
    path_values,
    perimeter,
    symmetric_difference_area,
)
from .numerics import periodic_quadrature
from .variation import criticality, functional, project_perturbation

logger = logging.getLogger(__name__)

MAX_HALVINGS = 40
ARMIJO = 1e-4
TRACE_COLUMNS = ("iteration", "elastic", "perimeter", "penalty", "total", "grad_norm", "area")


@dataclass
class DescentConfig:
    """Physical data and penalty weights for the penalized objective.

    ``target_area`` is the cavity area ``1/2 int h^2``; matching it is the
    same as matching the body area. ``Lambda = None`` is resolved by
    :func:`default_lambda` at the reference profile.
    """

    params: LameParams
    bc: BoundaryData
    target_area: float
    Lambda: float | None = None
    reference: RadialProfile | None = None
    epsilon: float | None = None
    epsilon_weight: float = 0.0
    n_rho: int = DEFAULT_N_RHO

    @classmethod
    def around(cls, h, params, alpha=1.0, **kwargs):
        """Config whose target area and reference are those of ``h``."""
        cfg = cls(params, BoundaryData(alpha, h.R0), cavity_area(h), reference=h, **kwargs)
        if cfg.Lambda is None:
            cfg.Lambda = default_lambda(h, cfg)
        return cfg


def default_lambda(h, cfg):
    """``10 (1 + max |Q - k|)`` on the cavity boundary of ``h``."""
    if cfg.bc.alpha == 0:
        dev = np.abs(curvature(h))
    else:
        u = solve_equilibrium(h, cfg.bc, cfg.params, cfg.n_rho)
        dev = np.abs(criticality(h, u).residual_function)
    return 10.0 * (1.0 + float(dev.max()))


@dataclass
class PenalizedObjective:
    elastic: float
    perimeter: float
    penalty: float
    area: float
    regularization: float = 0.0

    @property
    def total(self):
        return self.elastic + self.perimeter + self.penalty + self.regularization


def _lambda(cfg):
    if cfg.Lambda is None:
        raise DomainError("penalty weight not set; build the config with DescentConfig.around")
    if not cfg.Lambda > 0:
        raise DomainError("penalty weight must be positive")
    return cfg.Lambda


def _equilibrium(g, cfg):
    if cfg.bc.alpha == 0:
        return None
    return solve_equilibrium(g, cfg.bc, cfg.params, cfg.n_rho)


def _regularization(g, cfg):
    if cfg.epsilon is None or cfg.epsilon_weight == 0 or cfg.reference is None:
        return 0.0, 0.0
    d = symmetric_difference_area(g, cfg.reference)
    eps = cfg.epsilon
    return cfg.epsilon_weight * math.sqrt((d - eps) ** 2 + eps), d


def objective(g, cfg, u=None):
    """Elastic energy + perimeter + ``Lambda |area(g) - target|`` (+ optional term)."""
    lam = _lambda(cfg)
    if u is None:
        u = _equilibrium(g, cfg)
    area = cavity_area(g)
    return PenalizedObjective(
        elastic=0.0 if u is None else elastic_energy(u),
        perimeter=perimeter(g),
        penalty=lam * abs(area - cfg.target_area),
        area=area,
        regularization=_regularization(g, cfg)[0],
    )


def shape_gradient(g, cfg, u=None):
    """L2(dtheta) gradient of :func:`objective` with respect to the nodal values of ``g``."""
    lam = _lambda(cfg)
    if u is None:
        u = _equilibrium(g, cfg)
    Q = 0.0 if u is None else u.energy_density[:, 0]
    grad = (curvature(g) - Q) * g.values
    # d|Omega_g| = -g dtheta; the penalty acts on |Omega_g| - |Omega_h|
    body_gap = cfg.target_area - cavity_area(g)
    grad = grad - lam * np.sign(body_gap) * g.values
    reg, d = _regularization(g, cfg)
    if reg:
        eps = cfg.epsilon
        dd = cfg.epsilon_weight * (d - eps) / math.sqrt((d - eps) ** 2 + eps)
        grad = grad + dd * np.sign(g.values**2 - cfg.reference.values**2) * g.values
    return grad


def project_gradient(g, grad):
    """Remove the component along ``g`` (first-order area change)."""
    return project_perturbation(g, grad).values


def rescale_to_area(values, target_area, R0):
    values = np.asarray(values, dtype=float)
    scale = math.sqrt(target_area / (0.5 * periodic_quadrature(values**2)))
    return RadialProfile(values * scale, R0)


@dataclass
class DescentState:
    profile: RadialProfile
    objective: PenalizedObjective
    step: float
    iteration: int
    grad_norm: float

    def row(self):
        o = self.objective
        return (self.iteration, o.elastic, o.perimeter, o.penalty, o.total, self.grad_norm, o.area)


@dataclass
class DescentTrace:
    states: list = field(default_factory=list)
    converged: bool = False

    @property
    def final(self):
        return self.states[-1]

    def rows(self):
        return [s.row() for s in self.states]


def _evaluate(g, cfg):
    u = _equilibrium(g, cfg)
    obj = objective(g, cfg, u)
    d = project_gradient(g, shape_gradient(g, cfg, u))
    return obj, d


def descend(g0, cfg, max_iter=500, tol=1e-8, step=1.0, max_halvings=MAX_HALVINGS):
    """Projected gradient descent with backtracking and area re-projection.

    Parameters
    ----------
    g0 : RadialProfile
        Start; rescaled to the target area before the first evaluation.
    cfg : DescentConfig
    max_iter : int
        Iteration budget; 0 returns the evaluated start only.
    tol : float
        Stop once the L2 norm of the projected gradient is at most ``tol``.
    step : float
        Initial trial step; doubled after each accepted step.

    Returns
    -------
    DescentTrace
        Raises :class:`StalledDescentError` if a line search exhausts its
        halvings.
    """
    if max_iter < 0:
        raise DomainError("max_iter must be nonnegative")
    g = rescale_to_area(g0.values, cfg.target_area, g0.R0)
    obj, d = _evaluate(g, cfg)
    gnorm = math.sqrt(periodic_quadrature(d**2))
    trace = DescentTrace([DescentState(g, obj, step, 0, gnorm)])
    for it in range(1, max_iter + 1):
        if gnorm <= tol:
            trace.converged = True
            break
        t = step
        for _ in range(max_halvings):
            try:
                trial = rescale_to_area(g.values - t * d, cfg.target_area, g.R0)
            except GeometryViolationError:
                t *= 0.5
                continue
            t_obj, t_d = _evaluate(trial, cfg)
            if t_obj.total <= obj.total - ARMIJO * t * gnorm**2:
                break
            t *= 0.5
        else:
            state = DescentState(g, obj, t, it, gnorm)
            raise StalledDescentError(
                f"line search failed after {max_halvings} halvings at iteration {it}",
                state=state,
                trace=trace,
            )
        g, obj, d = trial, t_obj, t_d
        gnorm = math.sqrt(periodic_quadrature(d**2))
        step = 2.0 * t
        trace.states.append(DescentState(g, obj, t, it, gnorm))
        logger.debug("iter %d: total %.15g, |grad| %.3e, step %.3e", it, obj.total, gnorm, t)
    else:
        trace.converged = gnorm <= tol
    return trace


@dataclass
class ProbeReport:
    ratios: np.ndarray
    energy_gaps: np.ndarray
    sym_diffs: np.ndarray
    amplitude: float
    seed: int

    @property
    def samples(self):
        return int(self.ratios.size)

    @property
    def min_ratio(self):
        return float(self.ratios.min())

    @property
    def fitted_c(self):
        return self.min_ratio

    @property
    def passes(self):
        return bool(np.all(self.energy_gaps > 0))

    def to_dict(self):
        return {
            "samples": self.samples,
            "min_ratio": self.min_ratio,
            "fitted_c": self.fitted_c,
            "amplitude": self.amplitude,
            "seed": self.seed,
            "all_positive": self.passes,
        }


def random_directions(h, n_samples, seed, min_frequency=1, max_frequency=8):
    """Random band-limited directions with ``int h psi = 0`` and unit max norm.

    Coefficients of frequency ``n`` are standard normal scaled by ``1/n^2``.
    """
    if not 1 <= min_frequency <= max_frequency <= h.n_theta // 3:
        raise DomainError("frequency range outside the band limit")
    rng = np.random.default_rng(seed)
    freqs = np.arange(min_frequency, max_frequency + 1)
    out = []
    for _ in range(n_samples):
        c = rng.standard_normal((2, freqs.size)) / freqs**2
        psi = c[0] @ np.cos(np.outer(freqs, h.theta)) + c[1] @ np.sin(np.outer(freqs, h.theta))
        psi = project_perturbation(h, psi).values
        out.append(psi / np.abs(psi).max())
    return out


def minimality_probe(h, cfg, n_samples=50, amplitude=1e-2, seed=0, min_frequency=1, max_frequency=8):
    """Sample ``(F(g) - F(h)) / |F_g sym-diff F_h|^2`` over random area-preserving ``g``.

    ``amplitude`` is relative to the clearance ``min(min h, R0 - max h)``;
    each ``g`` lies on the area-preserving path from ``h``.
    """
    if not amplitude > 0:
        raise DomainError("amplitude must be positive")
    clearance = min(h.values.min() - MIN_RELATIVE_RADIUS * h.R0, h.R0 - h.values.max())
    f0 = functional(h, cfg.bc, cfg.params, cfg.n_rho)
    gaps, diffs = [], []
    for psi in random_directions(h, n_samples, seed, min_frequency, max_frequency):
        g = RadialProfile(path_values(h, amplitude * clearance * psi, 1.0), h.R0)
        gaps.append(functional(g, cfg.bc, cfg.params, cfg.n_rho) - f0)
        diffs.append(symmetric_difference_area(g, h))
    gaps, diffs = np.array(gaps), np.array(diffs)
    return ProbeReport(gaps / diffs**2, gaps, diffs, float(amplitude), int(seed))
