"""Plane Lame equilibrium on the region between a star-shaped cavity and the
circle of radius ``R0``.

Discretization
--------------
Polar displacement components ``(u_rho, u_theta)`` are collocated on the
tensor grid ``(theta_j, s_k)``: Fourier nodes in angle, Chebyshev-Gauss-Lobatto
nodes in the mapped radius ``rho = h(theta) + s (R0 - h(theta))``. Rows are
the Lame equations at interior nodes, the traction at ``s = 0`` and the
Dirichlet data at ``s = 1``. Stresses are formed from the strains first and
their divergence is differentiated again.

Solving
-------
For a round cavity the operator is block diagonal in the angular Fourier
index, one ``2 n_rho`` block per mode. Those blocks for the disk of the mean
radius are LU-factorized and applied as a left preconditioner; GMRES
handles the angular coupling of a non-round profile. On a disk the
preconditioner is the exact inverse.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, gmres

from .exceptions import DomainError, SolverFailure
from .geometry import RadialProfile
from .numerics import chebyshev_grid, clenshaw_curtis_weights, fourier_diff, periodic_quadrature

logger = logging.getLogger(__name__)

DEFAULT_N_RHO = 48
# inner GMRES tolerance; accuracy comes from refinement on the true residual
GMRES_RTOL = 1e-8
REFINE_RTOL = 1e-9
MAX_REFINE = 4
SOLVE_FAIL_RTOL = 1e-8
CONDITION_WARN = 1e12


@dataclass(frozen=True)
class LameParams:
    """Isotropic Lame coefficients with ``mu > 0`` and ``lam > -mu``."""

    mu: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        if not (self.mu > 0 and self.lam > -self.mu):
            raise DomainError(f"ellipticity violated: mu={self.mu}, lambda={self.lam}")

    @property
    def eta(self):
        return min(self.mu, self.mu + self.lam)

    def stress(self, e_rr, e_tt, e_rt):
        tr = e_rr + e_tt
        return (
            2 * self.mu * e_rr + self.lam * tr,
            2 * self.mu * e_tt + self.lam * tr,
            2 * self.mu * e_rt,
        )

    def energy_density(self, e_rr, e_tt, e_rt):
        """``Q(E) = 1/2 CE:E = mu |E|^2 + lambda/2 (tr E)^2``."""
        return self.mu * (e_rr**2 + e_tt**2 + 2 * e_rt**2) + 0.5 * self.lam * (e_rr + e_tt) ** 2


@dataclass(frozen=True)
class BoundaryData:
    """Radial stretching ``u0 = alpha * R0 * sigma(theta)`` on the outer circle."""

    alpha: float = 1.0
    R0: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.alpha):
            raise DomainError("alpha must be finite")

    def polar_values(self, theta):
        """``(u_rho, u_theta)`` prescribed on the outer circle."""
        return np.full_like(theta, self.alpha * self.R0), np.zeros_like(theta)


@dataclass
class _Geometry:
    # every array broadcasts against (batch, n_rho)
    L: np.ndarray
    rho: np.ndarray
    c: np.ndarray
    nu_r: np.ndarray
    nu_t: np.ndarray


def _strains(ur, ut, geo, Ds, dth):
    ur_s, ut_s = ur @ Ds.T, ut @ Ds.T
    ur_t = dth(ur) + geo.c * ur_s
    ut_t = dth(ut) + geo.c * ut_s
    e_rr = ur_s / geo.L
    e_tt = (ur + ut_t) / geo.rho
    e_rt = 0.5 * (ur_t / geo.rho + ut_s / geo.L - ut / geo.rho)
    return e_rr, e_tt, e_rt


def _rows(ur, ut, geo, Ds, dth, p):
    """Collocation rows (interior Lame, cavity traction, outer Dirichlet)."""
    s_rr, s_tt, s_rt = p.stress(*_strains(ur, ut, geo, Ds, dth))
    srr_s, stt_s, srt_s = s_rr @ Ds.T, s_tt @ Ds.T, s_rt @ Ds.T
    div_r = srr_s / geo.L + (dth(s_rt) + geo.c * srt_s) / geo.rho + (s_rr - s_tt) / geo.rho
    div_t = srt_s / geo.L + (dth(s_tt) + geo.c * stt_s) / geo.rho + 2 * s_rt / geo.rho
    scale = geo.L**2 / p.mu
    row_r = div_r * scale
    row_t = div_t * scale
    tscale = geo.L[..., 0] / p.mu
    row_r[..., 0] = (s_rr[..., 0] * geo.nu_r + s_rt[..., 0] * geo.nu_t) * tscale
    row_t[..., 0] = (s_rt[..., 0] * geo.nu_r + s_tt[..., 0] * geo.nu_t) * tscale
    row_r[..., -1] = ur[..., -1]
    row_t[..., -1] = ut[..., -1]
    return row_r, row_t


_PRECONDITIONERS = {}


class _DiskPreconditioner:
    """Per-mode LU factors of the operator for a circular cavity."""

    def __init__(self, radius, R0, n_theta, n_rho, p):
        s, Ds = chebyshev_grid(n_rho)
        L = np.full((1, n_rho), R0 - radius)
        geo = _Geometry(L=L, rho=radius + s[None, :] * L, c=np.zeros((1, n_rho)),
                        nu_r=np.ones(1), nu_t=np.zeros(1))
        n = n_rho
        eye = np.eye(n)
        zero = np.zeros((n, n))
        basis_r = np.vstack([eye, zero]).astype(complex)
        basis_t = np.vstack([zero, eye]).astype(complex)
        self.n_theta, self.n_rho = n_theta, n_rho
        self.factors = []
        cond = 0.0
        for m in range(n_theta // 2 + 1):
            mult = 0.0 if m == n_theta // 2 else 1j * m
            rr, rt = _rows(basis_r, basis_t, geo, Ds, lambda f, mult=mult: mult * f, p)
            block = np.concatenate([rr, rt], axis=1).T
            if m == 0:
                block = block.real
            cond = max(cond, np.linalg.cond(block))
            if not np.isfinite(cond):
                raise SolverFailure("singular collocation block", condition=cond)
            self.factors.append(sla.lu_factor(block, check_finite=False))
        self.condition = cond
        if cond > CONDITION_WARN:
            logger.warning("collocation blocks ill conditioned: cond ~ %.3g", cond)

    @classmethod
    def cached(cls, radius, R0, n_theta, n_rho, p):
        key = (round(radius, 15), R0, n_theta, n_rho, p.mu, p.lam)
        if key not in _PRECONDITIONERS:
            if len(_PRECONDITIONERS) > 64:
                _PRECONDITIONERS.clear()
            _PRECONDITIONERS[key] = cls(radius, R0, n_theta, n_rho, p)
        return _PRECONDITIONERS[key]

    def apply(self, rows):
        """Apply the inverse block operator to rows shaped ``(2, n_theta, n_rho)``."""
        n = self.n_rho
        coef = np.fft.rfft(rows, axis=1)
        out = np.empty_like(coef)
        for m, lu in enumerate(self.factors):
            rhs = np.concatenate([coef[0, m], coef[1, m]])
            if m == 0 or m == self.n_theta // 2:
                x = sla.lu_solve(lu, rhs.real, check_finite=False).astype(complex)
            else:
                x = sla.lu_solve(lu, rhs, check_finite=False)
            out[0, m], out[1, m] = x[:n], x[n:]
        return np.fft.irfft(out, n=self.n_theta, axis=1)


class LameCollocation:
    """Collocation operator of the Lame system for one cavity profile."""

    def __init__(self, profile, params, n_rho=DEFAULT_N_RHO):
        if n_rho < 4:
            raise DomainError("n_rho must be at least 4")
        self.profile = profile
        self.params = params
        self.n_theta = profile.n_theta
        self.n_rho = n_rho
        self.s, self.Ds = chebyshev_grid(n_rho)
        self.weights = clenshaw_curtis_weights(n_rho)
        h = profile.values[:, None]
        h1 = profile.d1[:, None]
        L = profile.R0 - h
        s = self.s[None, :]
        ell = profile.line_element
        self.geo = _Geometry(
            L=np.broadcast_to(L, (self.n_theta, n_rho)),
            rho=h + s * L,
            c=-h1 * (1 - s) / L,
            nu_r=profile.values / ell,
            nu_t=-profile.d1 / ell,
        )
        self.precond = _DiskPreconditioner.cached(
            float(np.mean(profile.values)), profile.R0, self.n_theta, n_rho, params
        )

    @staticmethod
    def dtheta(f):
        return fourier_diff(f, 1, axis=0)

    def apply(self, ur, ut):
        return _rows(ur, ut, self.geo, self.Ds, self.dtheta, self.params)

    def strains(self, ur, ut):
        return _strains(ur, ut, self.geo, self.Ds, self.dtheta)

    def rhs(self, dirichlet=None, traction=None):
        """Right-hand side in row layout ``(2, n_theta, n_rho)``.

        ``dirichlet`` is the pair of polar components on the outer circle and
        ``traction`` the pair of polar traction components on the cavity.
        """
        b = np.zeros((2, self.n_theta, self.n_rho))
        if dirichlet is not None:
            b[0, :, -1], b[1, :, -1] = dirichlet
        if traction is not None:
            tscale = self.geo.L[:, 0] / self.params.mu
            b[0, :, 0] = traction[0] * tscale
            b[1, :, 0] = traction[1] * tscale
        return b

    def residual(self, ur, ut, b):
        rr, rt = self.apply(ur, ut)
        return np.stack([rr, rt]) - b

    def solve(self, b):
        """Solve for ``(u_rho, u_theta)`` given the stacked right-hand side.

        Preconditioned GMRES inside a loop of iterative refinement on the
        unpreconditioned residual, which stops at ``REFINE_RTOL`` (max norm,
        relative to the data).
        """
        shape = (2, self.n_theta, self.n_rho)
        size = int(np.prod(shape))
        P = self.precond
        b = np.asarray(b, dtype=float).reshape(shape)
        bmax = np.max(np.abs(b))
        if bmax == 0.0:
            return np.zeros(shape[1:]), np.zeros(shape[1:])

        def residual(x):
            return b - np.stack(self.apply(x[0], x[1]))

        def matvec(v):
            v = v.reshape(shape)
            return P.apply(np.stack(self.apply(v[0], v[1]))).ravel()

        x = P.apply(b)
        op = LinearOperator((size, size), matvec=matvec, dtype=float)
        for _ in range(MAX_REFINE):
            r = residual(x)
            rel = np.max(np.abs(r)) / bmax
            if rel <= REFINE_RTOL:
                break
            if self.profile.is_round:
                # the preconditioner is the exact inverse
                x = x + P.apply(r)
                continue
            pr = P.apply(r).ravel()
            d, info = gmres(op, pr, rtol=GMRES_RTOL, atol=0.0, restart=80, maxiter=25)
            if info < 0:
                raise SolverFailure(f"GMRES breakdown (info={info})", condition=P.condition)
            x = x + d.reshape(shape)
        else:
            rel = np.max(np.abs(residual(x))) / bmax
        if rel > SOLVE_FAIL_RTOL:
            raise SolverFailure(
                f"collocation system not solved: relative residual {rel:.2e}", condition=P.condition
            )
        return x[0], x[1]


@dataclass
class DisplacementField:
    """Polar displacement components on the mapped tensor grid.

    ``u_rho`` and ``u_theta`` have shape ``(n_theta, n_rho)``; index ``k = 0``
    is the cavity boundary and ``k = n_rho - 1`` the outer circle.
    """

    profile: RadialProfile
    params: LameParams
    u_rho: np.ndarray
    u_theta: np.ndarray
    operator: LameCollocation = field(repr=False)
    bc: BoundaryData = None

    @property
    def n_theta(self):
        return self.u_rho.shape[0]

    @property
    def n_rho(self):
        return self.u_rho.shape[1]

    @property
    def s(self):
        return self.operator.s

    @property
    def rho(self):
        return self.operator.geo.rho

    @cached_property
    def strains(self):
        return self.operator.strains(self.u_rho, self.u_theta)

    @cached_property
    def stresses(self):
        return self.params.stress(*self.strains)

    @cached_property
    def energy_density(self):
        return self.params.energy_density(*self.strains)

    def cartesian(self):
        """Cartesian components ``(u_x, u_y)``."""
        th = self.profile.theta[:, None]
        c, s = np.cos(th), np.sin(th)
        return self.u_rho * c - self.u_theta * s, self.u_rho * s + self.u_theta * c

    def integrate(self, density):
        """Integral over the elastic body of nodal values ``density``."""
        geo = self.operator.geo
        return periodic_quadrature((density * geo.rho * geo.L) @ self.operator.weights)

    def to_dict(self):
        ux, uy = self.cartesian()
        return {
            "n_theta": self.n_theta,
            "n_rho": self.n_rho,
            "R0": self.profile.R0,
            "profile": self.profile.to_dict(),
            "components": [ux.tolist(), uy.tolist()],
        }


@dataclass
class EnergyReport:
    bulk_energy: float
    boundary_Q: np.ndarray
    boundary_dQ_dnu: np.ndarray
    traction_residual: float

    def to_dict(self):
        return {
            "bulk_energy": float(self.bulk_energy),
            "boundary_Q": self.boundary_Q.tolist(),
            "boundary_dQ_dnu": self.boundary_dQ_dnu.tolist(),
            "traction_residual": float(self.traction_residual),
        }


def solve_equilibrium(h, bc, p, n_rho=DEFAULT_N_RHO):
    """Elastic equilibrium for cavity ``h`` under outer Dirichlet data ``bc``."""
    if bc.R0 != h.R0:
        raise DomainError("boundary data and profile disagree on R0")
    op = LameCollocation(h, p, n_rho)
    b = op.rhs(dirichlet=bc.polar_values(h.theta))
    ur, ut = op.solve(b)
    return DisplacementField(h, p, ur, ut, op, bc)


def solve_traction_problem(u, traction):
    """Field with zero outer displacement and cavity traction ``traction``.

    Reuses the operator (and preconditioner) of ``u``.
    """
    op = u.operator
    ur, ut = op.solve(op.rhs(traction=traction))
    return DisplacementField(u.profile, u.params, ur, ut, op, None)


def collocation_residual(u, bc=None, traction=None):
    """Max-norm residual of the collocation rows, relative to the data size."""
    op = u.operator
    dirichlet = bc.polar_values(u.profile.theta) if bc is not None else None
    b = op.rhs(dirichlet=dirichlet, traction=traction)
    res = op.residual(u.u_rho, u.u_theta, b)
    return float(np.max(np.abs(res)) / max(np.max(np.abs(b)), 1e-300))


def elastic_energy(u, p=None):
    """Bulk energy ``integral of Q(E(u))`` over the elastic body."""
    if p is not None and p != u.params:
        u = DisplacementField(u.profile, p, u.u_rho, u.u_theta, u.operator, u.bc)
    return float(u.integrate(u.energy_density))


def boundary_stress(u):
    """Polar stress components on the cavity boundary."""
    return tuple(comp[:, 0] for comp in u.stresses)


def boundary_traces(u, h=None, p=None):
    """``Q(E(u))`` and its normal derivative on the cavity boundary."""
    if h is not None and h is not u.profile and not np.array_equal(h.values, u.profile.values):
        raise DomainError("field was not solved on this profile")
    if p is not None and p != u.params:
        raise DomainError("field was solved with different Lame parameters")
    op = u.operator
    Q = u.energy_density
    Q_s = Q @ op.Ds.T
    geo = op.geo
    dQ_drho = Q_s[:, 0] / geo.L[:, 0]
    dQ_dth = op.dtheta(Q)[:, 0] + geo.c[:, 0] * Q_s[:, 0]
    prof = u.profile
    dQ_dnu = (prof.values * dQ_drho - prof.d1 * dQ_dth / geo.rho[:, 0]) / prof.line_element
    s_rr, s_tt, s_rt = boundary_stress(u)
    t_r = s_rr * geo.nu_r + s_rt * geo.nu_t
    t_t = s_rt * geo.nu_r + s_tt * geo.nu_t
    return EnergyReport(
        bulk_energy=elastic_energy(u),
        boundary_Q=Q[:, 0].copy(),
        boundary_dQ_dnu=dQ_dnu,
        traction_residual=float(np.max(np.hypot(t_r, t_t))),
    )


def outer_boundary_work(u):
    """``1/2 * integral over the outer circle of traction . u0``."""
    s_rr, _, s_rt = (comp[:, -1] for comp in u.stresses)
    R0 = u.profile.R0
    work = s_rr * u.u_rho[:, -1] + s_rt * u.u_theta[:, -1]
    return 0.5 * periodic_quadrature(work) * R0
