"""First and second variation of bulk elastic energy plus perimeter under
area-preserving perturbations of the cavity.

A perturbation is a periodic function ``psi`` moving the boundary radially,
``h -> h + t psi``; its normal component on the boundary is
``f = psi h / sqrt(h^2 + h'^2)``. At a critical pair the second variation is

    d2F[psi] = -int_body 2 Q(E(u_psi)) + int_bdry |d_tau f|^2
               - int_bdry (d_nu Q(E(u)) + k^2) f^2,

where ``u_psi`` vanishes on the outer circle and carries the cavity traction
``div_tau(f CE(u))``.
"""

from dataclasses import dataclass, field

import numpy as np

from .elasticity import (
    DisplacementField,
    boundary_stress,
    boundary_traces,
    elastic_energy,
    solve_equilibrium,
    solve_traction_problem,
)
from .exceptions import DomainError, InvalidGridError, NotCriticalError
from .geometry import (
    arclength_derivative,
    curvature,
    normal_trace,
    path_values,
    perimeter,
    RadialProfile,
    tangent_trace,
)
from .numerics import fourier_diff, periodic_quadrature, sym_eig_all

CRITICALITY_RTOL = 1e-6
POSITIVITY_RTOL = 1e-7
NEUTRAL_ATOL = 1e-8


@dataclass
class Perturbation:
    """Perturbation satisfying the first-order area constraint ``int h psi = 0``."""

    values: np.ndarray
    constraint_residual: float

    @property
    def n_theta(self):
        return self.values.size


def project_perturbation(h, psi):
    """L2(dtheta)-orthogonal projection of ``psi`` onto ``{int h psi = 0}``."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (h.n_theta,):
        raise InvalidGridError("perturbation must live on the profile grid")
    hv = h.values
    out = psi - hv * (periodic_quadrature(hv * psi) / periodic_quadrature(hv * hv))
    return Perturbation(out, float(periodic_quadrature(hv * out)))


def _psi_values(psi):
    return psi.values if isinstance(psi, Perturbation) else np.asarray(psi, dtype=float)


def functional(g, bc, p, n_rho=None):
    """Bulk elastic energy at equilibrium plus perimeter of the cavity."""
    return elastic_part(g, bc, p, n_rho) + perimeter(g)


def elastic_part(g, bc, p, n_rho=None):
    if bc.alpha == 0:
        return 0.0
    kwargs = {} if n_rho is None else {"n_rho": n_rho}
    return elastic_energy(solve_equilibrium(g, bc, p, **kwargs))


def first_variation(h, u, psi):
    """``int_bdry (k - Q(E(u))) f dH^1`` for the perturbation ``psi``."""
    psi = _psi_values(psi)
    Q = u.energy_density[:, 0]
    return float(periodic_quadrature((curvature(h) - Q) * psi * h.values))


@dataclass
class CriticalityReport:
    residual_function: np.ndarray
    lagrange_constant: float
    deviation: float

    @property
    def is_critical(self):
        return self.deviation <= CRITICALITY_RTOL * (abs(self.lagrange_constant) + 1.0)

    def to_dict(self):
        return {
            "lagrange_constant": self.lagrange_constant,
            "deviation": self.deviation,
            "is_critical": bool(self.is_critical),
        }


def criticality(h, u):
    """How far ``Q(E(u)) - k`` is from being constant along the cavity."""
    resid = u.energy_density[:, 0] - curvature(h)
    ell = h.line_element
    const = float(periodic_quadrature(resid * ell) / periodic_quadrature(ell))
    return CriticalityReport(resid, const, float(np.max(np.abs(resid - const))))


def _check_critical(h, u, force):
    report = criticality(h, u)
    if not force and not report.is_critical:
        raise NotCriticalError(
            f"pair is not critical: deviation {report.deviation:.3e} "
            f"(constant {report.lagrange_constant:.6g})",
            deviation=report.deviation,
        )
    return report


def adjoint_traction(h, u, f):
    """Polar components of ``div_tau(f CE(u))`` on the cavity boundary.

    With ``CE(u) nu = 0`` this is the arclength derivative of ``f CE(u) tau``.
    """
    s_rr, s_tt, s_rt = boundary_stress(u)
    ell = h.line_element
    tau_r, tau_t = h.d1 / ell, h.values / ell
    v_r = f * (s_rr * tau_r + s_rt * tau_t)
    v_t = f * (s_rt * tau_r + s_tt * tau_t)
    # derivative of v_r e_rho + v_t e_theta, accounting for the rotating basis
    d_r = fourier_diff(v_r, 1) - v_t
    d_t = fourier_diff(v_t, 1) + v_r
    return d_r / ell, d_t / ell


def solve_adjoint(h, u, psi, p=None):
    """Displacement response ``u_psi`` to the boundary perturbation ``psi``.

    The returned field vanishes on the outer circle.
    """
    if p is not None and p != u.params:
        raise DomainError("adjoint must use the parameters of the equilibrium")
    f = normal_trace(h, _psi_values(psi))
    return solve_traction_problem(u, adjoint_traction(h, u, f))


def elastic_inner(a, b):
    """``int_body CE(a) : E(b)`` for two fields on the same grid."""
    ea, eb = a.strains, b.strains
    p = a.params
    dens = 2 * p.mu * (ea[0] * eb[0] + ea[1] * eb[1] + 2 * ea[2] * eb[2])
    dens = dens + p.lam * (ea[0] + ea[1]) * (eb[0] + eb[1])
    return float(a.integrate(dens))


def second_variation_terms(h, u, psi, force=False):
    """All contributions to the second variation along ``psi``.

    Returns a dict with ``elastic`` (the nonpositive nonlocal term),
    ``tangential``, ``curvature_normal``, ``total``; with ``force=True`` also
    the two terms that vanish at critical pairs under the area constraint,
    evaluated along the area-preserving path whose velocity is ``psi``.
    """
    report = _check_critical(h, u, force)
    psi = _psi_values(psi)
    ell = h.line_element
    f = normal_trace(h, psi)
    df = arclength_derivative(h, f)
    k = curvature(h)
    traces = boundary_traces(u)
    if u.bc is not None and u.bc.alpha == 0:
        elastic = 0.0
    else:
        v = solve_adjoint(h, u, psi)
        elastic = -elastic_inner(v, v)
    terms = {
        "elastic": elastic,
        "tangential": float(periodic_quadrature(df**2 * ell)),
        "curvature_normal": float(-periodic_quadrature((traces.boundary_dQ_dnu + k**2) * f**2 * ell)),
    }
    total = terms["elastic"] + terms["tangential"] + terms["curvature_normal"]
    if force:
        terms.update(_dropped_terms(h, psi, f, report.residual_function))
        total += terms["tangential_transport"] + terms["volume_curvature"]
    terms["total"] = float(total)
    return terms


def _dropped_terms(h, psi, f, q_minus_k):
    ell = h.line_element
    t = tangent_trace(h, psi)
    transport = periodic_quadrature(q_minus_k * fourier_diff(f * t, 1))
    hh = periodic_quadrature(h.values**2)
    psi_ddot = -h.values * periodic_quadrature(psi**2) / hh
    nu_dd = normal_trace(h, psi_ddot)
    vol = -periodic_quadrature(q_minus_k * (f**2 * ell / h.values**2 + nu_dd) * ell)
    return {"tangential_transport": float(transport), "volume_curvature": float(vol)}


def second_variation(h, u, psi, force=False):
    """Value of the second-variation quadratic form at ``psi``."""
    return second_variation_terms(h, u, psi, force)["total"]


def mode_labels(n_modes):
    labels = ["const"]
    for n in range(1, n_modes + 1):
        labels += [f"cos{n}", f"sin{n}"]
    return labels


def mode_basis(theta, n_modes):
    """Rows ``1, cos t, sin t, ..., cos N t, sin N t`` sampled at ``theta``."""
    rows = [np.ones_like(theta)]
    for n in range(1, n_modes + 1):
        rows += [np.cos(n * theta), np.sin(n * theta)]
    return np.array(rows)


@dataclass
class QuadraticFormMatrix:
    """Second variation and H1 boundary Gram matrix over a Fourier basis.

    ``M`` and ``G`` are over the raw modes; ``projector`` has orthonormal
    columns spanning the coefficient vectors that satisfy the area constraint.
    """

    modes: list
    frequencies: np.ndarray
    basis: np.ndarray
    M: np.ndarray
    G: np.ndarray
    constraint: np.ndarray
    projector: np.ndarray = field(init=False)

    def __post_init__(self):
        self.projector = constraint_projector(self.constraint)

    def constrained(self):
        P = self.projector
        return P.T @ self.M @ P, P.T @ self.G @ P

    def synthesize(self, coeffs):
        return np.asarray(coeffs) @ self.basis

    def restrict(self, frequencies):
        """Sub-form on the modes whose frequency is in ``frequencies``."""
        keep = np.isin(self.frequencies, list(frequencies))
        return QuadraticFormMatrix(
            modes=[m for m, k in zip(self.modes, keep) if k],
            frequencies=self.frequencies[keep],
            basis=self.basis[keep],
            M=self.M[np.ix_(keep, keep)],
            G=self.G[np.ix_(keep, keep)],
            constraint=self.constraint[keep],
        )


def constraint_projector(a):
    """Orthonormal basis of the orthogonal complement of ``a``."""
    a = np.asarray(a, dtype=float)
    n = a.size
    if np.linalg.norm(a) <= 1e-14 * max(1.0, np.abs(a).max(initial=0.0)):
        return np.eye(n)
    _, _, vt = np.linalg.svd(a[None, :])
    return vt[1:].T


def assemble(h, u, n_modes, force=False):
    """Assemble the quadratic form over modes up to frequency ``n_modes``."""
    if n_modes > h.n_theta // 3:
        raise DomainError(f"n_modes={n_modes} exceeds the band limit {h.n_theta // 3}")
    report = _check_critical(h, u, force)
    theta = h.theta
    basis = mode_basis(theta, n_modes)
    freqs = np.concatenate([[0], np.repeat(np.arange(1, n_modes + 1), 2)])
    ell = h.line_element
    F = basis * (h.values / ell)
    dF = fourier_diff(F, 1, axis=1) / ell
    k = curvature(h)
    traces = boundary_traces(u)
    w = ell * (2 * np.pi / h.n_theta)

    def gram(a, b, weight):
        return (a * weight) @ b.T

    M = gram(dF, dF, w) - gram(F, F, (traces.boundary_dQ_dnu + k**2) * w)
    if u.bc is None or u.bc.alpha != 0:
        fields = [solve_adjoint(h, u, row) for row in basis]
        M -= _elastic_gram(fields)
    if force:
        M += _dropped_gram(h, basis, F, report.residual_function)
    G = gram(F, F, w) + gram(dF, dF, w)
    constraint = basis @ h.values * (2 * np.pi / h.n_theta)
    return QuadraticFormMatrix(
        modes=mode_labels(n_modes),
        frequencies=freqs,
        basis=basis,
        M=0.5 * (M + M.T),
        G=0.5 * (G + G.T),
        constraint=constraint,
    )


def _elastic_gram(fields):
    p = fields[0].params
    e = [np.stack(fl.strains) for fl in fields]
    E = np.stack(e)  # (K, 3, n_theta, n_rho)
    tr = E[:, 0] + E[:, 1]
    geo = fields[0].operator.geo
    wq = fields[0].operator.weights[None, :] * geo.rho * geo.L * (2 * np.pi / fields[0].n_theta)
    dev = E * np.sqrt(wq)
    dev[:, 2] *= np.sqrt(2.0)
    flat = dev.reshape(len(fields), -1)
    trw = (tr * np.sqrt(wq)).reshape(len(fields), -1)
    return 2 * p.mu * flat @ flat.T + p.lam * trw @ trw.T


def _dropped_gram(h, basis, F, q_minus_k):
    ell = h.line_element
    wq = 2 * np.pi / h.n_theta
    T = basis * (h.d1 / ell)
    K = basis.shape[0]
    transport = np.empty((K, K))
    for i in range(K):
        prod = F[i] * T + T[i] * F  # symmetric bilinear part of d_tau(f t)
        transport[i] = 0.5 * (fourier_diff(prod, 1, axis=1) @ q_minus_k) * wq
    hh = periodic_quadrature(h.values**2)
    A = (F * (q_minus_k * ell**2 / h.values**2 * wq)) @ F.T
    psi_dd_coef = -periodic_quadrature(q_minus_k * h.values**2) / hh
    B = psi_dd_coef * (basis @ basis.T) * wq
    return transport - A - B


@dataclass
class SpectrumResult:
    min_eig: float
    mode: np.ndarray
    c0: float
    eigenvalues: np.ndarray
    tolerance: float

    @property
    def positive(self):
        return self.c0 > self.tolerance

    @property
    def neutral_count(self):
        return int(np.sum(np.abs(self.eigenvalues) <= max(NEUTRAL_ATOL, self.tolerance)))

    @property
    def verdict(self):
        """``stable`` unless a constrained eigenvalue is genuinely negative
        or zero modes other than neutral ones are missing positivity."""
        if self.positive:
            return "stable"
        tol = max(NEUTRAL_ATOL, self.tolerance)
        if np.all(self.eigenvalues >= -tol):
            return "stable" if self.neutral_count else "unstable"
        return "unstable"


def stability_spectrum(Q):
    """Constrained spectrum of the quadratic form.

    ``c0`` is the smallest eigenvalue of the second variation relative to
    the squared H1 norm of the boundary trace; ``min_eig`` is relative to the
    Euclidean norm of the Fourier coefficients. ``mode`` holds raw-basis
    coefficients of the minimizing perturbation.
    """
    Mc, Gc = Q.constrained()
    lams, vecs = sym_eig_all(Mc, Gc)
    plain = np.linalg.eigvalsh(0.5 * (Mc + Mc.T))
    tol = POSITIVITY_RTOL * max(np.linalg.norm(Q.M, 2), 1.0)
    return SpectrumResult(
        min_eig=float(plain[0]),
        mode=Q.projector @ vecs[:, 0],
        c0=float(lams[0]),
        eigenvalues=lams,
        tolerance=tol,
    )


def second_variation_fd_check(h, u, psi, step=1e-3, force=False):
    """Compare the second variation with a second central difference of the
    energy along the area-preserving path with velocity ``psi``.

    Returns ``(analytic, numeric, rel_err)``.
    """
    if not 1e-4 <= step <= 1e-2:
        raise DomainError("step must lie in [1e-4, 1e-2]")
    psi = _psi_values(psi)
    analytic = second_variation(h, u, psi, force=force)
    if not np.any(psi):
        return analytic, 0.0, 0.0
    bc, p, n_rho = u.bc, u.params, u.n_rho
    f0 = functional(h, bc, p, n_rho)
    fp = functional(RadialProfile(path_values(h, psi, step), h.R0), bc, p, n_rho)
    fm = functional(RadialProfile(path_values(h, psi, -step), h.R0), bc, p, n_rho)
    numeric = (fp + fm - 2 * f0) / step**2
    rel = abs(numeric - analytic) / max(abs(analytic), 1e-300)
    return analytic, float(numeric), float(rel)


def assembly_consistency(Q, h, u, coeffs, force=False):
    """Relative gap between ``x^T M x`` and the pointwise second variation."""
    x = np.asarray(coeffs, dtype=float)
    via_matrix = x @ Q.M @ x
    direct = second_variation(h, u, Q.synthesize(x), force=force)
    return abs(via_matrix - direct) / max(abs(direct), 1e-300)
