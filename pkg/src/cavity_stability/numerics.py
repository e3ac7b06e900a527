"""Periodic spectral primitives, Chebyshev helpers and small dense linear algebra."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy import optimize

from .exceptions import BracketError, IndefiniteGramError, InvalidGridError

EIG_RESIDUAL_RTOL = 1e-12
ROOT_TOL = 1e-10


@dataclass(frozen=True)
class PeriodicGrid:
    """Equispaced nodes ``theta_j = 2*pi*j/n_theta`` on ``[0, 2*pi)``."""

    n_theta: int

    def __post_init__(self):
        check_grid_size(self.n_theta)

    @property
    def nodes(self):
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta

    @property
    def spacing(self):
        return 2.0 * np.pi / self.n_theta

    @property
    def band_limit(self):
        return self.n_theta // 3


def check_grid_size(n):
    if n < 8 or n % 2:
        raise InvalidGridError(f"periodic grids need an even size >= 8, got {n}")


def fourier_diff(samples, order=1, axis=0):
    """Spectral derivative of periodic samples along ``axis``.

    The Nyquist coefficient is dropped for odd orders so that real input
    stays real; for band-limited input below Nyquist the result is exact.
    """
    f = np.asarray(samples, dtype=float)
    n = f.shape[axis]
    check_grid_size(n)
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    k = np.fft.rfftfreq(n, d=1.0 / n)
    if order == 1:
        mult = 1j * k
        mult[-1] = 0.0
    else:
        mult = -(k**2)
    shape = [1] * f.ndim
    shape[axis] = mult.size
    return np.fft.irfft(np.fft.rfft(f, axis=axis) * mult.reshape(shape), n=n, axis=axis)


def fourier_filter(samples, band_limit, axis=0):
    """Zero every Fourier mode above ``band_limit``."""
    f = np.asarray(samples, dtype=float)
    n = f.shape[axis]
    coef = np.fft.rfft(f, axis=axis)
    idx = [slice(None)] * f.ndim
    idx[axis] = slice(band_limit + 1, None)
    coef[tuple(idx)] = 0.0
    return np.fft.irfft(coef, n=n, axis=axis)


def periodic_quadrature(samples, axis=0):
    """Trapezoid rule for an integral over one period."""
    f = np.asarray(samples, dtype=float)
    if f.size == 0 or f.shape[axis] == 0:
        raise InvalidGridError("cannot integrate an empty sample vector")
    return 2.0 * np.pi * np.mean(f, axis=axis)


def chebyshev_grid(n):
    """Chebyshev-Gauss-Lobatto nodes on [0, 1] with ``s[0] = 0``, ``s[-1] = 1``.

    Returns the nodes and the first-derivative matrix with respect to ``s``.
    """
    if n < 3:
        raise InvalidGridError("need at least 3 Chebyshev nodes")
    m = n - 1
    x = np.cos(np.pi * np.arange(n) / m)
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n)
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(n))
    D -= np.diag(D.sum(axis=1))
    # s = (1 - x)/2  =>  d/ds = -2 d/dx
    return (1.0 - x) / 2.0, -2.0 * D


def clenshaw_curtis_weights(n):
    """Quadrature weights on [0, 1] for the nodes of :func:`chebyshev_grid`."""
    m = n - 1
    theta = np.pi * np.arange(n) / m
    w = np.zeros(n)
    v = np.ones(m - 1)
    inner = theta[1:-1]
    if m % 2 == 0:
        w[0] = w[-1] = 1.0 / (m**2 - 1)
        for k in range(1, m // 2):
            v -= 2.0 * np.cos(2 * k * inner) / (4 * k**2 - 1)
        v -= np.cos(m * inner) / (m**2 - 1)
    else:
        w[0] = w[-1] = 1.0 / m**2
        for k in range(1, (m - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * inner) / (4 * k**2 - 1)
    w[1:-1] = 2.0 * v / m
    return w / 2.0


def sym_eig_min(M, G=None):
    """Smallest generalized eigenpair of ``M x = lam G x``.

    Parameters
    ----------
    M : (n, n) array_like
        Symmetric matrix; it is symmetrized before use.
    G : (n, n) array_like, optional
        Symmetric positive definite Gram matrix. Identity when omitted.

    Returns
    -------
    lam : float
    x : ndarray
        Eigenvector normalized so that ``x @ G @ x == 1``.
    """
    lams, vecs = sym_eig_all(M, G)
    return float(lams[0]), vecs[:, 0]


def sym_eig_all(M, G=None):
    """All generalized eigenpairs, ascending, eigenvectors G-orthonormal."""
    M = np.asarray(M, dtype=float)
    M = 0.5 * (M + M.T)
    n = M.shape[0]
    if G is None:
        G = np.eye(n)
    G = np.asarray(G, dtype=float)
    G = 0.5 * (G + G.T)
    try:
        chol = sla.cholesky(G, lower=True)
    except sla.LinAlgError as exc:
        raise IndefiniteGramError("Gram matrix is not positive definite") from exc
    # reduce to standard form C = L^-1 M L^-T
    tmp = sla.solve_triangular(chol, M, lower=True)
    C = sla.solve_triangular(chol, tmp.T, lower=True).T
    C = 0.5 * (C + C.T)
    lams, Y = np.linalg.eigh(C)
    X = sla.solve_triangular(chol.T, Y, lower=False)
    scale = max(np.linalg.norm(M, 2), 1.0)
    resid = np.linalg.norm(M @ X - (G @ X) * lams, axis=0)
    if np.any(resid > 1e-10 * scale * np.maximum(1.0, np.linalg.norm(G @ X, axis=0))):
        raise IndefiniteGramError("generalized eigen residual too large; Gram matrix near singular")
    return lams, X


def bisect(f, lo, hi, tol=ROOT_TOL):
    """Root of ``f`` bracketed in ``[lo, hi]`` to interval width ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo:.3g}, {fhi:.3g}")
    return float(optimize.bisect(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))
