"""Chebyshev basis helpers on [0,1] and barycentric interpolation on [a,b].

The fixed-point solver expands E in Chebyshev polynomials of the shifted
variable s = 2u - 1, u in [0,1]; numpy.polynomial.chebyshev does the work.
The dimension engine interpolates on Chebyshev-Gauss grids of arbitrary
intervals with the closed-form barycentric weights.
"""
import numpy as np
import numpy.polynomial.chebyshev as _cheb


def gauss_nodes(n):
    """Chebyshev-Gauss nodes on (0,1), descending."""
    k = np.arange(n)
    return 0.5 * (1.0 + np.cos(np.pi * (2 * k + 1) / (2 * n)))


def eval01(coeffs, u):
    """Evaluate a shifted-Chebyshev series at u in [0,1]."""
    return _cheb.chebval(2.0 * np.asarray(u) - 1.0, coeffs)


def der01(coeffs):
    """Coefficients of d/du of a shifted-Chebyshev series (chain factor 2)."""
    return 2.0 * _cheb.chebder(coeffs)


def vander01(u, degree):
    """Collocation matrix Phi[i,j] = T_j(2 u_i - 1)."""
    return _cheb.chebvander(2.0 * np.asarray(u) - 1.0, degree)


def fit01(u, y, degree):
    """Least-squares shifted-Chebyshev fit, for solver seeds."""
    return _cheb.chebfit(2.0 * np.asarray(u) - 1.0, y, degree)


def cheb_points(a, b, n):
    """Chebyshev-Gauss grid of n points on [a,b], descending."""
    k = np.arange(n)
    return 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.pi * (2 * k + 1) / (2 * n))


def bary_weights(n):
    """Barycentric weights for cheb_points, any interval (scale-free)."""
    theta = np.pi * (2 * np.arange(n) + 1) / (2 * n)
    return (-1.0) ** np.arange(n) * np.sin(theta)


def interp_matrix(nodes, weights, pts):
    """Cardinal-function matrix M[i,j] = B_j(pts[i]).

    Interpolation of node values f is then (M @ f)(pts). Points that hit a
    node exactly get the corresponding unit row.
    """
    pts = np.atleast_1d(np.asarray(pts, dtype=float))
    diff = pts[:, None] - nodes[None, :]
    hit = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = weights[None, :] / diff
        M = terms / np.sum(terms, axis=1)[:, None]
    rows = np.nonzero(hit.any(axis=1))[0]
    for i in rows:
        M[i] = 0.0
        M[i, np.argmax(hit[i])] = 1.0
    return M


def interp_values(nodes, weights, fvals, pts):
    """Barycentric interpolation of f at pts given values at nodes."""
    return interp_matrix(nodes, weights, pts) @ fvals
