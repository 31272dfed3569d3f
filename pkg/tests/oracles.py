"""Independent numerical oracles, free of any feigdim import.

The cascade oracle reproduces the period-doubling rescaling constant from
the plain quadratic family x^2 + c, so agreement with the collocation
solver cross-validates the whole fixed-point pipeline.
"""
import numpy as np


def _crit_iterate(c, n):
    x = 0.0
    for _ in range(n):
        x = x * x + c
    return x


def superstable_params(n_max):
    """Parameters c_n of x^2 + c where the critical point has period 2^n."""
    cs = [0.0, -1.0]
    for n in range(2, n_max + 1):
        gap = cs[-1] - cs[-2]
        lo = cs[-1] + 0.45 * gap
        hi = cs[-1] + 0.02 * gap
        period = 2 ** n
        flo = _crit_iterate(lo, period)
        fhi = _crit_iterate(hi, period)
        if flo * fhi >= 0:
            raise RuntimeError(f"superstable bracket lost at level {n}")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = _crit_iterate(mid, period)
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm > 0) == (flo > 0):
                lo, flo = mid, fm
            else:
                hi, fhi = mid, fm
            if hi - lo < 1e-15 * abs(mid):
                break
        cs.append(0.5 * (lo + hi))
    return cs


def quadratic_cascade_alpha(n_max=13):
    """Rescaling constant from closest-return ratios, Aitken extrapolated.

    d_n is the closest return of the critical orbit at the superstable
    parameter c_n; d_n / d_{n+1} converges to alpha (negative for the
    orientation-reversing quadratic cascade).
    """
    cs = superstable_params(n_max)
    ds = [_crit_iterate(cs[n], 2 ** (n - 1)) for n in range(1, len(cs))]
    r = np.array([ds[i] / ds[i + 1] for i in range(len(ds) - 1)])
    dr = np.diff(r)
    aitken = r[2:] - dr[1:] ** 2 / (dr[1:] - dr[:-1])
    return float(aitken[-1])


def fd_derivative(f, x, order=1, h=1e-5):
    """Central finite-difference derivative of a scalar callable."""
    if order == 1:
        return (f(x + h) - f(x - h)) / (2.0 * h)
    if order == 2:
        return (f(x + h) - 2.0 * f(x) + f(x - h)) / h ** 2
    if order == 3:
        return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h)
                - f(x - 2 * h)) / (2.0 * h ** 3)
    if order == 4:
        return (f(x + 2 * h) - 4 * f(x + h) + 6 * f(x) - 4 * f(x - h)
                + f(x - 2 * h)) / h ** 4
    raise ValueError(f"order {order} not supported")


# Reference constants for the quadratic (ell = 2) fixed point.
ALPHA_2 = -2.5029078750958928
HD_2 = 0.53804514358
