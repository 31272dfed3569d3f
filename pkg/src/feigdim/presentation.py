"""The infinite presentation IFS {psi_{k,m} = G^k o H^{-(p-m)}} on I = [c_p, c_{2p}].

Branch inversions are one-lap solves of E(z) = x^(1/ell) by safeguarded
bisection-Newton; G^k is applied as k explicit contraction steps, which is
numerically stable for every k because the cylinders accumulate at the
attracting fixed point x_c of G. The alternative composition form
psi_{k,m} = H^{-1} o tau^{-k} is kept for cross-validation on shallow k,
where the inversion is still well conditioned.
"""
import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    BranchNotMonotone,
    DomainError,
    IndexOutOfAlphabet,
    InvariantViolation,
    NoContraction,
    OrbitIndexOverflow,
    RatioNotContracting,
)
from .unimodal import DEFAULT_ORBIT_MAX, _G_jets, _H_jets, critical_orbit, eval_H

_X_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class PresentationSystem:
    """Built presentation IFS with cylinder table and contraction data."""

    sys: object
    I: tuple
    orbit: np.ndarray
    Kmax: int
    branches: dict
    J: tuple
    lambda_rho: float
    cylinders: np.ndarray
    branch_side: np.ndarray
    k_verify: int

    @property
    def interval(self):
        return self.I

    @property
    def p(self):
        return self.sys.p

    def letters(self, K=None):
        K = self.Kmax if K is None else K
        if K > self.Kmax:
            raise IndexOutOfAlphabet(f"K={K} exceeds Kmax={self.Kmax}")
        return [(k, m) for k in range(1, K + 1)
                for m in range(1, self.p)]

    def map_eval(self, letter, x, nder=1):
        k, m = letter
        _check_letter(self, k, m)
        return _psi_jets(self, k, m, np.asarray(x, dtype=float), nder)

    def tail_bound(self, K, t):
        return tail_bound(self, K, t)

    def orbit_index(self, j):
        if j >= len(self.orbit):
            raise OrbitIndexOverflow(
                f"orbit index {j} exceeds the stored budget {len(self.orbit) - 1}"
            )
        return self.orbit[j]


def _check_letter(ps, k, m):
    if not (1 <= k <= ps.Kmax) or not (1 <= m <= ps.p - 1):
        raise IndexOutOfAlphabet(f"letter (k={k}, m={m}) outside the alphabet")


def _solve_E_decreasing(fp, targets, lo, hi, nbis=52, nnewt=3):
    """Solve E(z) = target on [lo, hi] where E is strictly decreasing."""
    targets = np.asarray(targets, dtype=float)
    a = np.full(targets.shape, lo)
    b = np.full(targets.shape, hi)
    for _ in range(nbis):
        mid = 0.5 * (a + b)
        high = fp.E(mid) > targets
        a = np.where(high, mid, a)
        b = np.where(high, b, mid)
    z = 0.5 * (a + b)
    for _ in range(nnewt):
        step = (fp.E(z) - targets) / fp.E(z, 1)
        z = np.clip(z - step, lo, hi)
    return z


def _h_inverse_jets(sys, x, m, nder):
    """Jets of the branch H^{-(p-m)} on I; p=2 so a single lap inversion.

    The branch maps I into [c_m, c_{p+m}] inside the decreasing lap of H
    left of x_c, where E > 0: solve E(z) = x^(1/ell).
    """
    fp = sys.fp
    targets = x ** (1.0 / fp.ell)
    z = _solve_E_decreasing(fp, targets, 0.0, sys.x_c)
    if nder == 0:
        return (z,)
    jets = _H_jets(fp, z, min(nder, 3))
    h1 = jets[1]
    out = [z, 1.0 / h1]
    if nder >= 2:
        h2 = jets[2]
        out.append(-h2 * out[1] ** 3)
    if nder >= 3:
        h3 = jets[3]
        out.append((3.0 * h2 ** 2 - h1 * h3) * out[1] ** 5)
    return tuple(out)


def _g_step_jets(sys, jets, nder):
    """Push jets of a map through one application of G."""
    y = jets[0]
    g = _G_jets(sys, y, min(nder, 3))
    out = [g[0]]
    if nder >= 1:
        out.append(g[1] * jets[1])
    if nder >= 2:
        out.append(g[2] * jets[1] ** 2 + g[1] * jets[2])
    if nder >= 3:
        out.append(g[3] * jets[1] ** 3 + 3.0 * g[2] * jets[1] * jets[2]
                   + g[1] * jets[3])
    return tuple(out)


def _psi_jets(ps, k, m, x, nder):
    jets = _h_inverse_jets(ps.sys, x, m, nder)
    for _ in range(k):
        jets = _g_step_jets(ps.sys, jets, nder)
    return jets


def iter_letter_jets(ps, K, x, nder=1):
    """Yield (letter, jets) in ps.letters(K) order, sharing the G-iteration.

    One branch inversion and K contraction steps cover the whole alphabet;
    callers that stream the letters keep memory at a single jet tuple.
    """
    if K > ps.Kmax:
        raise IndexOutOfAlphabet(f"K={K} exceeds Kmax={ps.Kmax}")
    x = np.asarray(x, dtype=float)
    jets = _h_inverse_jets(ps.sys, x, 1, nder)
    for k in range(1, K + 1):
        jets = _g_step_jets(ps.sys, jets, nder)
        yield (k, 1), jets


def letter_tables(ps, K, x, nder=1):
    """Jets of psi_{k,m} for all k <= K, indexed like ps.letters(K)."""
    return [jets for _, jets in iter_letter_jets(ps, K, x, nder)]


def psi(ps, k, m, x, deriv=0):
    """psi_{k,m}(x) or its first derivative, x in I."""
    _check_letter(ps, k, m)
    if deriv not in (0, 1):
        raise DomainError(f"deriv must be 0 or 1, got {deriv}")
    lo, hi = ps.I
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x_arr < lo - _X_SLACK) or np.any(x_arr > hi + _X_SLACK):
        raise DomainError(f"psi argument outside I = [{lo}, {hi}]")
    jets = _psi_jets(ps, k, m, x_arr, deriv)
    out = jets[deriv]
    return float(out[0]) if np.ndim(x) == 0 else out


def psi_alt(ps, k, m, x, deriv=0):
    """Cross-validation form psi_{k,m} = H^{-1} o tau^{-k} o H^{-(p-m-1)}.

    The outer inversion happens on the lap that carries the cylinder, so it
    is only well conditioned while the cylinder is far from x_c (small k).
    """
    _check_letter(ps, k, m)
    sys = ps.sys
    fp = sys.fp
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    u = x_arr / sys.tau ** k
    side = ps.branch_side[k - 1]
    targets = side * u ** (1.0 / fp.ell)
    if side > 0:
        z = _solve_E_decreasing(fp, targets, 0.0, sys.x_c)
    else:
        z = _solve_E_decreasing(fp, targets, sys.x_c, 1.0)
    if deriv == 0:
        out = z
    else:
        out = 1.0 / (sys.tau ** k * _H_jets(fp, z, 1)[1])
    return float(out[0]) if np.ndim(x) == 0 else out


def build_presentation(sys, Kmax=None, orbit_budget=DEFAULT_ORBIT_MAX,
                       j_margin=0.2, strict_orbit=False):
    """Construct the presentation system and verify its invariants.

    Kmax defaults to 40 scaled up proportionally for ell > 8. The critical
    orbit is stored up to orbit_budget; endpoint identities are checked for
    every k whose orbit indexes fit the budget and whose entries sit below
    the table's measured roundoff floor (strict_orbit=True demands the full
    table instead and raises OrbitIndexOverflow).
    """
    p = sys.p
    ell = sys.ell
    if Kmax is None:
        Kmax = int(40 * max(1.0, ell / 8.0))
    if Kmax < 1:
        raise DomainError(f"Kmax must be >= 1, got {Kmax}")

    need = np.log(2 * p) + Kmax * np.log(p)
    full_table_len = None if need > np.log(orbit_budget) else p ** Kmax * 2 * p
    if full_table_len is None and strict_orbit:
        raise OrbitIndexOverflow(
            f"orbit to index p^Kmax*2p = 2^{Kmax}*{2 * p} exceeds the "
            f"budget {orbit_budget}"
        )
    n_orbit = orbit_budget if full_table_len is None else full_table_len
    orbit = critical_orbit(sys, n_orbit)

    lo, hi = sorted((orbit[p], orbit[2 * p]))
    I = (float(lo), float(hi))

    branches = {}
    for m in range(1, p):
        lap = (float(orbit[m]), float(orbit[p + m]))
        grid = np.linspace(min(lap), max(lap), 257)
        dH = eval_H(sys, grid, 1)
        if dH.max() * dH.min() <= 0.0:
            raise BranchNotMonotone(
                f"H not monotone on the branch lap for m={m}"
            )
        branches[m] = {"lap": lap, "sign": float(np.sign(dH[0]))}

    k_fit = int(np.floor(np.log(n_orbit / (2.0 * p)) / np.log(p)))
    k_fit = max(1, min(Kmax, k_fit))

    # Deep orbit entries accumulate roundoff (worse for large ell), so the
    # endpoint identity is only certifiable as far as the table's own noise
    # floor allows. The doubling defect |G(c_j) - c_{pj}| probes that floor
    # at index pj; verification depth stops where it nears the tolerance.
    half = np.arange(1, n_orbit // p)
    doubled = _G_jets(sys, orbit[half], 0)[0]
    defect = np.abs(doubled - orbit[half * p])
    k_verify = 0
    for k in range(1, k_fit + 1):
        top = min(p ** k * 2 * p // p, defect.size)
        if float(defect[:top].max()) < 0.25e-8:
            k_verify = k
        else:
            break
    if k_verify == 0:
        raise InvariantViolation(
            f"orbit doubling defect {defect[:2 * p].max():.2e} already "
            "exceeds the endpoint tolerance at k=1"
        )

    ps = PresentationSystem(sys, I, orbit, Kmax, branches, (0.0, 0.0), 1.0,
                            np.zeros((0, 2)), np.zeros(0, dtype=int), k_verify)

    ends = np.array(I)
    mid = np.array([0.5 * (I[0] + I[1])])
    cylinders = np.empty((Kmax, 2))
    sides = np.empty(Kmax, dtype=int)
    jets_e = _h_inverse_jets(sys, ends, 1, 0)
    jets_m = _h_inverse_jets(sys, mid, 1, 0)
    ye, ym = jets_e[0], jets_m[0]
    for k in range(1, Kmax + 1):
        ye = _G_jets(sys, ye, 0)[0]
        ym = _G_jets(sys, ym, 0)[0]
        cylinders[k - 1] = sorted(ye)
        sides[k - 1] = 1 if ym[0] < sys.x_c else -1

    for k in range(1, k_verify + 1):
        for m in range(1, p):
            want = sorted((orbit[p ** k * m], orbit[p ** k * (p + m)]))
            got = cylinders[k - 1]
            err = max(abs(got[0] - want[0]), abs(got[1] - want[1]))
            if err >= 1e-8:
                raise InvariantViolation(
                    f"cylinder endpoints for k={k} off by {err:.2e}"
                )

    if np.any(cylinders[:, 0] < I[0] - 1e-12) or \
            np.any(cylinders[:, 1] > I[1] + 1e-12):
        raise InvariantViolation("a cylinder leaves I")
    order = np.argsort(cylinders[:, 0])
    gaps = cylinders[order[1:], 0] - cylinders[order[:-1], 1]
    if np.any(gaps < -1e-12):
        raise InvariantViolation("cylinders overlap beyond the 1e-12 slack")

    ps = PresentationSystem(sys, I, orbit, Kmax, branches, (0.0, 0.0), 1.0,
                            cylinders, sides, k_verify)

    width = I[1] - I[0]
    lam_rho = None
    J = None
    for margin in (j_margin, j_margin + 0.15, j_margin + 0.3):
        J_try = (I[0] - margin * width, I[1] + margin * width)
        lam_try = contraction_certificate(ps, J=J_try)
        if lam_try < 1.0:
            J, lam_rho = J_try, lam_try
            break
    if J is None:
        raise NoContraction("no J margin up to +0.5 gave lambda_rho < 1")

    return PresentationSystem(sys, I, orbit, Kmax, branches, J, lam_rho,
                              cylinders, sides, k_verify)


def _rho_density(J, x):
    """Hyperbolic density (up to a constant) of the disk with diameter J."""
    A, B = J
    return 1.0 / ((x - A) * (B - x))


def contraction_certificate(ps, J=None, nx=200):
    """sup over the alphabet and x in I of |psi'(x)| rho(psi x)/rho(x)."""
    if J is None:
        J = ps.J
    lo, hi = ps.I
    x = np.linspace(lo, hi, nx)
    rho_x = _rho_density(J, x)
    worst = 0.0
    for val, der in letter_tables(ps, ps.Kmax, x, nder=1):
        ratio = np.abs(der) * _rho_density(J, val) / rho_x
        worst = max(worst, float(ratio.max()))
    return worst


def word_map(ps, w, x):
    """phi_w = psi_{w_1} o ... o psi_{w_n} applied to x (empty word: x)."""
    lo, hi = ps.I
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x_arr < lo - _X_SLACK) or np.any(x_arr > hi + _X_SLACK):
        raise DomainError(f"word_map argument outside I = [{lo}, {hi}]")
    for k, m in reversed(list(w)):
        _check_letter(ps, k, m)
        x_arr = _psi_jets(ps, k, m, x_arr, 0)[0]
    return float(x_arr[0]) if np.ndim(x) == 0 else x_arr


def cylinder_of_word(ps, w):
    """The interval phi_w(I)."""
    ends = word_map(ps, list(w), np.array(ps.I))
    return (float(min(ends)), float(max(ends)))


@dataclass(frozen=True)
class DecayProfile:
    table: np.ndarray
    loglog_slope: float
    loglin_slope: float


def decay_profile(ps, m, x, k_window=None):
    """Rows (k, |psi'_{k,m}(x)|, k^{3/2} |psi'_{k,m}(x)|) plus slope fits.

    loglog_slope fits log|psi'| against log k over the window (crossover
    diagnostic for the k^{-3/2} regime); loglin_slope fits against k (the
    geometric tail, one G-step per k, so the slope sits near the log of
    the fixed-point multiplier -(1/ell) log tau).
    """
    x_arr = np.asarray(float(x))
    ders = np.empty(ps.Kmax)
    for i, (_, der) in enumerate(letter_tables(ps, ps.Kmax, x_arr, nder=1)):
        if i % (ps.p - 1) == m - 1:
            ders[i // (ps.p - 1)] = abs(float(der))
    k = np.arange(1, ps.Kmax + 1, dtype=float)
    table = np.column_stack([k, ders, k ** 1.5 * ders])
    if k_window is None:
        k_window = (2, ps.Kmax)
    sel = (k >= k_window[0]) & (k <= k_window[1]) & (ders > 0.0)
    loglog = float(np.polyfit(np.log(k[sel]), np.log(ders[sel]), 1)[0])
    loglin = float(np.polyfit(k[sel], np.log(ders[sel]), 1)[0])
    return DecayProfile(table, loglog, loglin)


def tail_bound(ps, K, t, nx=64):
    """Upper bound on sum_{k>K,m} sup_I |Dpsi_{k,m}|^t.

    Geometric-series bound with the ratio read off the last two computed
    levels and inflated by 10 percent; raises RatioNotContracting when the
    levels are not yet decaying geometrically (e.g. t near 0, where the
    full-alphabet sum diverges).
    """
    if t <= 0.0:
        raise DomainError(f"tail_bound needs t > 0, got {t}")
    if not 2 <= K <= ps.Kmax:
        raise DomainError(f"tail_bound needs 2 <= K <= Kmax={ps.Kmax}")
    lo, hi = ps.I
    x = np.linspace(lo, hi, nx)
    levels = []
    for kk in (K - 1, K):
        total = 0.0
        for m in range(1, ps.p):
            der = _psi_jets(ps, kk, m, x, 1)[1]
            total += float(np.max(np.abs(der))) ** t
        levels.append(total)
    ratio = 1.1 * levels[1] / levels[0]
    if ratio >= 1.0:
        raise RatioNotContracting(
            f"level ratio {ratio:.3f} >= 1 at K={K}, t={t}; increase Kmax"
        )
    return levels[1] * ratio / (1.0 - ratio)


def cylinders_csv(ps, path, nx=64):
    """Dump the cylinder table with per-branch derivative ranges."""
    lo, hi = ps.I
    x = np.linspace(lo, hi, nx)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "m", "left", "right", "sup_deriv", "min_deriv"])
        tables = letter_tables(ps, ps.Kmax, x, nder=1)
        for i, (k, m) in enumerate(ps.letters()):
            der = np.abs(tables[i][1])
            left, right = ps.cylinders[k - 1]
            writer.writerow([k, m, f"{left:.12g}", f"{right:.12g}",
                             f"{der.max():.12g}", f"{der.min():.12g}"])
    return path
