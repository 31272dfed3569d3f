import numpy as np
import pytest

from feigdim.errors import DomainError, OutOfNeighborhood
from feigdim.unimodal import (
    build_system,
    conjugacy_residual,
    critical_orbit,
    eval_G,
    eval_H,
    involution,
    jet_compose,
    second_derivative_identity,
    taylor_at_fixed_point,
)

from conftest import solve_ell
from oracles import fd_derivative

X_C_2 = 0.6928352170734087
TAU_2 = 6.2645478312135770


def test_derived_constants(sys2, fp2):
    assert abs(sys2.tau - abs(fp2.alpha) ** fp2.ell) < 1e-12
    assert abs(sys2.tau - TAU_2) < 1e-10
    assert abs(sys2.x_c - X_C_2) < 1e-12
    assert sys2.epsilon == 2


def test_critical_point_fixed_by_G(sys2):
    assert abs(float(eval_G(sys2, sys2.x_c)) - sys2.x_c) < 1e-13


def test_multiplier_law(sys2):
    got = abs(float(eval_G(sys2, np.array([sys2.x_c]), 1)[0]))
    assert abs(got - sys2.tau ** (-1.0 / sys2.ell)) < 1e-12


def test_conjugacy_residual_small(sys2):
    assert conjugacy_residual(sys2) < 1e-9


def test_orbit_doubling_identity(sys2):
    orbit = critical_orbit(sys2, 64)
    j = np.arange(1, 33)
    defect = np.abs(eval_G(sys2, orbit[j]) - orbit[2 * j])
    assert float(defect.max()) < 1e-8


def test_orbit_stays_in_unit_interval(sys2):
    orbit = critical_orbit(sys2, 512)
    assert np.all((orbit >= 0.0) & (orbit <= 1.0))


def test_orbit_budget_enforced(sys2):
    with pytest.raises(DomainError):
        critical_orbit(sys2, 10_000)


def test_deep_orbit_clamps_with_warning():
    sys14 = build_system(solve_ell(14))
    with pytest.warns(UserWarning, match="clamped"):
        orbit = critical_orbit(sys14, 1024)
    assert np.all((orbit >= 0.0) & (orbit <= 1.0))


def test_eval_H_matches_finite_differences(sys2):
    f = lambda x: float(eval_H(sys2, x))
    for x0 in (0.3, 0.55, 0.82):
        d1 = float(eval_H(sys2, x0, 1))
        d2 = float(eval_H(sys2, x0, 2))
        assert abs(d1 - fd_derivative(f, x0, 1, 1e-6)) < 1e-7 * max(1, abs(d1))
        assert abs(d2 - fd_derivative(f, x0, 2, 1e-5)) < 1e-4 * max(1, abs(d2))


def test_eval_G_domain_guard(sys2):
    with pytest.raises(DomainError):
        eval_G(sys2, sys2.tau + 1.0)


def test_involution_is_an_involution(sys2):
    for x in (0.58, 0.65, 0.80, 0.92):
        x_hat = involution(sys2, x)
        assert x_hat != pytest.approx(x, abs=1e-6)
        assert abs(involution(sys2, x_hat) - x) < 1e-12
        assert abs(float(eval_H(sys2, x_hat)) - float(eval_H(sys2, x))) < 1e-12


def test_involution_fixes_critical_point(sys2):
    assert abs(involution(sys2, sys2.x_c) - sys2.x_c) < 1e-12


def test_involution_derivative(sys2):
    x0 = 0.75
    _, d = involution(sys2, x0, deriv=True)
    fd = fd_derivative(lambda x: involution(sys2, x), x0, 1, 1e-7)
    assert abs(d - fd) < 1e-6 * abs(d)
    assert d < 0.0


def test_involution_out_of_range(sys2):
    with pytest.raises(OutOfNeighborhood):
        involution(sys2, 0.01)


def test_jet_compose_against_hand_expansion():
    # f(h) = 2h + 3h^2 - h^3, g(h) = 0.5h - h^2 + 4h^3 around a common
    # fixed point; coefficients of f o g by direct expansion
    got = jet_compose((2.0, 3.0, -1.0), (0.5, -1.0, 4.0))
    assert got[0] == 2.0 * 0.5
    assert got[1] == 2.0 * (-1.0) + 3.0 * 0.25
    assert got[2] == 2.0 * 4.0 + 2 * 3.0 * 0.5 * (-1.0) + (-1.0) * 0.125


def test_taylor_data_matches_finite_differences(sys2):
    lam, b, a = taylor_at_fixed_point(sys2)

    def g_eps(h):
        y = float(eval_G(sys2, sys2.x_c + h))
        return float(eval_G(sys2, y)) - sys2.x_c

    h = 1e-3
    assert abs(lam - fd_derivative(g_eps, 0.0, 1, h)) < 1e-6
    assert abs(2.0 * b - fd_derivative(g_eps, 0.0, 2, h)) < 1e-5
    assert abs(-6.0 * a - fd_derivative(g_eps, 0.0, 3, h)) < 1e-4


def test_taylor_reference_values(sys2):
    lam, b, a = sys2.taylor
    assert abs(lam - 0.159628440383) < 1e-9
    assert abs(b - (-0.014972790572)) < 1e-9
    assert abs(a - 0.002548678642) < 1e-9
    assert abs(sys2.nonsymmetry - 0.223229265) < 1e-6


def test_second_derivative_identity(sys2):
    assert second_derivative_identity(sys2) < 1e-10


def test_taylor_at_ell_4():
    sys4 = build_system(solve_ell(4))
    lam, b, a = sys4.taylor
    assert abs(lam - 0.350002) < 1e-5
    assert abs(b - (-0.0558579)) < 1e-6
    assert abs(a - 0.0312701) < 1e-6
    assert second_derivative_identity(sys4) < 1e-10
