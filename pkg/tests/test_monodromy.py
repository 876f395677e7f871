import math

import numpy as np
import pytest

from hill_octant import monodromy as mo
from hill_octant.errors import NonFiniteInput, OutsideGap, PoleAt
from hill_octant.potential import (
    constant_potential,
    fourier_potential,
    piecewise_potential,
    zero_potential,
)

from oracles import rk4_monodromy


def free_discriminant(lam):
    if lam >= 0:
        return math.cos(math.sqrt(lam))
    return math.cosh(math.sqrt(-lam))


def test_free_potential_closed_forms():
    p = zero_potential()
    d = mo.integrate(p, math.pi**2 / 4)
    assert d.discriminant == pytest.approx(0.0, abs=1e-14)
    assert d.phi_1 == pytest.approx(2.0 / math.pi, abs=1e-14)
    d0 = mo.integrate(p, 0.0)
    assert d0.discriminant == pytest.approx(1.0, abs=1e-14)
    assert d0.a_value == pytest.approx(0.0, abs=1e-15)
    assert d0.phi_1 == pytest.approx(1.0, abs=1e-14)


def test_free_discriminant_across_range():
    p = zero_potential()
    lams = np.linspace(-10.0, 400.0, 83)
    F = mo.integrate_batch(p, lams).discriminant
    ref = np.array([free_discriminant(l) for l in lams])
    assert np.max(np.abs(F - ref)) < 1e-10


def test_constant_potential_is_shifted_free():
    c = 7.5
    p = constant_potential(c)
    for lam in (-3.0, 2.0, 40.0, 111.0):
        assert mo.discriminant(p, lam) == pytest.approx(free_discriminant(lam - c), abs=1e-12)


@pytest.mark.parametrize("lam", [0.0, 5.0, 20.0])
def test_fourier_route_matches_fixed_step_oracle(mathieu, lam):
    d = mo.integrate(mathieu, lam)
    u = rk4_monodromy(mathieu, lam, nsteps=8192)
    assert d.theta_1 == pytest.approx(u[0], abs=2e-9)
    assert d.theta_prime_1 == pytest.approx(u[1], abs=2e-9)
    assert d.phi_1 == pytest.approx(u[2], abs=2e-9)
    assert d.phi_prime_1 == pytest.approx(u[3], abs=2e-9)
    assert d.theta_lam == pytest.approx(u[4], abs=2e-9)
    assert d.phi_lam == pytest.approx(u[6], abs=2e-9)


def test_random_fourier_vs_oracle(asym_potential):
    for lam in (-4.0, 13.7, 95.2):
        d = mo.integrate(asym_potential, lam)
        u = rk4_monodromy(asym_potential, lam, nsteps=8192)
        scale = max(1.0, np.max(np.abs(u[:4])))
        assert abs(d.discriminant - 0.5 * (u[3] + u[0])) < 1e-9 * scale
        assert abs(d.phi_1 - u[2]) < 1e-9 * scale


def test_piecewise_transfer_matches_rk_oracle():
    p = piecewise_potential([(0.0, 0.4, 3.0), (0.4, 1.0, -2.0)], constant=0.5)
    for lam in (-6.0, 1.0, 24.0, 130.0):
        d = mo.integrate(p, lam)
        u = rk4_monodromy(p, lam, nsteps=20000)
        assert d.theta_1 == pytest.approx(u[0], rel=1e-9, abs=1e-10)
        assert d.phi_1 == pytest.approx(u[2], rel=1e-9, abs=1e-10)
        assert d.phi_lam == pytest.approx(u[6], rel=1e-8, abs=1e-9)
        assert d.wronskian == pytest.approx(1.0, abs=1e-12)


def test_wronskian_everywhere(asym_potential):
    lams = np.linspace(-8, 300, 40)
    mb = mo.integrate_batch(asym_potential, lams)
    assert np.max(np.abs(mb.wronskian - 1.0)) < 1e-9


def test_wronskian_at_interior_checkpoints(mathieu):
    cps = [k / 8 for k in range(1, 8)]
    mb = mo.integrate_batch(mathieu, [7.3, 55.0], checkpoints=cps)
    for x, state in mb.checkpoints.items():
        w = state[0] * state[3] - state[1] * state[2]
        assert np.max(np.abs(w - 1.0)) < 1e-9, f"checkpoint {x}"


def test_identity_a_squared(asym_potential):
    lams = np.linspace(-5, 250, 35)
    mb = mo.integrate_batch(asym_potential, lams)
    lhs = mb.a_value**2 + 1.0 - mb.discriminant**2
    rhs = -mb.phi_1 * mb.theta_prime_1
    scale = np.maximum(1.0, np.abs(lams))
    assert np.max(np.abs(lhs - rhs) / scale) < 1e-8


def test_discriminant_derivative_vs_finite_differences(asym_potential):
    for lam in (3.0, 47.0, 160.0):
        step = 1e-5 * max(1.0, abs(lam))
        d = mo.integrate(asym_potential, lam)
        fp = mo.discriminant(asym_potential, lam + step)
        fm = mo.discriminant(asym_potential, lam - step)
        fd = (fp - fm) / (2 * step)
        assert d.discriminant_lam == pytest.approx(fd, rel=1e-5, abs=1e-10)


def test_even_potential_a_vanishes_at_lowest_edge(mathieu):
    # the lowest band edge of 2 cos(2 pi x), from the Fourier-matrix route
    lam0 = -0.05060384199840895
    d = mo.integrate(mathieu, lam0)
    assert abs(d.a_value) < 1e-7


def test_branch_b_sign_convention(bound_state_potential, bound_state_bands):
    bs = bound_state_bands
    lam = 0.5 * (bs.gap_lo[0] + bs.gap_hi[0])
    b1 = mo.branch_b(bound_state_potential, lam, 1, sheet=1)
    assert b1 < 0  # (-1)^1 * positive root
    assert mo.branch_b(bound_state_potential, lam, 1, sheet=2) == pytest.approx(-b1)
    lam_edge = bs.gap_lo[0]
    assert abs(mo.branch_b(bound_state_potential, lam_edge, 1)) < 1e-4


def test_branch_b_rejects_band_interior(mathieu):
    with pytest.raises(OutsideGap):
        mo.branch_b(mathieu, 20.0, 2)  # inside band, F^2 < 1


def test_m_plus_free_lowest_gap():
    p = zero_potential()
    for lam in (-0.5, -4.0, -25.0):
        assert mo.m_plus(p, lam, 0) == pytest.approx(-math.sqrt(-lam), rel=1e-10)


def test_m_plus_pole_guard(bound_state_potential, bound_state_bands):
    # polish mu_1 to the phi(1, .) zero at full precision; the Weyl
    # function must then refuse to evaluate on top of its pole
    mu1 = float(bound_state_bands.dirichlet[0])
    for _ in range(3):
        d = mo.integrate(bound_state_potential, mu1)
        mu1 -= d.phi_1 / d.phi_lam
    with pytest.raises(PoleAt):
        mo.m_plus(bound_state_potential, mu1, 1)


def test_non_finite_inputs_rejected(mathieu):
    with pytest.raises(NonFiniteInput):
        mo.integrate(mathieu, math.nan)
    with pytest.raises(NonFiniteInput):
        mo.integrate_batch(mathieu, [1.0, math.inf])


def test_zero_counts_free_potential():
    p = zero_potential()
    mb = mo.integrate_batch(p, [5.0, 95.0, 105.0, 400.0], count_zeros=True)
    assert list(mb.phi_zeros) == [0, 3, 3, 6]
    assert list(mb.theta_zeros) == [1, 3, 3, 6]


def test_zero_counts_match_transfer_and_rk(mathieu):
    # same potential through both routes: a piecewise sampling of the
    # cosine converges to it, so counts must agree on safe interior points
    lams = np.array([3.0, 30.0, 77.0, 150.0, 260.0])
    rk = mo.integrate_batch(mathieu, lams, count_zeros=True)
    segs = 400
    edges = np.linspace(0.0, 1.0, segs + 1)
    vals = mathieu.evaluate(0.5 * (edges[:-1] + edges[1:]))
    steps = piecewise_potential(
        [(edges[i], edges[i + 1], float(vals[i])) for i in range(segs)]
    )
    tr = mo.integrate_batch(steps, lams, count_zeros=True)
    assert list(rk.phi_zeros) == list(tr.phi_zeros)
    assert list(rk.theta_zeros) == list(tr.theta_zeros)


def test_branch_magnitude_equals_a_at_dirichlet_point(bound_state_potential, bound_state_bands):
    # phi(1, mu) = 0 forces a^2 = F^2 - 1 = b^2 through the Wronskian identity
    s = bound_state_bands.state(1)
    assert abs(s.b_sheet1) == pytest.approx(abs(s.a_value), rel=1e-8)
