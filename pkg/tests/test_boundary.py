import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from momentflow.boundary import (
    WallSpec,
    apply_wall_bc,
    bc_operation_count,
    ghost_state,
    half_maxwellian_coeffs,
    half_space_cutoff,
    j_full,
    j_hat,
    mirror_coeffs,
    mirror_state,
    s_table,
    wall_density,
)
from momentflow.hermite import expansion_eval
from momentflow.moments import MomentState, cube_from_dict, maxwellian, n_moments

import oracles

SQRT_2PI = math.sqrt(2 * math.pi)


def _random_state(seed, M=4):
    rng = np.random.default_rng(seed)
    u, theta, f = oracles.random_admissible(rng, M)
    return MomentState(u, theta, cube_from_dict(M, f))


# ---------------------------------------------------------------------------
# half-range pair table


def test_s_table_pinned_values():
    S = s_table(6)
    assert S[0, 0] == 0.5
    assert S[1, 0] == pytest.approx(1.0 / SQRT_2PI, rel=1e-14)
    assert S[2, 4] == 0.0
    for n in range(7):
        assert S[n, n] == pytest.approx(0.5, rel=1e-13)


def test_s_table_sparsity_exact():
    S = s_table(9)
    for m in range(10):
        for n in range(10):
            if m != n and (m - n) % 2 == 0:
                assert S[m, n] == 0.0


def test_s_table_matches_quadrature():
    # small corner here; the full m, n <= 13 sweep runs in the acceptance suite
    S = s_table(8)
    for m in range(0, 9, 2):
        for n in range(1, 9, 3):
            want = oracles.s_quadrature(m, n)
            assert S[m, n] == pytest.approx(want, rel=1e-10, abs=1e-12)


# ---------------------------------------------------------------------------
# wall-Maxwellian moment sequences


def test_j_full_matches_quadrature():
    for theta in (0.5, 2.0):
        for theta_wall in (0.5, 1.0):
            for x in (-1.0, 0.3):
                got = j_full(8, theta, theta_wall, x)
                ref = np.array(
                    [oracles.j_quadrature(s, theta, theta_wall, x) for s in range(9)]
                )
                scale = max(1.0, np.max(np.abs(ref)))
                assert np.max(np.abs(got - ref)) <= 1e-10 * scale


def test_j_hat_matches_quadrature():
    for theta in (0.5, 1.0, 2.0):
        for theta_wall in (0.5, 2.0):
            got = j_hat(8, theta, theta_wall)
            ref = np.array(
                [
                    oracles.j_quadrature(s, theta, theta_wall, 0.0, half=True)
                    for s in range(9)
                ]
            )
            scale = max(1.0, np.max(np.abs(ref)))
            assert np.max(np.abs(got - ref)) <= 1e-8 * scale


def test_j_seed_values():
    J = j_full(3, 1.3, 0.8, 0.45)
    assert J[0] == 1.0
    assert J[1] == 0.45
    Jh = j_hat(1, 1.0, 1.0)
    assert Jh[0] == 0.5
    assert Jh[1] == pytest.approx(-math.sqrt(1.0 / (2 * math.pi)), rel=1e-14)


# ---------------------------------------------------------------------------
# half-space cut-off


def test_cutoff_of_maxwellian():
    s = maxwellian(1.7, np.zeros(3), 1.2, 4)
    q = half_space_cutoff(s.coeffs, s.theta)
    assert q[0, 0, 0] == pytest.approx(1.7 / 2.0, rel=1e-14)
    nz = np.argwhere(q != 0.0)
    assert np.all(nz[:, 0] == 0) and np.all(nz[:, 2] == 0)


def test_cutoff_diagonal_is_half():
    K = 6
    for alpha in [(1, 2, 0), (0, 3, 1), (2, 0, 2)]:
        c = np.zeros((K, K, K))
        c[alpha] = 0.8
        q = half_space_cutoff(c, 1.4)
        assert q[alpha] == pytest.approx(0.4, rel=1e-13)


def test_cutoff_matches_halfspace_quadrature():
    s = _random_state(0, M=4)

    def func(xi):
        return expansion_eval(s.coeffs, s.u, s.theta, xi)

    q = half_space_cutoff(s.coeffs, s.theta)
    for alpha in [(0, 0, 0), (0, 1, 0), (1, 1, 1), (0, 3, 0), (2, 1, 0),
                  (0, 2, 2)]:
        want = oracles.halfspace_coeff_quadrature(func, alpha, s.u, s.theta)
        assert q[alpha] == pytest.approx(want, rel=2e-8, abs=1e-9)


# ---------------------------------------------------------------------------
# wall density and the half-Maxwellian


def test_wall_density_equilibrium():
    s = maxwellian(1.3, np.zeros(3), 0.9, 5)
    assert wall_density(s.coeffs, 0.9, 0.9) == pytest.approx(1.3, rel=1e-13)
    # theta = 4 theta_wall: the balance requires twice the density
    assert wall_density(s.coeffs, 0.9, 0.225) == pytest.approx(2.6, rel=1e-13)


def test_half_maxwellian_pinned_slots():
    wall = WallSpec(chi=1.0, u_wall=np.array([0.2, 0.0, -0.1]), theta_wall=0.8)
    u = np.array([0.2, 0.0, -0.1])
    p = half_maxwellian_coeffs(u, 0.8, wall, rho_wall=1.9, K=6)
    assert p[0, 0, 0] == pytest.approx(1.9 / 2.0, rel=1e-14)
    assert p[0, 1, 0] == pytest.approx(-1.9 * math.sqrt(0.8 / (2 * math.pi)),
                                       rel=1e-13)


def test_half_maxwellian_matches_quadrature():
    # wall Maxwellian restricted to incoming velocities (v2 < 0 relative to
    # the frame), coefficients about the gas frame.  The quadrature oracle
    # integrates v2 >= 0, so reflect the integrand about u2 and flip the sign
    # for odd normal degree: C_a[v2<0, g] = (-1)^a2 C_a[v2>0, g reflected].
    wall = WallSpec(chi=1.0, u_wall=np.zeros(3), theta_wall=1.0)
    u = np.zeros(3)
    theta = 1.0
    rho_wall = 1.0

    def func(xi):
        return (
            rho_wall
            * (2 * math.pi * wall.theta_wall) ** -1.5
            * np.exp(-np.sum((xi - wall.u_wall) ** 2, axis=1) / (2 * wall.theta_wall))
        )

    def func_reflected(xi):
        z = xi.copy()
        z[:, 1] = 2 * u[1] - z[:, 1]
        return func(z)

    p = half_maxwellian_coeffs(u, theta, wall, rho_wall, K=5)
    for alpha in [(0, 0, 0), (1, 1, 0), (0, 2, 0), (0, 3, 0), (1, 0, 1)]:
        want = (-1) ** alpha[1] * oracles.halfspace_coeff_quadrature(
            func_reflected, alpha, u, theta
        )
        assert p[alpha] == pytest.approx(want, rel=1e-7, abs=1e-10)


# ---------------------------------------------------------------------------
# the exchange map


def _wall(seed=None, side="right", chi=None):
    rng = np.random.default_rng(0 if seed is None else seed)
    return WallSpec(
        chi=rng.uniform(0.2, 1.0) if chi is None else chi,
        u_wall=np.array([rng.uniform(-0.4, 0.4), 0.0, rng.uniform(-0.4, 0.4)]),
        theta_wall=rng.uniform(0.7, 1.4),
        side=side,
    )


def test_wallspec_validation():
    with pytest.raises(ValueError):
        WallSpec(chi=1.2)
    with pytest.raises(ValueError):
        WallSpec(chi=-0.1)
    with pytest.raises(ValueError):
        WallSpec(theta_wall=0.0)
    with pytest.raises(ValueError):
        WallSpec(side="top")
    w = WallSpec(u_wall=np.array([0.3, 0.1, 0.0]), side="left")
    m = w.mirrored()
    assert m.side == "right" and m.u_wall[1] == -0.1


def test_specular_limit_zeroes_odd_slots():
    s = _random_state(1)
    out = apply_wall_bc(s, _wall(chi=0.0))
    assert np.all(out.coeffs[:, 1::2, :] == 0.0)


def test_bc_output_satisfies_invariants():
    for seed in range(8):
        s = _random_state(seed, M=3 + seed % 5)
        out = apply_wall_bc(s, _wall(seed))
        assert out.validate() is None
        assert out.u[1] == _wall(seed).u_wall[1]


def test_bc_mass_flux_vanishes_by_quadrature():
    s = _random_state(2)
    wall = _wall(2)
    out = apply_wall_bc(s, wall)

    def func(xi):
        return expansion_eval(out.coeffs, out.u, out.theta, xi)

    flux = oracles.raw_moment_quadrature(
        func, (0, 1, 0), npts=32, center=tuple(out.u), scale=math.sqrt(out.theta)
    )
    assert abs(flux) <= 1e-6


def test_wall_equilibrium_is_fixed_point():
    wall = _wall(3)
    s = maxwellian(1.1, wall.u_wall, wall.theta_wall, 6)
    out = apply_wall_bc(s, wall)
    np.testing.assert_allclose(out.coeffs, s.coeffs, atol=1e-12)


def test_bc_idempotent():
    s = _random_state(4)
    wall = _wall(4)
    once = apply_wall_bc(s, wall)
    twice = apply_wall_bc(once, wall)
    np.testing.assert_allclose(twice.coeffs, once.coeffs, rtol=1e-13, atol=1e-16)


def test_specular_continuity_in_chi():
    # odd-slot output scales linearly with chi as chi -> 0
    s = _random_state(5)
    base = _wall(5)
    odd_norm = {}
    for chi in (0.02, 0.01):
        wall = WallSpec(chi, base.u_wall, base.theta_wall, base.side)
        out = apply_wall_bc(s, wall)
        odd_norm[chi] = np.linalg.norm(out.coeffs[:, 1::2, :])
    ratio = odd_norm[0.02] / odd_norm[0.01]
    # 2 chi / (2 - chi): ratio of the prefactors at the two chi values
    want = (2 * 0.02 / (2 - 0.02)) / (2 * 0.01 / (2 - 0.01))
    assert ratio == pytest.approx(want, rel=1e-10)


# ---------------------------------------------------------------------------
# ghost construction


def test_ghost_density_and_velocity():
    s = _random_state(6)
    wall = WallSpec(chi=1.0, u_wall=np.array([0.3, 0.0, 0.0]), theta_wall=1.1)
    g = ghost_state(s, wall)
    assert g.coeffs[0, 0, 0] == pytest.approx(s.rho, rel=1e-13)
    assert g.u[1] == pytest.approx(-s.u[1], abs=1e-14)
    assert g.theta == s.theta


def test_ghost_of_bc_satisfying_state_is_identity():
    s = _random_state(7)
    wall = _wall(7)
    b = apply_wall_bc(s, wall)
    g = ghost_state(b, wall)
    np.testing.assert_allclose(g.coeffs, b.coeffs, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(g.u, b.u, atol=1e-15)


def test_ghost_interior_average_reproduces_bc():
    # the construction is linear: the midpoint of ghost and interior, about
    # the midpoint center, is exactly the f^b state
    s = _random_state(8)
    wall = _wall(8)
    b = apply_wall_bc(s, wall)
    g = ghost_state(s, wall)
    avg = MomentState(0.5 * (g.u + s.u), s.theta, 0.5 * (g.coeffs + s.coeffs))
    again = apply_wall_bc(avg, wall)
    np.testing.assert_allclose(again.coeffs, b.coeffs, rtol=1e-12, atol=1e-15)


# ---------------------------------------------------------------------------
# mirror and the left wall


def test_mirror_is_involution():
    s = _random_state(9)
    back = mirror_state(mirror_state(s))
    np.testing.assert_array_equal(back.coeffs, s.coeffs)
    np.testing.assert_array_equal(back.u, s.u)


def test_mirror_evaluates_reflected():
    s = _random_state(10)
    m = mirror_state(s)
    xi = np.random.default_rng(11).uniform(-2, 2, size=(50, 3))
    flipped = xi * np.array([1.0, -1.0, 1.0])
    np.testing.assert_allclose(m.evaluate(flipped), s.evaluate(xi), rtol=1e-12,
                               atol=1e-16)


def test_left_wall_is_conjugated_right_wall():
    s = _random_state(12)
    wall_l = _wall(12, side="left")
    out = apply_wall_bc(s, wall_l)
    manual = mirror_state(apply_wall_bc(mirror_state(s), wall_l.mirrored()))
    np.testing.assert_allclose(out.coeffs, manual.coeffs, rtol=1e-14, atol=1e-17)
    assert out.validate() is None
    assert out.u[1] == wall_l.u_wall[1]


# ---------------------------------------------------------------------------
# cost model


def test_bc_operation_count_scales_like_M_times_nm():
    ratios = [bc_operation_count(M) / (M * n_moments(M)) for M in range(3, 13)]
    assert max(ratios) <= 2.5
    # the density stays bounded as M grows (no hidden higher power)
    assert ratios[-1] <= ratios[0]


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_bc_invariants_random(seed):
    rng = np.random.default_rng(seed)
    M = int(rng.integers(3, 7))
    u, theta, f = oracles.random_admissible(rng, M)
    s = MomentState(u, theta, cube_from_dict(M, f))
    side = "left" if seed % 2 else "right"
    wall = WallSpec(
        chi=float(rng.uniform(0.0, 1.0)),
        u_wall=np.array([rng.uniform(-0.5, 0.5), 0.0, rng.uniform(-0.5, 0.5)]),
        theta_wall=float(rng.uniform(0.6, 1.5)),
        side=side,
    )
    out = apply_wall_bc(s, wall)
    assert out.validate() is None
