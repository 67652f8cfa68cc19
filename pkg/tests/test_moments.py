import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from momentflow.collision import collide_coeffs
from momentflow.hermite import expansion_eval
from momentflow.moments import (
    GasModel,
    MomentState,
    SNAPSHOT_COLUMNS,
    cube_from_dict,
    grade_mask,
    heat_flux,
    index_rank,
    maxwellian,
    multi_indices,
    n_moments,
    order_cube,
    read_snapshot,
    snapshot_table,
    stress_tensor,
    write_snapshot,
)

import oracles


# ---------------------------------------------------------------------------
# index bookkeeping


def test_n_moments_formula():
    for M in range(3, 13):
        assert n_moments(M) == (M + 2) * (M + 3) * (M + 4) // 6
        assert n_moments(M) == len(multi_indices(M + 1))


def test_multi_indices_is_graded_bijection():
    order = 7
    idx = multi_indices(order)
    assert len(set(idx)) == len(idx)
    grades = [sum(a) for a in idx]
    assert grades == sorted(grades)  # graded
    assert set(idx) == {
        (a, b, c)
        for a in range(order + 1)
        for b in range(order + 1)
        for c in range(order + 1)
        if a + b + c <= order
    }
    # the ordering is fixed program-wide; pin its head
    assert idx[:4] == ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))


def test_index_rank_inverts_ordering():
    order = 6
    rank = index_rank(order)
    for i, alpha in enumerate(multi_indices(order)):
        assert rank[alpha] == i


def test_order_cube_and_grade_mask():
    K = 6
    cube = order_cube(K)
    assert cube[2, 3, 0] == 5
    for m in range(K):
        mask = grade_mask(K, m)
        assert np.array_equal(mask, cube <= m)
    with pytest.raises(ValueError):
        order_cube(K)[0, 0, 0] = 9  # shared cache must be read-only


def test_cube_from_dict_drops_out_of_range():
    M = 3
    c = cube_from_dict(M, {(0, 0, 0): 2.0, (2, 2, 2): 5.0, (4, 0, 0): 1.5})
    assert c[0, 0, 0] == 2.0
    assert c[4, 0, 0] == 1.5  # |alpha| = 4 = M+1 kept
    assert c[2, 2, 2] == 0.0  # |alpha| = 6 > M+1 dropped


# ---------------------------------------------------------------------------
# states


def test_maxwellian_examples():
    s = maxwellian(1.0, np.zeros(3), 1.0, 3)
    assert s.rho == 1.0
    assert np.count_nonzero(s.coeffs) == 1
    assert np.all(stress_tensor(s.coeffs) == 0.0)
    assert np.all(heat_flux(s.coeffs) == 0.0)
    assert s.validate() is None


def test_maxwellian_rejects_bad_inputs():
    with pytest.raises(ValueError):
        maxwellian(0.0, np.zeros(3), 1.0, 3)
    with pytest.raises(ValueError):
        maxwellian(1.0, np.zeros(3), -2.0, 3)
    with pytest.raises(ValueError):
        maxwellian(1.0, np.zeros(3), 1.0, 2)


def test_moment_state_basics():
    rng = np.random.default_rng(3)
    u, theta, f = oracles.random_admissible(rng, 4)
    s = MomentState(u, theta, cube_from_dict(4, f))
    assert s.M == 4
    assert s.moment((0, 0, 0)) == s.rho
    assert s.moment((9, 0, 0)) == 0.0  # out of stored range
    assert s.moment((-1, 0, 0)) == 0.0
    c = s.copy()
    c.coeffs[0, 0, 0] = 99.0
    assert s.coeffs[0, 0, 0] != 99.0
    with pytest.raises(ValueError):
        MomentState(np.zeros(2), 1.0, s.coeffs)
    with pytest.raises(ValueError):
        MomentState(np.zeros(3), 0.0, s.coeffs)


def test_validate_reports_first_violation():
    s = maxwellian(1.0, np.zeros(3), 1.0, 3)
    s.coeffs[0, 1, 0] = 1e-3
    report = s.validate()
    assert report is not None and "e_2" in report
    s = maxwellian(1.0, np.zeros(3), 1.0, 3)
    s.coeffs[2, 0, 0] = 1e-4  # breaks the trace, not f_{e_i}
    assert s.validate() == "sum_d f_(2 e_d) != 0"


def test_validate_passes_after_collision():
    rng = np.random.default_rng(4)
    u, theta, f = oracles.random_admissible(rng, 5)
    s = MomentState(u, theta, cube_from_dict(5, f))
    assert s.validate() is None
    out = collide_coeffs(s.coeffs, tau=0.7, prandtl=2.0 / 3.0, dt=0.3)
    assert MomentState(u, theta, out).validate() is None


def test_gas_model_validation():
    GasModel()  # defaults fine
    with pytest.raises(ValueError):
        GasModel(prandtl=0.0)
    with pytest.raises(ValueError):
        GasModel(prandtl=1.2)
    with pytest.raises(ValueError):
        GasModel(knudsen=-0.1)


# ---------------------------------------------------------------------------
# macroscopic extraction vs quadrature


def test_stress_single_slot():
    s = maxwellian(1.0, np.zeros(3), 1.0, 3)
    s.coeffs[1, 1, 0] = 0.3
    sig = s.stress()
    assert sig[0, 1] == 0.3 and sig[1, 0] == 0.3
    assert np.trace(sig) == 0.0


def test_heat_flux_single_slot():
    s = maxwellian(1.0, np.zeros(3), 1.0, 4)
    s.coeffs[3, 0, 0] = 0.1
    q = s.heat_flux()
    assert q[0] == pytest.approx(0.3)
    assert q[1] == 0.0 and q[2] == 0.0


def _quad_extractors(u, theta, coeffs):
    """sigma and q of the expansion by 3-D Gauss quadrature."""

    def func(xi):
        return expansion_eval(coeffs, u, theta, xi)

    scale = math.sqrt(theta)
    m = {}
    for powers in [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1),
                   (0, 1, 1), (3, 0, 0), (1, 2, 0), (1, 0, 2), (2, 1, 0),
                   (0, 3, 0), (0, 1, 2), (2, 0, 1), (0, 2, 1), (0, 0, 3)]:
        m[powers] = oracles.raw_moment_quadrature(
            func, powers, npts=32, center=tuple(u), scale=scale
        )
    rho_theta = (m[2, 0, 0] + m[0, 2, 0] + m[0, 0, 2]) / 3.0
    sig = np.array(
        [
            [m[2, 0, 0] - rho_theta, m[1, 1, 0], m[1, 0, 1]],
            [m[1, 1, 0], m[0, 2, 0] - rho_theta, m[0, 1, 1]],
            [m[1, 0, 1], m[0, 1, 1], m[0, 0, 2] - rho_theta],
        ]
    )
    q = 0.5 * np.array(
        [
            m[3, 0, 0] + m[1, 2, 0] + m[1, 0, 2],
            m[2, 1, 0] + m[0, 3, 0] + m[0, 1, 2],
            m[2, 0, 1] + m[0, 2, 1] + m[0, 0, 3],
        ]
    )
    return sig, q


def test_extractors_match_quadrature():
    rng = np.random.default_rng(5)
    for M in (4, 6):
        u, theta, f = oracles.random_admissible(rng, M)
        coeffs = cube_from_dict(M, f)
        sig_q, q_q = _quad_extractors(u, theta, coeffs)
        sig = stress_tensor(coeffs)
        q = heat_flux(coeffs)
        scale = max(1.0, np.max(np.abs(sig_q)))
        assert np.max(np.abs(sig - sig_q)) <= 1e-8 * scale
        scale = max(1.0, np.max(np.abs(q_q)))
        assert np.max(np.abs(q - q_q)) <= 1e-8 * scale


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_stress_symmetric_traceless(seed):
    rng = np.random.default_rng(seed)
    u, theta, f = oracles.random_admissible(rng, 3)
    sig = stress_tensor(cube_from_dict(3, f))
    assert np.array_equal(sig, sig.T)
    assert abs(np.trace(sig)) <= 1e-12 * max(1.0, np.max(np.abs(sig)))


def test_extractors_batched():
    rng = np.random.default_rng(6)
    cubes, sigs, qs = [], [], []
    for _ in range(5):
        _, _, f = oracles.random_admissible(rng, 4)
        c = cube_from_dict(4, f)
        cubes.append(c)
        sigs.append(stress_tensor(c))
        qs.append(heat_flux(c))
    batch = np.stack(cubes)
    np.testing.assert_array_equal(stress_tensor(batch), np.stack(sigs))
    np.testing.assert_array_equal(heat_flux(batch), np.stack(qs))


# ---------------------------------------------------------------------------
# snapshot files


def test_snapshot_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    n = 6
    coeffs = np.stack(
        [cube_from_dict(4, oracles.random_admissible(rng, 4)[2]) for _ in range(n)]
    )
    u = rng.uniform(-0.3, 0.3, size=(n, 3))
    theta = rng.uniform(0.8, 1.2, size=n)
    centers = np.linspace(-0.45, 0.45, n)
    path = tmp_path / "snap.csv"
    write_snapshot(path, centers, u, theta, coeffs)
    cols = read_snapshot(path)
    assert tuple(cols) == SNAPSHOT_COLUMNS
    table = snapshot_table(centers, u, theta, coeffs)
    for i, name in enumerate(SNAPSHOT_COLUMNS):
        np.testing.assert_array_equal(cols[name], table[:, i])  # %.17g round-trips
