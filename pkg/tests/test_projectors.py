import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zklab import projectors as pj
from zklab import symbols
from zklab.errors import ContractViolation
from zklab.grid import Grid, SpectralField, fft_forward, spacetime_forward


def _field(grid, seed=0, real=True):
    f = np.random.default_rng(seed).standard_normal(grid.shape)
    return fft_forward(f, grid, real=real)


def _point_mask(grid, xi, q):
    XI, Q = grid.mesh()
    return np.isclose(XI, xi) & (Q == q)


def test_mu_psi_values():
    assert pj.mu(0) == 1.0
    assert pj.mu(2) == 0.0
    assert pj.psi(1) == 1.0
    assert pj.mu(1.25) == 1.0 and pj.mu(1.6) == 0.0


@given(st.floats(-3, 3))
def test_mu_bounds(x):
    m = pj.mu(x)
    assert 0.0 <= m <= 1.0
    p = pj.psi(x)
    assert -1e-15 <= p <= 1.0
    if abs(x) < 5 / 8 or abs(x) > 8 / 5:
        assert p == 0.0


def test_partition_of_unity_and_supports():
    g = Grid()
    XI, Q = g.mesh()
    r = symbols.dilated_norm(XI, Q)
    total = np.zeros_like(r)
    for N in pj.dyadic_range(r.max()):
        w = pj.shell_weight(r, N)
        total += w
        if N >= 2:
            assert np.all(w[(r < 5 * N / 8) | (r > 8 * N / 5)] == 0)
        else:
            assert np.all(w[r > 8 / 5] == 0)
    assert np.abs(total - 1).max() <= 1e-12


def test_non_dyadic_rejected():
    with pytest.raises(ContractViolation):
        pj.shell_weight(1.0, 3)


def test_P1_keeps_origin_and_P2_kills_unit_radius():
    g = Grid(Lx=2 * np.pi, Nx=16, Ny=16)
    c = np.zeros(g.shape, complex)
    c[0, 0] = 1.0
    u = SpectralField(g, c)
    np.testing.assert_array_equal(pj.apply_PN(u, 1).coeffs, c)
    c = np.zeros(g.shape, complex)
    c[_point_mask(g, 0, 1)] = 1.0  # |(0, 1)| = 1
    assert np.abs(pj.apply_PN(SpectralField(g, c), 2).coeffs).max() == 0


def test_shells_sum_to_identity():
    g = Grid(Lx=20.0, Nx=32, Ny=32)
    u = _field(g, 1)
    r = symbols.dilated_norm(*g.mesh()).max()
    acc = sum(pj.apply_PN(u, N).coeffs for N in pj.dyadic_range(r))
    assert np.abs(acc - u.coeffs).max() <= 1e-10 * np.abs(u.coeffs).max()


def test_almost_orthogonality_and_non_idempotence():
    g = Grid(Lx=20.0, Nx=64, Ny=64)
    u = _field(g, 2)
    for N, M in ((1, 4), (2, 8), (4, 16)):
        assert np.abs(pj.apply_PN(pj.apply_PN(u, N), M).coeffs).max() == 0
    twice = pj.apply_PN(pj.apply_PN(u, 4), 4)
    once = pj.apply_PN(u, 4)
    assert np.linalg.norm(twice.coeffs - once.coeffs) > 0


def test_QL_commutes_with_PN():
    g = Grid(Lx=12.0, Nx=16, Ny=16, Nt=16)
    U = spacetime_forward(np.random.default_rng(4).standard_normal((16, 16, 16)), g)
    a = pj.apply_QL(pj.apply_PN(U, 2), 4).coeffs
    b = pj.apply_PN(pj.apply_QL(U, 4), 2).coeffs
    assert np.abs(a - b).max() <= 1e-14 * np.abs(U.coeffs).max()


def test_P_alpha_examples():
    g = Grid(Lx=2 * np.pi, Nx=16, Ny=16)
    m = pj.p_alpha_mask(g, 0.0)
    assert m[_point_mask(g, 2, 0)] == 1
    assert m[_point_mask(g, 1, 2)] == 1
    g2 = Grid(Lx=4 * np.pi, Nx=16, Ny=16)  # xi step 1/2
    assert np.all(pj.p_alpha_mask(g2, 0.5)[np.isclose(np.abs(g2.mesh()[0]), 0.5)] == 0)
    with pytest.raises(ContractViolation):
        pj.p_alpha_mask(g, 1.5)


def test_QN_beta():
    g = Grid(Lx=10.0, Nx=8, Ny=16)
    u = _field(g, 5)

    def kept(v):
        return sorted({int(q) for q in g.q[np.abs(v.coeffs).max(axis=0) > 0]})

    assert kept(pj.apply_QN_beta(u, 16, 0.25)) == [-2, -1, 0, 1, 2]
    assert kept(pj.apply_QN_beta(u, 8, 0.0)) == [-1, 0, 1]
    assert kept(pj.apply_QN_beta(u, 1, 0.7, kappa=3)) == [-3, -2, -1, 0, 1, 2, 3]


def test_regions():
    g = Grid(Lx=2 * np.pi, Nx=16, Ny=32)
    low = pj.Region("xi-vs-q-power", {"theta": 2 / 3})
    assert low.mask(g)[_point_mask(g, 4, 8)] == 1
    u = _field(g, 6)
    gap = pj.Region("hyperbola-gap", {"threshold": 1})
    total = pj.region_projector(u, gap).coeffs + pj.region_projector(u, gap, complement=True).coeffs
    np.testing.assert_allclose(total, u.coeffs, rtol=0, atol=0)
    half = pj.region_projector(u, pj.Region("half-space", {"sign": 1}))
    assert u.real and not half.real
    for r in (low, gap):
        assert pj.Region.from_json(r.to_json()) == r
    with pytest.raises(ContractViolation):
        pj.Region("bogus")
    with pytest.raises(ContractViolation):
        pj.region_projector(u, "hyperbola-gap")


@given(st.sampled_from(["xi-vs-q-power", "hyperbola-gap", "half-space"]), st.floats(0.1, 2))
def test_sharp_projectors_idempotent(name, par):
    g = Grid(Lx=8.0, Nx=16, Ny=16)
    key = {"xi-vs-q-power": "theta", "hyperbola-gap": "threshold", "half-space": "sign"}[name]
    r = pj.Region(name, {key: par})
    u = _field(g, 7)
    once = pj.region_projector(u, r)
    np.testing.assert_array_equal(pj.region_projector(once, r).coeffs, once.coeffs)
