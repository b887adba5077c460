import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zklab import norms
from zklab.errors import ContractViolation, SingularWeightError
from zklab.grid import Grid, SpaceTimeField, SpectralField, time_profile
from zklab.harness import fit_slope
from zklab.norms import MultiplierWeight, NormSpec

from helpers import band_mask, random_spacetime

G = Grid(Lx=2 * np.pi, Nx=16, Ny=16, Tw=2 * np.pi, Nt=16)


def _mode(grid, xi, q, value=1.0):
    XI, Q = grid.mesh()
    c = np.where(np.isclose(XI, xi) & (Q == q), value, 0.0).astype(complex)
    return SpectralField(grid, c)


SPECS = [
    NormSpec("Xsb", s=0.3, b=0.55),
    NormSpec("Lp-txy", p=4.0),
    NormSpec("Lp-txy", p=math.inf),
    NormSpec("Lp-Txy", p=6.0, T=1.0),
    NormSpec("mixed", groups=((4.0, "t"), (math.inf, "x"), (2.0, "y"))),
    NormSpec("mixed", groups=((6.0, "tx"), (2.0, "y"))),
    NormSpec("LinfHs", s=0.5),
]


def test_zero_field_has_zero_norm():
    Z = SpaceTimeField(G, np.zeros((G.Nt, G.Nx, G.Ny)))
    for spec in SPECS:
        assert norms.norm(Z, spec) == 0.0


def test_x00_equals_l2():
    U = random_spacetime(G, 1)
    x00 = norms.xsb_norm(U, 0, 0)
    assert x00 == pytest.approx(U.l2_norm(), rel=1e-12)
    l2 = norms.norm(U, NormSpec("Lp-txy", p=2.0))
    assert l2 == pytest.approx(x00, rel=1e-10)


def test_single_cell_xsb():
    c = np.zeros((G.Nt, G.Nx, G.Ny), complex)
    m, j, q = 2, 1, 3
    c[m, j, q] = 1.0
    U = SpaceTimeField(G, c)
    xi0, q0, sig = G.xi[j], G.q[q], G.sigma[m]
    want = (1 + xi0**2 + q0**2) ** (0.7 / 2) * (1 + sig**2) ** (0.55 / 2) * math.sqrt(G.spacetime_cell)
    assert norms.xsb_norm(U, 0.7, 0.55) == pytest.approx(want, rel=1e-12)


def test_weights():
    u = _mode(G, 1, 0, 2.0)
    np.testing.assert_array_equal(norms.apply_weight(u, MultiplierWeight("J", 0)).coeffs, u.coeffs)
    v = norms.apply_weight(u, MultiplierWeight("Jx", 1))
    assert np.abs(v.coeffs).max() == pytest.approx(2 * math.sqrt(2))
    g = Grid(Lx=2 * np.pi, Nx=64, Ny=8)
    w = norms.apply_weight(_mode(g, 16, 1), MultiplierWeight("Ix", 0.25))
    assert np.abs(w.coeffs).max() == pytest.approx(2.0)
    assert MultiplierWeight.parse("Ix^0.25") == MultiplierWeight("Ix", 0.25)
    assert MultiplierWeight.parse(MultiplierWeight("Jy", -1).token) == MultiplierWeight("Jy", -1)


def test_singular_riesz_weight():
    with pytest.raises(SingularWeightError):
        norms.apply_weight(_mode(G, 0, 0), MultiplierWeight("I", -0.5))
    out = norms.apply_weight(_mode(G, 1, 1), MultiplierWeight("I", -0.5))
    assert np.isfinite(out.coeffs).all()


@given(st.integers(0, 10_000), st.floats(-3, 3).filter(lambda c: abs(c) > 1e-3),
       st.sampled_from(SPECS))
def test_homogeneity(seed, c, spec):
    U = random_spacetime(G, seed, real=True)
    V = U.replace(U.coeffs * c)
    assert norms.norm(V, spec) == pytest.approx(abs(c) * norms.norm(U, spec), rel=1e-12)


@given(st.integers(0, 10_000), st.floats(-1, 1), st.floats(0, 1), st.floats(0, 1))
def test_monotone_in_b(seed, s, b1, b2):
    b1, b2 = sorted((b1, b2))
    U = random_spacetime(G, seed)
    assert norms.xsb_norm(U, s, b1) <= norms.xsb_norm(U, s, b2) * (1 + 1e-14)


def test_linf_hs_embedding_constant_stable():
    ratios = []
    Ns = (2, 4, 8, 16)
    for band in Ns:
        g = Grid(Lx=2 * np.pi, Nx=4 * band, Ny=4 * band, Tw=2 * np.pi, Nt=16)
        best = 0.0
        for seed in range(100):
            U = random_spacetime(g, seed, kx=band, ky=band, ks=3)
            best = max(best, norms.linf_hs(U, 0.3) / norms.xsb_norm(U, 0.3, 0.6))
        ratios.append(best)
    assert fit_slope(Ns, ratios) <= 0.05


def test_normspec_json_round_trip():
    for spec in SPECS:
        assert NormSpec.from_json(spec.to_json()) == spec
    with pytest.raises(ContractViolation):
        NormSpec("mixed", groups=((2.0, "x"), (2.0, "ty")))
    with pytest.raises(ContractViolation):
        NormSpec("Lp-txy", p=0.5)


def test_xsb_needs_spacetime():
    with pytest.raises(ContractViolation):
        norms.xsb_norm(_mode(G, 1, 1), 0, 0)


def test_restriction_surrogate():
    g = Grid(Lx=2 * np.pi, Nx=16, Ny=16, Tw=8.0, Nt=32)
    U = random_spacetime(g, 3, ks=4)
    val = norms.restriction_norm_surrogate(U, 0, 0, 1.0, oversample=4)
    t, c = time_profile(U, 4)
    chi = norms.canonical_cutoff(t, 1.0)
    quad = math.sqrt(np.sum(chi[:, None, None] ** 2 * np.abs(c) ** 2) * g.spectral_cell * (t[1] - t[0]))
    assert val == pytest.approx(quad, rel=1e-10)
    Z = U.replace(np.zeros_like(U.coeffs))
    assert norms.restriction_norm_surrogate(Z, 0.5, 0.55, 1.0) == 0
    with pytest.raises(ContractViolation):
        norms.restriction_norm_surrogate(U, 0, 0, 3.0)


def test_cutoff_shape():
    t = np.linspace(-3, 3, 601)
    chi = norms.canonical_cutoff(t, 1.0)
    assert np.all(chi[np.abs(t) <= 1] == 1) and np.all(chi[np.abs(t) >= 2] == 0)
    assert np.all((0 <= chi) & (chi <= 1))


def test_mp_symbol_values():
    assert norms.mp_symbol(1, 0, 0, 1) == pytest.approx(math.sqrt(2))
    assert norms.mp_symbol(1, 2, -1, 2) == 0


def test_mp_single_cells():
    A = np.zeros((1,) + G.shape, complex)
    B = np.zeros_like(A)
    XI, Q = G.mesh()
    A[0][np.isclose(XI, 1) & (Q == 0)] = 2.0
    B[0][np.isclose(XI, 0) & (Q == 1)] = 3.0
    for method in ("direct", "series", "auto"):
        out = norms.mp_spatial(G, A, B, method=method)
        hit = np.isclose(XI, 1) & (Q == 1)
        assert out[0][hit][0] == pytest.approx(math.sqrt(2) * 6 * G.spectral_cell, rel=1e-10)
        assert np.abs(out[0][~hit]).max() < 1e-12


def test_mp_vanishes_on_same_shell():
    A = np.zeros((1,) + G.shape, complex)
    B = np.zeros_like(A)
    XI, Q = G.mesh()
    A[0][np.isclose(XI, 1) & (Q == 2)] = 1.0
    B[0][np.isclose(XI, -1) & (Q == 2)] = 1.0
    assert np.abs(norms.mp_spatial(G, A, B, method="direct")).max() == 0


@given(st.integers(0, 10_000), st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_mp_bilinear_and_symmetric(seed, a):
    g = Grid(Lx=2 * np.pi, Nx=16, Ny=16, Tw=2 * np.pi, Nt=8)
    u = random_spacetime(g, seed, kx=2, ky=2, ks=2)
    v = random_spacetime(g, seed + 1, kx=2, ky=2, ks=2)
    uv = norms.mp_apply(u, v).coeffs
    vu = norms.mp_apply(v, u).coeffs
    scale = np.abs(uv).max()
    assert np.abs(uv - vu).max() <= 1e-12 * scale
    au = norms.mp_apply(u.replace(a * u.coeffs), v).coeffs
    assert np.abs(au - a * uv).max() <= 1e-12 * max(abs(a), 1) * scale


def test_mp_series_matches_direct():
    g = Grid(Lx=2 * np.pi, Nx=32, Ny=32)
    rng = np.random.default_rng(0)
    XI, Q = g.mesh()
    D = 3 * XI**2 + Q**2
    A = (rng.standard_normal((2,) + g.shape) + 0j) * ((D > 150) & (D < 200))
    B = (rng.standard_normal((2,) + g.shape) + 0j) * (D < 20)
    d = norms.mp_spatial(g, A, B, method="direct")
    s = norms.mp_spatial(g, A, B, method="series")
    assert np.abs(d - s).max() <= 1e-10 * np.abs(d).max()


def test_mp_grid_mismatch():
    u = random_spacetime(G, 0)
    v = random_spacetime(G.with_(Lx=7.0), 0)
    with pytest.raises(ContractViolation):
        norms.mp_apply(u, v)
