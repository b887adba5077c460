from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zklab import symbols
from zklab.errors import ContractViolation
from zklab.grid import (Grid, SpectralField, fft_forward, fft_inverse, load_field, save_field,
                        spacetime_forward, spacetime_from_physical, spacetime_inverse,
                        symmetry_defect, time_profile)

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=97)
ints = st.integers(-50, 50)


def test_phase_and_magnitudes():
    assert symbols.phase(2, 3) == 26
    assert symbols.dilated_norm(2, 3) == pytest.approx(np.sqrt(21))
    assert symbols.bracket(2, 3) == pytest.approx(np.sqrt(14))


def test_h_parity():
    assert symbols.h_parity(4) == 0
    assert symbols.h_parity(-3) == Fraction(1, 2)
    np.testing.assert_array_equal(symbols.h_parity(np.array([0, 1, 2, 5])), [0, 0.5, 0, 0.5])


def test_p_poly_value():
    assert symbols.p_poly(1, 2, 1, 1) == 8


def test_pair_sum_hand_example():
    assert symbols.phase_pair_sum(2, 0, 0, 0) == 8
    assert symbols.phase_pair_sum_centered(2, 0, 0, 0) == 8


def test_pair_sum_at_centre():
    xi, q = Fraction(3), 4
    val = symbols.phase_pair_sum_centered(xi, q, xi / 2, Fraction(q, 2))
    assert val == xi / 4 * (xi**2 + q**2)


def test_resonance2_examples():
    assert symbols.resonance2(2, 0, 1, 1) == 4
    assert symbols.resonance2(3, 2, 3, 2) == 0
    assert symbols.resonance2(3, 2, 0, 0) == 0


def test_resonance3_examples():
    p = (1, 0)
    assert symbols.resonance3(p, p, p) == 24
    assert symbols.resonance3_factored(p, p, p) == 24
    assert symbols.resonance3_rewritten(p, p, p) == 24
    p1, p3 = (Fraction(2, 3), 5), (Fraction(-7, 2), 1)
    assert symbols.resonance3(p1, (-p1[0], -p1[1]), p3) == 0


@given(fractions, ints, fractions, ints)
def test_substitution_identity_exact(xi, q, xi1, q1):
    if xi == 0:
        xi = Fraction(1, 3)
    assert symbols.phase_pair_sum(xi, q, xi1, q1) == symbols.phase_pair_sum_centered(xi, q, xi1, q1)


@given(st.floats(-1e3, 1e3), st.integers(-1000, 1000), st.floats(-1e3, 1e3), st.integers(-1000, 1000))
def test_substitution_identity_float(xi, q, xi1, q1):
    a = symbols.phase_pair_sum(xi, q, xi1, q1)
    b = symbols.phase_pair_sum_centered(xi, q, xi1, q1)
    scale = max(abs(xi), abs(q), abs(xi1), abs(q1), 1.0) ** 3
    assert abs(a - b) <= 1e-9 * scale


@given(st.lists(st.tuples(fractions, ints), min_size=3, max_size=3))
def test_resonance_forms_agree_exactly(pts):
    direct = symbols.resonance3(*pts)
    assert symbols.resonance3_factored(*pts) == direct
    assert symbols.resonance3_rewritten(*pts) == direct


def test_identity_defects_zero():
    d = symbols.identity_defects(samples=200, seed=3)
    assert all(v == 0 for v in d.values())


def test_phase_is_odd(small_grid):
    XI, Q = small_grid.mesh()
    np.testing.assert_array_equal(symbols.phase(-XI, -Q), -symbols.phase(XI, Q))


# ---------------------------------------------------------------- transforms

def test_constant_field_dc(small_grid):
    F = fft_forward(np.ones(small_grid.shape), small_grid)
    c = F.coeffs
    assert c[0, 0] == pytest.approx(small_grid.Lx * 2 * np.pi, rel=1e-13)
    c2 = c.copy()
    c2[0, 0] = 0
    assert np.abs(c2).max() < 1e-10


def test_round_trip(small_grid, rng):
    f = rng.standard_normal(small_grid.shape) + 1j * rng.standard_normal(small_grid.shape)
    back = fft_inverse(fft_forward(f, small_grid))
    assert np.linalg.norm(back - f) <= 1e-12 * np.linalg.norm(f)


def test_parseval(small_grid, rng):
    g = small_grid
    f = rng.standard_normal(g.shape)
    F = fft_forward(f, g)
    physical = np.sum(f**2) * g.dx * g.dy
    spectral = np.sum(np.abs(F.coeffs) ** 2) * g.spectral_cell
    assert spectral == pytest.approx(physical, rel=1e-10)
    assert F.l2_norm() ** 2 == pytest.approx(physical, rel=1e-10)


@given(st.integers(0, 2**31 - 1))
def test_real_input_is_conjugate_symmetric(seed):
    g = Grid(Lx=10.0, Nx=16, Ny=8)
    f = np.random.default_rng(seed).standard_normal(g.shape)
    F = fft_forward(f, g)
    assert F.real
    assert symmetry_defect(F.coeffs) <= 1e-12


def test_dimension_mismatch(small_grid):
    with pytest.raises(ContractViolation):
        fft_forward(np.zeros((4, 4)), small_grid)
    with pytest.raises(ContractViolation):
        SpectralField(small_grid, np.zeros((3, 3)))


def test_grid_validation():
    with pytest.raises(ContractViolation):
        Grid(Nx=7)
    with pytest.raises(ContractViolation):
        Grid(Lx=-1.0)


def test_spacetime_round_trip(small_grid, rng):
    g = small_grid
    U = rng.standard_normal((g.Nt, g.Nx, g.Ny)) + 1j * rng.standard_normal((g.Nt, g.Nx, g.Ny))
    _, back = time_profile(spacetime_forward(U, g))
    assert np.linalg.norm(back - U) <= 1e-12 * np.linalg.norm(U)
    u = rng.standard_normal((g.Nt, g.Nx, g.Ny))
    phys = spacetime_inverse(spacetime_from_physical(u, g))
    assert np.linalg.norm(phys - u) <= 1e-12 * np.linalg.norm(u)


def test_serialization_round_trip(tmp_path, small_grid, rng):
    F = fft_forward(rng.standard_normal(small_grid.shape), small_grid)
    path = save_field(F, tmp_path / "field.bin")
    G = load_field(path)
    assert G.grid == F.grid and G.real == F.real
    np.testing.assert_array_equal(G.coeffs, F.coeffs)
    W = spacetime_forward(rng.standard_normal((small_grid.Nt,) + small_grid.shape), small_grid)
    W2 = load_field(save_field(W, tmp_path / "st.bin"))
    np.testing.assert_array_equal(W2.coeffs, W.coeffs)
