import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zklab import propagator as P
from zklab.errors import BlowUpDetected, ContractViolation
from zklab.grid import Grid, SpectralField, fft_forward, symmetry_defect
from zklab.runner import random_datum

G = Grid(Lx=16.0, Nx=32, Ny=32)


def smooth_datum(grid=G, amplitude=1.0):
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    f = np.exp(-((X - grid.Lx / 2) ** 2) / 4) * (1 + 0.5 * np.cos(Y) + 0.3 * np.sin(2 * Y))
    F = fft_forward(f, grid, real=True)
    c = F.coeffs.copy()
    c[grid.Nx // 2, :] = 0
    c[:, grid.Ny // 2] = 0
    F = F.replace(c)
    return F.replace(F.coeffs * (amplitude / np.sqrt(P.mass(F))))


def random_field(seed, grid=G):
    rng = np.random.default_rng(seed)
    return SpectralField(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))


def rel(a, b):
    return np.abs(a.coeffs - b.coeffs).max() / np.abs(b.coeffs).max()


def test_identity_at_zero():
    u = random_field(0)
    for f in (P.linear_propagate, P.schrodinger_view_evolve, P.airy_view_evolve):
        assert rel(f(u, 0.0), u) <= 1e-14


def test_single_mode_phase():
    c = np.zeros(G.shape, complex)
    c[3, 2] = 1.0
    xi, q = G.xi[3], G.q[2]
    out = P.linear_propagate(SpectralField(G, c), 0.7)
    assert out.coeffs[3, 2] == pytest.approx(np.exp(1j * 0.7 * xi * (xi**2 + q**2)))


@given(st.integers(0, 1000), st.floats(-2, 2), st.floats(-2, 2))
def test_group_law_and_unitarity(seed, t1, t2):
    u = random_field(seed)
    a = P.linear_propagate(P.linear_propagate(u, t1), t2)
    b = P.linear_propagate(u, t1 + t2)
    assert rel(a, b) <= 1e-12
    assert b.l2_norm() == pytest.approx(u.l2_norm(), rel=1e-12)


@given(st.integers(0, 1000), st.floats(-1, 1))
def test_factorizations(seed, t):
    u = random_field(seed)
    ref = P.linear_propagate(u, t)
    assert rel(P.schrodinger_view_evolve(u, t), ref) <= 1e-10
    assert rel(P.airy_view_evolve(u, t), ref) <= 1e-10


def test_y_independent_datum_gets_airy_phase():
    c = np.zeros(G.shape, complex)
    c[:, 0] = np.random.default_rng(1).standard_normal(G.Nx)
    u = SpectralField(G, c)
    out = P.schrodinger_view_evolve(u, 0.37)
    np.testing.assert_allclose(out.coeffs[:, 0], c[:, 0] * np.exp(1j * 0.37 * G.xi**3), atol=1e-12)


def test_mass_and_energy_of_cosine_mode():
    a = 0.8
    X, Y = np.meshgrid(G.x, G.y, indexing="ij")
    f = a * np.cos(2 * Y)
    u = fft_forward(f, G, real=True)
    M = P.mass(u)
    assert M == pytest.approx(a**2 / 2 * G.Lx * 2 * np.pi, rel=1e-12)
    for k in (1, 2, 3):
        quad = np.sum(f ** (k + 2)) * G.dx * G.dy
        for sign in (1, -1):
            want = 0.5 * 4 * M + sign / (k + 2) * quad
            assert P.energy(u, k, sign) == pytest.approx(want, rel=1e-12, abs=1e-12)
            assert P.energy_pm(u, k, sign) == P.energy(u, k, -sign)
    Z = u.replace(np.zeros(G.shape))
    assert P.mass(Z) == 0 and P.energy(Z, 1, 1) == 0


def test_linear_exactness():
    u = smooth_datum()
    tr = P.gzk_solve(u, P.EvolutionConfig(k=1, dt=0.01, T=0.5, stride=10, nonlinear_coeff=0.0))
    for t, f in zip(tr.times, tr.fields):
        ref = P.linear_propagate(u, t)
        assert np.abs(f.coeffs - ref.coeffs).max() <= 1e-10 * np.abs(u.coeffs).max()


def test_zero_datum_stays_zero():
    Z = SpectralField(G, np.zeros(G.shape), True)
    tr = P.gzk_solve(Z, P.EvolutionConfig(k=2, dt=0.01, T=0.1, stride=5))
    assert all(np.abs(f.coeffs).max() == 0 for f in tr.fields)


def test_short_run_conserves_and_stays_real():
    u = smooth_datum()
    for k in (1, 2):
        for sign in (1, -1):
            tr = P.gzk_solve(u, P.EvolutionConfig(k=k, sign=sign, dt=1e-3, T=0.1, stride=20))
            assert tr.report.drift("mass") <= 1e-8
            assert tr.report.drift("energy") <= 1e-6
            assert all(symmetry_defect(f.coeffs) <= 1e-10 for f in tr.fields)


def test_self_convergence_fourth_order():
    u = smooth_datum()
    finals = []
    for dt in (0.02, 0.01, 0.005):
        tr = P.gzk_solve(u, P.EvolutionConfig(k=1, dt=dt, T=0.4, stride=10_000))
        finals.append(tr.fields[-1].coeffs)
    ratio = np.linalg.norm(finals[0] - finals[1]) / np.linalg.norm(finals[1] - finals[2])
    assert 16 * 0.8 <= ratio <= 16 * 1.2


def test_dealiasing_guard():
    g = Grid(Lx=2 * np.pi, Nx=16, Ny=16)
    u = random_datum(g, band=6, amplitude=3.0, seed=0)
    drift = {}
    for dealias in (True, False):
        tr = P.gzk_solve(u, P.EvolutionConfig(k=2, dt=2.5e-4, T=0.05, stride=50, dealias=dealias))
        drift[dealias] = tr.report.drift("mass")
    assert drift[True] <= 1e-10
    assert drift[False] >= 10 * drift[True]


def test_blow_up_is_reported():
    u = smooth_datum(amplitude=200.0)
    with pytest.raises(BlowUpDetected) as info:
        P.gzk_solve(u, P.EvolutionConfig(k=3, sign=1, dt=0.05, T=5.0, stride=10))
    assert 0 <= info.value.t_last < 5.0


def test_config_validation():
    with pytest.raises(ContractViolation):
        P.EvolutionConfig(k=0)
    with pytest.raises(ContractViolation):
        P.EvolutionConfig(sign=2)
    with pytest.raises(ContractViolation):
        P.EvolutionConfig(dt=2.0, T=1.0)
    with pytest.raises(ContractViolation):
        P.EvolutionConfig(k=2, dealias_pad=1.5)
    assert P.EvolutionConfig(k=2, dealias=False, dealias_pad=1.0).pad == 1.0
    with pytest.raises(ContractViolation):
        P.gzk_solve(random_field(0), P.EvolutionConfig())


def test_report_csv(tmp_path):
    tr = P.gzk_solve(smooth_datum(), P.EvolutionConfig(dt=0.01, T=0.05, stride=1))
    path = tr.report.write_csv(tmp_path / "r.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "t,mass,energy,l2,linf" and len(lines) == 7
