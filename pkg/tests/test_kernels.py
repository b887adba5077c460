"""Cross-check of the compiled kernels against the NumPy reference."""
import numpy as np
import pytest

from zklab import kernels

BACKENDS = kernels.backends()
needs_cython = pytest.mark.skipif("cython" not in BACKENDS, reason="extension not built")


def test_backend_name_is_known():
    assert kernels.BACKEND in ("python", "cython")
    assert "python" in BACKENDS


def _slice_inputs(rng, n=400):
    y = rng.uniform(-3, 3, n)
    lo = rng.uniform(-2, 0, n)
    hi = lo + rng.uniform(-0.2, 3, n)
    return y, lo, hi


@needs_cython
@pytest.mark.parametrize("seed", range(5))
def test_slice_lengths_backends_agree(seed):
    rng = np.random.default_rng(seed)
    y, lo, hi = _slice_inputs(rng)
    xi, q, c, K = rng.uniform(0.3, 2), rng.uniform(-3, 3), rng.uniform(-4, 4), rng.uniform(0.1, 3)
    out_py = np.empty_like(y)
    out_cy = np.empty_like(y)
    BACKENDS["python"].slice_lengths(xi, q, c, K, y, lo, hi, out_py)
    BACKENDS["cython"].slice_lengths(xi, q, c, K, y, lo, hi, out_cy)
    np.testing.assert_allclose(out_cy, out_py, rtol=1e-12, atol=1e-12)
    assert np.all(out_py >= 0)
    assert np.all(out_py <= np.maximum(hi - lo, 0) + 1e-12)


@needs_cython
@pytest.mark.parametrize("seed", range(3))
def test_mp_pair_sum_backends_agree(seed):
    rng = np.random.default_rng(seed)
    Nx, Ny, M, Sa, Sb = 16, 8, 5, 30, 25

    def support(S):
        j = rng.integers(-Nx // 2, Nx // 2, S).astype(np.int_)
        q = rng.integers(-Ny // 2, Ny // 2, S).astype(np.int_)
        D = rng.normal(size=S)
        A = np.ascontiguousarray(rng.normal(size=(S, M)) + 1j * rng.normal(size=(S, M)))
        return j, q, D, A

    ja, qa, Da, Av = support(Sa)
    jb, qb, Db, Bv = support(Sb)
    res = {}
    for name in ("python", "cython"):
        out = np.zeros((Nx, Ny, M), dtype=complex)
        BACKENDS[name].mp_pair_sum(ja, qa, Da, Av, jb, qb, Db, Bv, Nx, Ny, 0.37, out)
        res[name] = out
    np.testing.assert_allclose(res["cython"], res["python"], rtol=1e-12, atol=1e-12)
    assert np.abs(res["python"]).max() > 0


@needs_cython
@pytest.mark.parametrize("seed", range(3))
def test_grouped_kernel_sum_backends_agree(seed):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(1, 40, 6)
    starts = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int_)
    theta = np.concatenate([np.sort(rng.uniform(-2, 2, s)) for s in sizes])
    z = rng.normal(size=theta.size) + 1j * rng.normal(size=theta.size)
    dmax, step = 1.5, 0.01
    d = np.arange(-dmax, dmax + step / 2, step)
    ktab = np.exp(-d ** 2)
    a = BACKENDS["python"].grouped_kernel_sum(starts, z, theta, ktab, dmax, step)
    b = BACKENDS["cython"].grouped_kernel_sum(starts, z, theta, ktab, dmax, step)
    assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


def test_grouped_kernel_sum_is_real_nonnegative_for_positive_kernel():
    rng = np.random.default_rng(7)
    theta = np.sort(rng.uniform(-1, 1, 50))
    z = rng.normal(size=50) + 1j * rng.normal(size=50)
    d = np.arange(-3, 3 + 0.005, 0.01)
    ktab = np.exp(-d ** 2)  # positive definite kernel
    total = kernels.grouped_kernel_sum(np.array([0, 50], dtype=np.int_), z, theta, ktab, 3.0, 0.01)
    assert abs(total.imag) < 1e-9 * abs(total.real)
    assert total.real > 0
