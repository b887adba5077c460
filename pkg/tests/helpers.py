"""Random band-limited test fields shared by several test modules."""
import numpy as np

from zklab.grid import SpaceTimeField, conjugate_mirror


def band_mask(grid, kx, ky, ks=None):
    """Boolean lattice mask of ``|j| <= kx``, ``|q| <= ky`` (and ``|m| <= ks``)."""
    j = np.fft.fftfreq(grid.Nx, 1.0 / grid.Nx)
    q = np.fft.fftfreq(grid.Ny, 1.0 / grid.Ny)
    m2 = (np.abs(j)[:, None] <= kx) & (np.abs(q)[None, :] <= ky)
    if ks is None:
        return m2
    m = np.fft.fftfreq(grid.Nt, 1.0 / grid.Nt)
    return (np.abs(m)[:, None, None] <= ks) & m2[None]


def random_spacetime(grid, seed, kx=3, ky=3, ks=3, real=False):
    rng = np.random.default_rng(seed)
    shape = (grid.Nt, grid.Nx, grid.Ny)
    c = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * band_mask(grid, kx, ky, ks)
    if real:
        c = 0.5 * (c + conjugate_mirror(c))
    return SpaceTimeField(grid, c, real)


ACCEPTANCE_LINES: dict = {}


def record_verdict(number: int, line: str) -> None:
    """Keep an acceptance verdict for the terminal summary."""
    ACCEPTANCE_LINES[number] = line
