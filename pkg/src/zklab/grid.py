"""Discretised geometry of R x T and the Fourier conventions used everywhere.

Conventions
-----------
The x-direction is a periodic box of length ``Lx``; the y-direction is the
torus of length ``2 pi``.  Spectral arrays are stored in NumPy FFT order along
every axis (index ``j`` holds ``xi_j = 2 pi j / Lx`` for ``j < Nx/2`` and
wraps around to negative frequencies afterwards).

The forward transform is the Riemann sum of the continuous transform::

    F(xi, q) = dx * dy * sum_{x, y} f(x, y) exp(-i (x xi + y q))

so the constant function 1 maps to ``Lx * 2 pi`` at the zero mode, and
Parseval reads ``||f||_2^2 = sum |F|^2 * dxi / (2 pi)^2`` with one unit of
counting weight per integer ``q``.

Space-time fields are stored in the *modulation frame*: entry ``W[m, j, q]``
is the space-time transform at ``tau = sigma_m + phi(xi_j, q)`` where
``sigma_m = 2 pi m / Tw``.  A lattice in ``tau`` cannot follow the
characteristic surface once ``phi`` is large, whereas this frame keeps
near-characteristic fields exactly representable at every frequency.
Time samples live on ``t_n = -Tw/2 + n dt``.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import symbols
from .errors import ContractViolation

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Grid:
    """Uniform box ``[0, Lx) x [0, 2 pi)`` with ``Nx x Ny`` points and a time window.

    Parameters
    ----------
    Lx : float
        Period of the box in x.
    Nx, Ny : int
        Even numbers of modes, at least 8.
    Tw : float
        Length of the time window used by space-time transforms.
    Nt : int
        Even number of time samples, at least 8.
    """

    Lx: float = 64.0
    Nx: int = 128
    Ny: int = 128
    Tw: float = TWO_PI
    Nt: int = 128

    def __post_init__(self):
        if not self.Lx > 0 or not self.Tw > 0:
            raise ContractViolation("Lx and Tw must be positive")
        for name in ("Nx", "Ny", "Nt"):
            n = getattr(self, name)
            if int(n) != n or n < 8 or n % 2:
                raise ContractViolation(f"{name} must be an even integer >= 8, got {n}")

    @property
    def dx(self) -> float:
        return self.Lx / self.Nx

    @property
    def dy(self) -> float:
        return TWO_PI / self.Ny

    @property
    def dt(self) -> float:
        return self.Tw / self.Nt

    @property
    def dxi(self) -> float:
        return TWO_PI / self.Lx

    @property
    def dsigma(self) -> float:
        return TWO_PI / self.Tw

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nx, self.Ny)

    @property
    def xi(self) -> np.ndarray:
        """x-frequencies in FFT order."""
        return TWO_PI * np.fft.fftfreq(self.Nx, d=self.dx)

    @property
    def q(self) -> np.ndarray:
        """Integer y-frequencies in FFT order."""
        return np.fft.fftfreq(self.Ny, d=1.0 / self.Ny).round().astype(np.int64)

    @property
    def sigma(self) -> np.ndarray:
        """Modulation lattice in FFT order."""
        return TWO_PI * np.fft.fftfreq(self.Nt, d=self.dt)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.Nx) * self.dx

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.Ny) * self.dy

    @property
    def t(self) -> np.ndarray:
        return -self.Tw / 2 + np.arange(self.Nt) * self.dt

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Frequency mesh ``(XI, Q)`` of shape ``(Nx, Ny)``."""
        return np.meshgrid(self.xi, self.q.astype(float), indexing="ij")

    def phase_table(self) -> np.ndarray:
        XI, Q = self.mesh()
        return symbols.phase(XI, Q)

    @property
    def spectral_cell(self) -> float:
        """Measure of one (xi, q) lattice cell."""
        return self.dxi / TWO_PI**2

    @property
    def spacetime_cell(self) -> float:
        """Measure of one (sigma, xi, q) lattice cell."""
        return self.dsigma * self.dxi / TWO_PI**3

    def with_(self, **changes) -> "Grid":
        vals = dict(Lx=self.Lx, Nx=self.Nx, Ny=self.Ny, Tw=self.Tw, Nt=self.Nt)
        vals.update(changes)
        return Grid(**vals)

    def header(self) -> dict:
        return dict(Lx=self.Lx, Nx=self.Nx, Ny=self.Ny, Tw=self.Tw, Nt=self.Nt)


def _mirror_index(n: int) -> np.ndarray:
    return (-np.arange(n)) % n


def conjugate_mirror(c: np.ndarray) -> np.ndarray:
    """Return ``conj(c(-k))`` for an FFT-ordered array over all axes."""
    out = c
    for ax, n in enumerate(c.shape):
        out = np.take(out, _mirror_index(n), axis=ax)
    return np.conj(out)


def symmetry_defect(c: np.ndarray) -> float:
    """Relative defect of the conjugate symmetry ``c(-k) = conj(c(k))``."""
    scale = np.max(np.abs(c))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(c - conjugate_mirror(c))) / scale)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a function on the box at one instant.

    Parameters
    ----------
    grid : Grid
    coeffs : ndarray, complex, shape ``(Nx, Ny)``
    real : bool
        Marks a real-valued function; conjugate symmetry is then enforced
        to ``1e-12`` relative.
    """

    grid: Grid
    coeffs: np.ndarray
    real: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ContractViolation(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        if self.real and symmetry_defect(c) > 1e-12:
            raise ContractViolation("field marked real but coefficients are not conjugate symmetric")

    def replace(self, coeffs: np.ndarray, real: bool | None = None) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.real if real is None else real)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs + other.coeffs, self.real and other.real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs - other.coeffs, self.real and other.real)

    def __mul__(self, a) -> "SpectralField":
        a = complex(a)
        return SpectralField(self.grid, a * self.coeffs, self.real and a.imag == 0)

    __rmul__ = __mul__

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2) * self.grid.spectral_cell))

    def physical(self) -> np.ndarray:
        return fft_inverse(self)


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Space-time Fourier coefficients in the modulation frame.

    ``coeffs[m, j, q]`` is the transform at ``(sigma_m + phi(xi_j, q), xi_j, q)``.
    """

    grid: Grid
    coeffs: np.ndarray
    real: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        want = (self.grid.Nt, self.grid.Nx, self.grid.Ny)
        if c.shape != want:
            raise ContractViolation(f"coefficient shape {c.shape} does not match grid {want}")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        if self.real and symmetry_defect(c) > 1e-12:
            raise ContractViolation("field marked real but coefficients are not conjugate symmetric")

    def replace(self, coeffs: np.ndarray, real: bool | None = None) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, coeffs, self.real if real is None else real)

    def __add__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        _check_same_grid(self.grid, other.grid)
        return SpaceTimeField(self.grid, self.coeffs + other.coeffs, self.real and other.real)

    def __mul__(self, a) -> "SpaceTimeField":
        a = complex(a)
        return SpaceTimeField(self.grid, a * self.coeffs, self.real and a.imag == 0)

    __rmul__ = __mul__

    def tau(self) -> np.ndarray:
        """Full ``tau`` value of every stored coefficient."""
        g = self.grid
        return g.sigma[:, None, None] + g.phase_table()[None]

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2) * self.grid.spacetime_cell))


def _check_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ContractViolation(f"grid mismatch: {a} vs {b}")


# ---------------------------------------------------------------------------
# spatial transforms


def fft_forward(f: np.ndarray, grid: Grid, real: bool | None = None) -> SpectralField:
    """Riemann-sum Fourier transform of samples ``f[x, y]``."""
    f = np.asarray(f)
    if f.shape != grid.shape:
        raise ContractViolation(f"sample shape {f.shape} does not match grid {grid.shape}")
    if real is None:
        real = not np.iscomplexobj(f)
    c = np.fft.fft2(f) * (grid.dx * grid.dy)
    if real:
        c = 0.5 * (c + conjugate_mirror(c))
    return SpectralField(grid, c, real)


def fft_inverse(F: SpectralField) -> np.ndarray:
    """Samples on the grid; real array when the field is marked real."""
    g = F.grid
    f = np.fft.ifft2(F.coeffs) / (g.dx * g.dy)
    return f.real.copy() if F.real else f


def pad_spectrum(c: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Zero-pad (or truncate) an FFT-ordered array to a new shape.

    Nyquist entries of the source are split evenly between the two mirrored
    positions when padding, which keeps real fields real.
    """
    out = c
    for ax, m in enumerate(shape):
        n = out.shape[ax]
        if m == n:
            continue
        if m > n:
            half = n // 2
            pos = np.take(out, np.arange(half), axis=ax)
            nyq = np.take(out, [half], axis=ax)
            neg = np.take(out, np.arange(half + 1, n), axis=ax)
            zshape = list(out.shape)
            zshape[ax] = m - n - 1
            zeros = np.zeros(zshape, dtype=out.dtype)
            out = np.concatenate([pos, 0.5 * nyq, zeros, 0.5 * nyq, neg], axis=ax)
        else:
            half = m // 2
            pos = np.take(out, np.arange(half), axis=ax)
            neg = np.take(out, np.arange(n - half, n), axis=ax)
            out = np.concatenate([pos, neg], axis=ax)
    return out


def physical_padded(F: SpectralField, factor: float) -> np.ndarray:
    """Samples of the band-limited interpolant on a grid refined by ``factor``."""
    g = F.grid
    nx = _even_ceil(g.Nx * factor)
    ny = _even_ceil(g.Ny * factor)
    c = pad_spectrum(F.coeffs, (nx, ny))
    dx, dy = g.Lx / nx, TWO_PI / ny
    f = np.fft.ifft2(c) / (dx * dy)
    return f.real if F.real else f


def _even_ceil(v: float) -> int:
    n = int(np.ceil(v - 1e-9))
    return n + (n % 2)


# ---------------------------------------------------------------------------
# space-time transforms


def spacetime_forward(U: np.ndarray, grid: Grid, real: bool = False) -> SpaceTimeField:
    """Transform spatial coefficients ``U[n, j, q]`` sampled at ``grid.t``.

    ``U`` holds the spatial Fourier coefficients at each time sample.  The
    result is in the modulation frame.  ``real=True`` symmetrises the result
    and is only meaningful for real fields with vanishing Nyquist modes.
    """
    U = np.asarray(U, dtype=np.complex128)
    want = (grid.Nt, grid.Nx, grid.Ny)
    if U.shape != want:
        raise ContractViolation(f"array shape {U.shape} does not match {want}")
    phi = grid.phase_table()
    v = U * np.exp(-1j * grid.t[:, None, None] * phi[None])
    sign = (-1.0) ** np.arange(grid.Nt)
    W = grid.dt * sign[:, None, None] * np.fft.fft(v, axis=0)
    if real:
        W = 0.5 * (W + conjugate_mirror(W))
    return SpaceTimeField(grid, W, real)


def spacetime_from_physical(u: np.ndarray, grid: Grid) -> SpaceTimeField:
    """Transform samples ``u[n, x, y]`` at ``grid.t`` into a space-time field.

    The result is flagged real when the samples are real and the
    coefficients satisfy the conjugate symmetry, which requires the Nyquist
    modes to vanish.
    """
    u = np.asarray(u)
    U = np.fft.fft2(u, axes=(1, 2)) * (grid.dx * grid.dy)
    W = spacetime_forward(U, grid)
    if not np.iscomplexobj(u) and symmetry_defect(W.coeffs) < 1e-12:
        return W.replace(W.coeffs, real=True)
    return W


def time_profile(W: SpaceTimeField, oversample: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Spatial coefficients at time samples.

    Parameters
    ----------
    W : SpaceTimeField
    oversample : int
        Refinement of the time lattice.  The sigma spectrum is zero-padded,
        so the samples are those of the same band-limited function.

    Returns
    -------
    t : ndarray, shape ``(M,)``
    U : ndarray, shape ``(M, Nx, Ny)``
    """
    g = W.grid
    m = g.Nt * int(oversample)
    c = pad_spectrum(W.coeffs, (m, g.Nx, g.Ny)) if m != g.Nt else W.coeffs
    dt = g.Tw / m
    t = -g.Tw / 2 + np.arange(m) * dt
    sign = (-1.0) ** np.arange(m)
    v = np.fft.ifft(sign[:, None, None] * c, axis=0) * (m / g.Tw)
    U = v * np.exp(1j * t[:, None, None] * g.phase_table()[None])
    return t, U


def spacetime_inverse(W: SpaceTimeField) -> np.ndarray:
    """Physical samples ``u[n, x, y]`` at ``grid.t``."""
    g = W.grid
    _, U = time_profile(W, 1)
    u = np.fft.ifft2(U, axes=(1, 2)) / (g.dx * g.dy)
    return u.real.copy() if W.real else u


def slice_at(W: SpaceTimeField, t: float) -> SpectralField:
    """Spatial coefficients of the band-limited interpolant at an arbitrary time."""
    g = W.grid
    sigma = g.sigma
    v = np.tensordot(np.exp(1j * sigma * t), W.coeffs, axes=(0, 0)) / g.Tw
    U = v * np.exp(1j * t * g.phase_table())
    if W.real:
        U = 0.5 * (U + conjugate_mirror(U))
    return SpectralField(g, U, W.real)


# ---------------------------------------------------------------------------
# serialisation

_MAGIC = b"ZKLB"
_KIND = {"spectral": 1, "spacetime": 2}


def save_field(field_: SpectralField | SpaceTimeField, path: str | Path) -> Path:
    """Write the flat binary layout plus a JSON sidecar ``<path>.json``.

    Layout: 4-byte magic, then little-endian float64 header values
    ``kind, Lx, Nx, Ny, Tw, Nt, real_flag``, then the complex payload as
    interleaved float64 pairs in row-major ``(m,) j, q`` order.
    """
    path = Path(path)
    g = field_.grid
    kind = "spacetime" if isinstance(field_, SpaceTimeField) else "spectral"
    head = struct.pack("<7d", _KIND[kind], g.Lx, g.Nx, g.Ny, g.Tw, g.Nt, float(field_.real))
    payload = np.ascontiguousarray(field_.coeffs, dtype="<c16").tobytes()
    path.write_bytes(_MAGIC + head + payload)
    meta = dict(kind=kind, real=bool(field_.real), dtype="complex128-le",
                order="row-major (m, j, q)" if kind == "spacetime" else "row-major (j, q)",
                **g.header())
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return path


def load_field(path: str | Path) -> SpectralField | SpaceTimeField:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ContractViolation(f"{path}: not a zklab field file")
    kind, Lx, Nx, Ny, Tw, Nt, real = struct.unpack("<7d", raw[4:60])
    g = Grid(Lx=Lx, Nx=int(Nx), Ny=int(Ny), Tw=Tw, Nt=int(Nt))
    data = np.frombuffer(raw[60:], dtype="<c16")
    if int(kind) == _KIND["spacetime"]:
        return SpaceTimeField(g, data.reshape(g.Nt, g.Nx, g.Ny), bool(real))
    return SpectralField(g, data.reshape(g.Nx, g.Ny), bool(real))
