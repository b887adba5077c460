"""Linear gZK group, its two one-dimensional factorisations, and a
pseudo-spectral solver for the nonlinear equation

    d_t u + d_x Lap u = sign * d_x (u^(k+1)).

In Fourier variables the linear part is ``d_t u^ = i phi u^``, so the group
multiplies coefficients by ``exp(i t phi)``.  The solver integrates
``w = exp(-i t phi) u^`` with classical RK4 (integrating-factor RK4), forming
the nonlinearity on a zero-padded grid.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BlowUpDetected, ContractViolation
from .grid import TWO_PI, Grid, SpectralField, _even_ceil, conjugate_mirror, pad_spectrum


def linear_propagate(u0: SpectralField, t: float) -> SpectralField:
    """Apply the free group: multiply every coefficient by ``exp(i t phi)``."""
    return u0.replace(u0.coeffs * np.exp(1j * t * u0.grid.phase_table()))


def schrodinger_view_evolve(u0: SpectralField, t: float) -> SpectralField:
    """Evolve via one Schrödinger flow in ``y`` per fixed ``xi``.

    For each ``xi`` row the function of ``y`` is evolved by the periodic
    Schrödinger group ``exp(i s d_y^2)`` for time ``s = -xi t`` and then
    multiplied by the Airy phase ``exp(i t xi^3)``.
    """
    g = u0.grid
    rows = np.fft.ifft(u0.coeffs, axis=1)          # (xi, y) representation
    q2 = g.q.astype(float) ** 2
    out = np.empty_like(rows)
    for j, xi in enumerate(g.xi):
        out[j] = _schrodinger_1d(rows[j], -xi * t, q2) * np.exp(1j * t * xi**3)
    return u0.replace(np.fft.fft(out, axis=1))


def _schrodinger_1d(f: np.ndarray, s: float, q2: np.ndarray) -> np.ndarray:
    # exp(i s d_y^2) has symbol exp(-i s q^2)
    return np.fft.ifft(np.fft.fft(f) * np.exp(-1j * s * q2))


def airy_view_evolve(u0: SpectralField, t: float) -> SpectralField:
    """Evolve via one Airy flow in ``x`` per fixed ``q`` followed by a shift.

    Each ``q`` slice is evolved by ``exp(-t d_x^3)`` and then translated by
    ``x -> x + q^2 t``; the translation is the exact Fourier phase
    ``exp(i xi q^2 t)``.
    """
    g = u0.grid
    cols = np.fft.ifft(u0.coeffs, axis=0)          # (x, q) representation
    xi = g.xi
    out = np.empty_like(cols)
    for k, q in enumerate(g.q):
        airy = np.fft.fft(cols[:, k]) * np.exp(1j * t * xi**3)
        shifted = airy * np.exp(1j * xi * float(q) ** 2 * t)
        out[:, k] = np.fft.ifft(shifted)
    return u0.replace(np.fft.fft(out, axis=0))


# ---------------------------------------------------------------------------
# conserved quantities


def mass(u: SpectralField) -> float:
    """``int u^2`` by Parseval."""
    return float(np.sum(np.abs(u.coeffs) ** 2) * u.grid.spectral_cell)


def _power_integral(u: SpectralField, power: int) -> float:
    factor = max(1.0, power / 2.0)
    g = u.grid
    nx, ny = _even_ceil(g.Nx * factor), _even_ceil(g.Ny * factor)
    c = pad_spectrum(u.coeffs, (nx, ny))
    f = (np.fft.ifft2(c) / ((g.Lx / nx) * (TWO_PI / ny))).real
    return float(np.sum(f**power) * (g.Lx / nx) * (TWO_PI / ny))


def energy(u: SpectralField, k: int, sign: int) -> float:
    """Energy conserved by the equation with nonlinearity sign ``sign``.

    ``E = 1/2 int |grad u|^2 + sign / (k + 2) int u^(k+2)``, which equals
    ``1/2 int (|grad u|^2 - (2/(k+2)) s u^(k+2))`` with ``s = -sign``.
    """
    _check_sign(sign)
    XI, Q = u.grid.mesh()
    grad = float(np.sum((XI**2 + Q**2) * np.abs(u.coeffs) ** 2) * u.grid.spectral_cell)
    return 0.5 * grad + sign / (k + 2) * _power_integral(u, k + 2)


def energy_pm(u: SpectralField, k: int, pm: int) -> float:
    """``1/2 int (|grad u|^2 -+ (2/(k+2)) u^(k+2))`` with ``-`` for ``pm = +1``.

    This is :func:`energy` with ``sign = -pm``.
    """
    return energy(u, k, -pm)


def _check_sign(sign):
    if sign not in (1, -1):
        raise ContractViolation(f"sign must be +1 or -1, got {sign}")


# ---------------------------------------------------------------------------
# nonlinear solver


@dataclass(frozen=True)
class EvolutionConfig:
    """Parameters of one nonlinear solve.

    Parameters
    ----------
    k : int
        Nonlinearity degree (the equation contains ``u^(k+1)``).
    sign : int
        Sign in front of the nonlinearity.
    dt, T : float
        Step and final time.
    dealias_pad : float
        Zero-padding ratio used for the product; values below ``(k+2)/2``
        are rejected unless ``dealias`` is off.
    dealias : bool
        Set to ``False`` to form the nonlinearity on the unpadded grid.
    stride : int
        Record every ``stride``-th step.
    nonlinear_coeff : float
        Multiplies the nonlinearity; ``0`` gives the linear flow.
    """

    k: int = 1
    sign: int = 1
    dt: float = 1e-3
    T: float = 1.0
    dealias_pad: float | None = None
    dealias: bool = True
    stride: int = 100
    nonlinear_coeff: float = 1.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ContractViolation(f"k must be a positive integer, got {self.k}")
        _check_sign(self.sign)
        if not (self.dt > 0 and self.T > 0 and self.dt <= self.T):
            raise ContractViolation("need 0 < dt <= T")
        if self.dealias and self.dealias_pad is not None and self.dealias_pad < (self.k + 2) / 2:
            raise ContractViolation(f"dealias_pad must be >= (k+2)/2 = {(self.k + 2) / 2}")
        if self.stride < 1:
            raise ContractViolation("stride must be >= 1")

    @property
    def pad(self) -> float:
        if not self.dealias:
            return 1.0
        return self.dealias_pad if self.dealias_pad is not None else (self.k + 2) / 2


@dataclass
class ConservedReport:
    times: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    linf: list = field(default_factory=list)

    def drift(self, name: str) -> float:
        """Maximal relative deviation from the initial value."""
        v = np.asarray(getattr(self, name))
        ref = abs(v[0]) if v[0] != 0 else 1.0
        return float(np.max(np.abs(v - v[0])) / ref)

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "mass", "energy", "l2", "linf"])
            for row in zip(self.times, self.mass, self.energy, self.l2, self.linf):
                w.writerow([f"{x:.17g}" for x in row])
        return path


@dataclass
class Trajectory:
    fields: list
    report: ConservedReport

    @property
    def times(self):
        return self.report.times


class _Nonlinearity:
    """``i xi * FFT(u^(k+1))`` on the padded grid, truncated back.

    The Nyquist lines of the result are zeroed: differentiation does not
    commute with the real-symmetric projection there, and keeping them
    breaks the exact mass balance of the truncated system.
    """

    def __init__(self, grid: Grid, k: int, pad: float):
        self.g = grid
        self.k = k
        self.nx = _even_ceil(grid.Nx * pad)
        self.ny = _even_ceil(grid.Ny * pad)
        self.dx = grid.Lx / self.nx
        self.dy = TWO_PI / self.ny
        hx, hy = grid.Nx // 2, grid.Ny // 2
        # rows of the small grid inside the padded one (Nyquist row excluded)
        self.rows = np.r_[0:hx, self.nx - hx + 1:self.nx]
        self.small_rows = np.r_[0:hx, grid.Nx - hx + 1:grid.Nx]
        self.ixi = 1j * grid.xi[:, None]
        self.ixi_half = self.ixi[self.small_rows]

    def _power(self, u: np.ndarray) -> np.ndarray:
        out = u * u
        for _ in range(self.k - 1):
            out *= u
        return out

    def __call__(self, c: np.ndarray) -> np.ndarray:
        g = self.g
        hy = g.Ny // 2
        cp = np.zeros((self.nx, self.ny // 2 + 1), dtype=complex)
        cp[self.rows, :hy] = c[self.small_rows, :hy]
        u = np.fft.irfft2(cp, s=(self.nx, self.ny)) / (self.dx * self.dy)
        half = np.fft.rfft2(self._power(u))[self.rows, :hy] * (self.dx * self.dy)
        out = np.zeros(g.shape, dtype=complex)
        out[self.small_rows, :hy] = self.ixi_half * half
        # negative q from conjugate symmetry of the real product
        neg_rows = (-self.small_rows) % g.Nx
        out[neg_rows[:, None], (-np.arange(1, hy)) % g.Ny] = np.conj(out[self.small_rows, 1:hy])
        return out

def _neg(n: int) -> np.ndarray:
    return (-np.arange(n)) % n


def _nyquist_free(c: np.ndarray) -> np.ndarray:
    c = c.copy()
    c[c.shape[0] // 2, :] = 0
    c[:, c.shape[1] // 2] = 0
    return c


def gzk_solve(u0: SpectralField, cfg: EvolutionConfig) -> Trajectory:
    """Integrate the gZK equation with integrating-factor RK4.

    The Nyquist lines of ``u0`` are discarded; the state stays Nyquist-free.

    Raises
    ------
    BlowUpDetected
        If the state becomes non-finite; carries the last finite time.
    """
    if not u0.real:
        raise ContractViolation("initial datum must be flagged real-valued")
    g = u0.grid
    phi = g.phase_table()
    nl = _Nonlinearity(g, cfg.k, cfg.pad)
    coef = cfg.sign * cfg.nonlinear_coeff
    nsteps = int(round(cfg.T / cfg.dt))
    dt = cfg.T / nsteps

    def rhs(t, w):
        if coef == 0:
            return np.zeros_like(w)
        e = np.exp(1j * t * phi)
        return coef * np.conj(e) * nl(e * w)

    w = _nyquist_free(u0.coeffs)
    rep = ConservedReport()
    fields = []

    def record(t, w):
        c = w * np.exp(1j * t * phi)
        c = 0.5 * (c + conjugate_mirror(c))
        f = SpectralField(g, c, True)
        fields.append(f)
        rep.times.append(t)
        rep.mass.append(mass(f))
        rep.energy.append(energy(f, cfg.k, cfg.sign))
        rep.l2.append(np.sqrt(rep.mass[-1]))
        phys = np.fft.ifft2(pad_spectrum(c, (2 * g.Nx, 2 * g.Ny))).real * (4 * g.Nx * g.Ny) / (g.Lx * TWO_PI)
        rep.linf.append(float(np.max(np.abs(phys))))

    record(0.0, w)
    t = 0.0
    for n in range(1, nsteps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = rhs(t, w)
            k2 = rhs(t + dt / 2, w + dt / 2 * k1)
            k3 = rhs(t + dt / 2, w + dt / 2 * k2)
            k4 = rhs(t + dt, w + dt * k3)
            w_new = w + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(w_new)):
            raise BlowUpDetected(t)
        w = w_new
        t = n * dt
        if n % cfg.stride == 0 or n == nsteps:
            record(t, w)
    return Trajectory(fields, rep)
