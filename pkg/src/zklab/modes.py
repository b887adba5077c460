"""Exact space-time calculus for finite sums of time-localised plane waves.

A :class:`ModeField` on the box ``[0, Lx) x T`` is

    u(t, x, y) = sum_p a_p chi(t) exp(i (xi_p x + q_p y)) exp(i t (phi_p + sigma_p)),

with ``a_p = c_p / (Lx 2 pi)`` and ``chi`` the canonical time cutoff.  Its
space-time Fourier coefficients are ``c_p X_1(tau - phi_p - sigma_p)`` where
``X_j`` is the Fourier transform of ``chi^j``, so every Bourgain norm is a
one-dimensional integral per mode.  A product of ``k`` such fields is again
a sum of modes with profile ``chi^k``; Lebesgue and Bourgain norms of
products therefore reduce to sums over output frequencies of kernel values
``K_j(theta - theta') = int chi^j(t) exp(i (theta - theta') t) dt``.  No time
sampling is involved: large resonance values are integrated exactly.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernels, symbols
from .errors import ContractViolation, DegenerateInputError
from .grid import TWO_PI, Grid, SpaceTimeField
from .norms import canonical_cutoff

#: half-width of the kernel tables; every ``X_j`` is below 1e-12 of its peak beyond it
KERNEL_RANGE = 400.0
#: effective half-width used to cluster overlapping profiles
PROFILE_HALF_WIDTH = 60.0
_T_STEP = 1.0 / 512
_FFT_SIZE = 2**20
_G_STEP = 0.01
_G_RANGE = 2000.0
_QUAD_STEP = 0.05


# ---------------------------------------------------------------------------
# kernel tables


@dataclass(frozen=True)
class KernelTable:
    """``K_j(d) = int chi(t)^j exp(i d t) dt`` sampled on ``[-dmax, dmax]``.

    ``chi`` is even and real, so ``K_j`` is real and even and equals the
    Fourier transform ``X_j`` of ``chi^j``.
    """

    j: int
    delta: float
    values: np.ndarray
    dmax: float
    step: float

    def __call__(self, d) -> np.ndarray:
        """Linear interpolation in the table, zero outside ``[-dmax, dmax]``."""
        d = np.asarray(d, dtype=float)
        x = (d + self.dmax) / self.step
        inside = (x >= 0) & (x <= len(self.values) - 1)
        xc = np.where(inside, x, 0.0)
        i0 = np.minimum(xc.astype(np.int64), len(self.values) - 2)
        f = xc - i0
        out = self.values[i0] * (1.0 - f) + self.values[i0 + 1] * f
        return np.where(inside, out, 0.0)


@functools.lru_cache(maxsize=None)
def kernel_table(j: int, delta: float = 1.0) -> KernelTable:
    """Tabulate ``K_j`` by a zero-padded FFT of ``chi^j``."""
    if j < 1:
        raise ContractViolation("kernel power must be >= 1")
    dt = _T_STEP * delta
    m = int(round(2 * delta / dt))
    t = np.arange(-m, m + 1) * dt
    f = canonical_cutoff(t, delta) ** j
    n = _FFT_SIZE
    # K(d) = sum_t f(t) e^{i d t} dt;  on d_k = 2 pi k / (n dt)
    F = np.fft.ifft(f, n) * n * dt
    d = np.fft.fftfreq(n, dt) * TWO_PI
    F = F * np.exp(1j * d * t[0])
    order = np.argsort(d)
    d, F = d[order], F[order].real
    step = d[1] - d[0]
    keep = np.abs(d) <= KERNEL_RANGE + step
    d, F = d[keep], F[keep]
    # resample onto a symmetric lattice so that K(-d) = K(d) holds exactly
    nh = int(math.floor(KERNEL_RANGE / step))
    sym = np.arange(-nh, nh + 1) * step
    vals = np.interp(sym, d, F)
    vals = 0.5 * (vals + vals[::-1])
    return KernelTable(j, delta, vals, nh * step, step)


@functools.lru_cache(maxsize=None)
def _weighted_profile_table(j: int, b: float, delta: float = 1.0):
    """``G(theta) = int <sigma>^{2b} |X_j(sigma - theta)|^2 dsigma / 2pi`` on a lattice."""
    K = kernel_table(j, delta)
    s = np.arange(-KERNEL_RANGE, KERNEL_RANGE + _G_STEP / 2, _G_STEP)
    prof = K(s) ** 2
    theta = np.arange(-_G_RANGE, _G_RANGE + _G_STEP / 2, _G_STEP)
    ext = np.arange(-_G_RANGE - KERNEL_RANGE, _G_RANGE + KERNEL_RANGE + _G_STEP / 2, _G_STEP)
    w = (1.0 + ext**2) ** b
    n = len(w) + len(prof) - 1
    nfft = 1 << (n - 1).bit_length()
    conv = np.fft.irfft(np.fft.rfft(w, nfft) * np.fft.rfft(prof, nfft), nfft)[:n]
    start = len(prof) - 1
    G = conv[start: start + len(theta)] * _G_STEP / TWO_PI
    moments = (float(np.sum(prof) * _G_STEP / TWO_PI),
               float(np.sum(s**2 * prof) * _G_STEP / TWO_PI))
    return theta, G, moments


def weighted_profile(j: int, b: float, theta, delta: float = 1.0) -> np.ndarray:
    """``int <sigma>^{2b} |X_j(sigma - theta)|^2 dsigma / 2pi`` for each ``theta``.

    Tabulated for ``|theta| <= 2000``; beyond that a second-order expansion
    of the weight in ``sigma - theta`` is used (relative error below 1e-12).
    """
    th, G, (m0, m2) = _weighted_profile_table(j, float(b), delta)
    theta = np.asarray(theta, dtype=float)
    out = np.interp(theta, th, G)
    far = np.abs(theta) > _G_RANGE
    if np.any(far):
        x = theta[far]
        br2 = 1.0 + x * x
        out = np.array(out, dtype=float)
        out[far] = br2**b * (m0 + b * m2 / br2 + 2 * b * (b - 1) * x * x * m2 / br2**2)
    return out


# ---------------------------------------------------------------------------
# mode fields


@dataclass(frozen=True)
class ModeField:
    """Finite sum of modulated plane waves times the canonical cutoff.

    Parameters
    ----------
    Lx : float
        Period of the box in ``x``; ``xi = 2 pi j / Lx``.
    j, q : int arrays
        Lattice indices of the spatial frequencies (duplicates allowed).
    sigma : float array
        Modulation offsets ``sigma_p``: the time frequency is ``phi_p + sigma_p``.
    c : complex array
        Coefficients; ``c_p X_1(sigma - sigma_p)`` is the space-time transform.
    delta : float
        Plateau half-width of the cutoff.
    """

    Lx: float
    j: np.ndarray
    q: np.ndarray
    sigma: np.ndarray
    c: np.ndarray
    delta: float = 1.0

    def __post_init__(self):
        n = len(self.c)
        for name in ("j", "q", "sigma"):
            if len(getattr(self, name)) != n:
                raise ContractViolation(f"{name} must have one entry per mode")
        if not self.Lx > 0:
            raise ContractViolation("Lx must be positive")
        object.__setattr__(self, "j", np.asarray(self.j, dtype=np.int64))
        object.__setattr__(self, "q", np.asarray(self.q, dtype=np.int64))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        object.__setattr__(self, "c", np.asarray(self.c, dtype=complex))

    @property
    def xi(self) -> np.ndarray:
        return TWO_PI * self.j / self.Lx

    @property
    def box(self) -> float:
        return self.Lx * TWO_PI

    @property
    def amplitude(self) -> np.ndarray:
        return self.c / self.box

    @property
    def phase(self) -> np.ndarray:
        return symbols.phase(self.xi, self.q.astype(float))

    def __len__(self) -> int:
        return len(self.c)

    def scaled(self, a: complex) -> "ModeField":
        return ModeField(self.Lx, self.j, self.q, self.sigma, a * self.c, self.delta)

    def combined(self) -> "ModeField":
        """Merge duplicate ``(j, q, sigma)`` entries."""
        keys = np.stack([self.j, self.q, np.round(self.sigma * 1e9).astype(np.int64)], axis=1)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        c = np.zeros(len(uniq), dtype=complex)
        np.add.at(c, inv.ravel(), self.c)
        sig = np.zeros(len(uniq))
        sig[inv.ravel()] = self.sigma
        return ModeField(self.Lx, uniq[:, 0], uniq[:, 1], sig, c, self.delta)

    def is_zero(self) -> bool:
        return not np.any(self.c != 0)


def _check_box(fields: Sequence[ModeField]) -> None:
    L0, d0 = fields[0].Lx, fields[0].delta
    for f in fields[1:]:
        if f.Lx != L0 or f.delta != d0:
            raise ContractViolation("mode fields live on different boxes or cutoffs")


def spatial_weight(kind: str, s: float, xi, q) -> np.ndarray:
    """Symbol of ``J``, ``I``, ``Jx``, ``Ix``, ``Jy`` or ``Iy`` at order ``s``."""
    xi = np.asarray(xi, dtype=float)
    q = np.asarray(q, dtype=float)
    if kind == "J":
        return symbols.bracket(xi, q) ** s
    if kind == "I":
        r = np.sqrt(xi * xi + q * q)
    elif kind == "Jx":
        return symbols.bracket(xi) ** s
    elif kind == "Jy":
        return symbols.bracket(q) ** s
    elif kind == "Ix":
        r = np.abs(xi)
    elif kind == "Iy":
        r = np.abs(q)
    else:
        raise ContractViolation(f"unknown weight kind {kind!r}")
    if s == 0:
        return np.ones_like(r)
    with np.errstate(divide="ignore"):
        return r**s


def xsb_norm(u: ModeField, s: float, b: float, weight: Callable | None = None) -> float:
    """Exact ``X_{s,b}`` norm, optionally of ``w(D) u`` for a spatial symbol ``w``.

    ``||u||^2 = box * sum_p |a_p|^2 <p>^{2s} w_p^2 G_b(sigma_p)`` summed over
    distinct frequencies (coinciding modes are merged first).
    """
    u = u.combined()
    if len(u) == 0:
        return 0.0
    w = symbols.bracket(u.xi, u.q.astype(float)) ** (2 * s)
    if weight is not None:
        w = w * np.abs(weight(u.xi, u.q.astype(float))) ** 2
    # modes sharing a spatial frequency interfere in time
    total = 0.0
    keys = u.j * 1_000_003 + u.q
    order = np.argsort(keys, kind="stable")
    ks = keys[order]
    bounds = np.flatnonzero(np.diff(ks)) + 1
    for grp in np.split(order, bounds):
        total += w[grp[0]] * _profile_energy(u.c[grp], u.sigma[grp], 1, b, u.delta)
    return float(math.sqrt(total / u.box))


def l2_norm(u: ModeField) -> float:
    return xsb_norm(u, 0.0, 0.0)


def _profile_energy(z: np.ndarray, centres: np.ndarray, j: int, b: float, delta: float) -> float:
    """``int <sigma>^{2b} |sum_i z_i X_j(sigma - centres_i)|^2 dsigma / 2pi``."""
    if len(z) == 1:
        return float(abs(z[0]) ** 2 * weighted_profile(j, b, centres[:1], delta)[0])
    order = np.argsort(centres)
    z, centres = z[order], centres[order]
    cuts = np.flatnonzero(np.diff(centres) > 2 * PROFILE_HALF_WIDTH) + 1
    total = 0.0
    K = kernel_table(j, delta)
    for zz, cc in zip(np.split(z, cuts), np.split(centres, cuts)):
        if len(zz) == 1:
            total += abs(zz[0]) ** 2 * weighted_profile(j, b, cc, delta)[0]
            continue
        s = np.arange(cc[0] - PROFILE_HALF_WIDTH, cc[-1] + PROFILE_HALF_WIDTH + _QUAD_STEP, _QUAD_STEP)
        if len(zz) > _FFT_CLUSTER:
            amp = _cluster_amplitude(zz, cc, j, delta, s[0], len(s))
        else:
            amp = np.zeros(len(s), dtype=complex)
            for zi, ci in zip(zz, cc):
                lo = np.searchsorted(s, ci - PROFILE_HALF_WIDTH)
                hi = np.searchsorted(s, ci + PROFILE_HALF_WIDTH)
                amp[lo:hi] += zi * K(s[lo:hi] - ci)
        total += float(np.sum((1.0 + s * s) ** b * np.abs(amp) ** 2) * _QUAD_STEP / TWO_PI)
    return total


#: clusters with more entries than this use the FFT evaluation
_FFT_CLUSTER = 48


def _cluster_amplitude(z: np.ndarray, c: np.ndarray, j: int, delta: float,
                       s0: float, m: int) -> np.ndarray:
    """``sum_i z_i X_j(s - c_i)`` at ``s = s0 + n h`` for ``n < m``.

    ``X_j(theta) = int chi^j(t) exp(i theta t) dt`` is evaluated by the
    trapezoid rule on a lattice ``dt = 2 pi / (n_fft h)``.  For a smooth
    compactly supported integrand this is exact up to aliases
    ``X_j(theta + 2 pi k / dt)``.  The period exceeds the window by twice
    the table range, so the aliases are below the table's own truncation.
    """
    h = _QUAD_STEP
    nfft = 1 << int(math.ceil(math.log2(m + 2 * KERNEL_RANGE / h)))
    dt = TWO_PI / (nfft * h)
    kt = int(math.ceil(2 * delta / dt))
    k = np.arange(-kt, kt + 1)
    t = k * dt
    w = canonical_cutoff(t, delta) ** j * dt
    # Z(t) = sum_i z_i exp(-i (c_i - s0) t), in chunks to bound memory
    d = c - s0
    Z = np.zeros(len(t), dtype=complex)
    chunk = max(1, 2_000_000 // len(t))
    for a in range(0, len(z), chunk):
        Z += z[a:a + chunk] @ np.exp(-1j * np.outer(d[a:a + chunk], t))
    g = np.zeros(nfft, dtype=complex)
    g[k % nfft] = w * Z
    return np.fft.ifft(g)[:m] * nfft


# ---------------------------------------------------------------------------
# products


@dataclass
class ProductModes:
    """Modes of a product, grouped by output frequency.

    ``z`` are output amplitudes (physical normalisation, multipliers
    included), ``theta`` total time frequencies, ``P`` the output lattice
    indices; ``starts`` delimit the groups after sorting by ``(P, theta)``.
    """

    Lx: float
    jP: np.ndarray
    qP: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    starts: np.ndarray
    power: int
    delta: float


def product_modes(fields: Sequence[ModeField],
                  pair_symbol: Callable | None = None,
                  out_symbol: Callable | None = None,
                  max_terms: int = 20_000_000) -> ProductModes:
    """All combinations of one mode from each field, grouped by output frequency.

    ``pair_symbol(xi1, q1, xi2, q2)`` (bilinear only) multiplies each pair;
    ``out_symbol(xi, q)`` multiplies by a function of the output frequency.
    """
    fields = list(fields)
    _check_box(fields)
    count = 1
    for f in fields:
        count *= max(len(f), 1)
    if count > max_terms:
        raise ContractViolation(f"{count} mode combinations exceed the limit {max_terms}")
    if pair_symbol is not None and len(fields) != 2:
        raise ContractViolation("pair symbols need exactly two factors")
    Lx = fields[0].Lx
    jP = np.zeros(1, dtype=np.int64)
    qP = np.zeros(1, dtype=np.int64)
    z = np.ones(1, dtype=complex)
    theta = np.zeros(1)
    for f in fields:
        jP = (jP[:, None] + f.j[None, :]).ravel()
        qP = (qP[:, None] + f.q[None, :]).ravel()
        z = (z[:, None] * f.amplitude[None, :]).ravel()
        theta = (theta[:, None] + (f.phase + f.sigma)[None, :]).ravel()
    if pair_symbol is not None:
        a, b = fields
        m = pair_symbol(np.repeat(a.xi, len(b)), np.repeat(a.q, len(b)).astype(float),
                        np.tile(b.xi, len(a)), np.tile(b.q, len(a)).astype(float))
        z = z * m
    if out_symbol is not None:
        z = z * out_symbol(TWO_PI * jP / Lx, qP.astype(float))
    keep = z != 0
    jP, qP, z, theta = jP[keep], qP[keep], z[keep], theta[keep]
    order = np.lexsort((theta, qP, jP))
    jP, qP, z, theta = jP[order], qP[order], z[order], theta[order]
    if len(z):
        new = np.flatnonzero((np.diff(jP) != 0) | (np.diff(qP) != 0)) + 1
        starts = np.concatenate([[0], new, [len(z)]]).astype(np.int64)
    else:
        starts = np.zeros(1, dtype=np.int64)
    return ProductModes(Lx, jP, qP, z, theta, starts, len(fields), fields[0].delta)


def product_l2(pm: ProductModes) -> float:
    """``L^2_{txy}`` norm of the product: ``box * sum_P sum z z' K_{2k}(theta - theta')``."""
    if len(pm.z) == 0:
        return 0.0
    K = kernel_table(2 * pm.power, pm.delta)
    total = kernels.grouped_kernel_sum(pm.starts, np.ascontiguousarray(pm.z),
                                       np.ascontiguousarray(pm.theta), K.values, K.dmax, K.step)
    val = (pm.Lx * TWO_PI) * float(np.real(total))
    return math.sqrt(max(val, 0.0))


def product_xsb(pm: ProductModes, s: float, b: float) -> float:
    """``X_{s,b}`` norm of the product (output multipliers already in ``z``)."""
    if len(pm.z) == 0:
        return 0.0
    box = pm.Lx * TWO_PI
    xiP = TWO_PI * pm.jP / pm.Lx
    qP = pm.qP.astype(float)
    centres = pm.theta - symbols.phase(xiP, qP)
    weight = symbols.bracket(xiP, qP) ** (2 * s)
    # within a group the entries are sorted by theta, hence by centre; a
    # cluster ends at a group boundary or at a gap wider than two profiles
    n = len(pm.z)
    brk = np.zeros(n, dtype=bool)
    brk[0] = True
    brk[pm.starts[1:-1]] = True
    brk[1:] |= np.diff(centres) > 2 * PROFILE_HALF_WIDTH
    first = np.flatnonzero(brk)
    sizes = np.diff(np.append(first, n))
    single = first[sizes == 1]
    total = float(np.sum(weight[single] * np.abs(box * pm.z[single]) ** 2
                         * weighted_profile(pm.power, b, centres[single], pm.delta)))
    for a, m in zip(first[sizes > 1], sizes[sizes > 1]):
        e = a + m
        total += weight[a] * _profile_energy(box * pm.z[a:e], centres[a:e], pm.power, b,
                                             pm.delta)
    return float(math.sqrt(total / box))


def mp_pair_symbol(xi1, q1, xi2, q2):
    return np.sqrt(np.abs(symbols.dilated_norm_sq(xi1, q1) - symbols.dilated_norm_sq(xi2, q2)))


def mp_l2(u: ModeField, v: ModeField) -> float:
    """``||MP(u, v)||_{L^2_{txy}}`` exactly."""
    return product_l2(product_modes([u, v], pair_symbol=mp_pair_symbol))


def to_spacetime(u: ModeField, grid: Grid) -> SpaceTimeField:
    """Sample a mode field on a dense grid with the same ``Lx``.

    The result is exact up to truncation of the profiles to the ``sigma``
    window and their periodisation in time.
    """
    if abs(grid.Lx - u.Lx) > 1e-12 * u.Lx:
        raise ContractViolation("grid and mode field have different Lx")
    if np.any(np.abs(u.j) >= grid.Nx // 2) or np.any(np.abs(u.q) >= grid.Ny // 2):
        raise ContractViolation("mode field exceeds the grid band")
    K = kernel_table(1, u.delta)
    W = np.zeros((grid.Nt, grid.Nx, grid.Ny), dtype=complex)
    sig = grid.sigma
    for jj, qq, ss, cc in zip(u.j, u.q, u.sigma, u.c):
        W[:, jj % grid.Nx, qq % grid.Ny] += cc * K(sig - ss)
    return SpaceTimeField(grid, W, False)


def require_nonzero(*fields: ModeField) -> None:
    for f in fields:
        if f.is_zero():
            raise DegenerateInputError("a factor vanishes identically")


# ---------------------------------------------------------------------------
# mixed norms L^p_t L^r_x L^2_y


def conjugate(u: ModeField) -> ModeField:
    """Complex conjugate ``u-bar`` (modes ``-p`` with offsets ``-sigma``)."""
    return ModeField(u.Lx, -u.j, -u.q, -u.sigma, np.conj(u.c), u.delta)


def _y_energy_density(u: ModeField, p_eff: float, weight: Callable | None,
                      x_oversample: int):
    """Samples of ``g(t, x) = int |u(t, x, y)|^2 dy`` on a (t, x) lattice.

    A common Galilean shift ``x -> x + v t`` is removed first; it leaves
    every x-integral and x-supremum unchanged.  Within each ``q`` the
    remaining phases are referenced to their mean, which does not change
    ``|u_q|``.  The lattice resolves ``g^{p_eff/2}`` exactly in ``x`` and
    by a spectrally accurate trapezoid rule in ``t``.
    """
    u = u.combined()
    c = u.c.copy()
    if weight is not None:
        c = c * weight(u.xi, u.q.astype(float))
    a = c / u.box
    w2 = np.abs(a) ** 2
    if not np.any(w2 > 0):
        raise DegenerateInputError("field vanishes")
    xi = u.xi
    qf = u.q.astype(float)
    vel = 3 * xi * xi + qf * qf
    v = float(np.sum(w2 * vel) / np.sum(w2))
    theta = u.phase + u.sigma - v * xi
    groups = {}
    for i, q in enumerate(u.q):
        groups.setdefault(int(q), []).append(i)
    jspan, tspan = 0, 0.0
    for idx in groups.values():
        idx = np.asarray(idx)
        th = theta[idx]
        jspan = max(jspan, int(u.j[idx].max() - u.j[idx].min()))
        tspan = max(tspan, float(th.max() - th.min()))
    deg = max(1, int(math.ceil(p_eff / 2)))
    nx = 1 << int(math.ceil(math.log2(max(16, x_oversample * (2 * deg * jspan + 1)))))
    band = p_eff * tspan + 2 * KERNEL_RANGE
    dt = min(TWO_PI / band, u.delta / 32)
    kt = int(math.ceil(2 * u.delta / dt))
    t = np.arange(-kt, kt + 1) * dt
    chi2 = canonical_cutoff(t, u.delta) ** 2
    g = np.zeros((len(t), nx))
    for idx in groups.values():
        idx = np.asarray(idx)
        jr = u.j[idx] - u.j[idx].min()
        th = theta[idx] - theta[idx].mean()
        C = np.zeros((len(t), nx), dtype=complex)
        E = np.exp(1j * np.outer(t, th)) * a[idx][None, :]
        for col, jj in enumerate(jr):
            C[:, jj % nx] += E[:, col]
        env = np.fft.ifft(C, axis=1) * nx
        g += np.abs(env) ** 2
    g *= TWO_PI * chi2[:, None]
    return t, dt, u.Lx / nx, g


def mixed_norm_tx_y(u: ModeField, p: float, px: float | None = None,
                    weight: Callable | None = None, x_oversample: int = 2) -> float:
    """``||w(D) u||_{L^p_t L^px_x L^2_y}`` (``px`` defaults to ``p``).

    ``px = inf`` takes the supremum over an ``x`` lattice refined
    ``x_oversample`` times beyond exact resolution, so it is a lower
    estimate of the true supremum.
    """
    px = p if px is None else px
    p_eff = max(p, 2.0) if px == math.inf else px
    xo = x_oversample if px != math.inf else max(8, x_oversample)
    t, dt, dx, g = _y_energy_density(u, p_eff, weight, xo)
    if px == math.inf:
        inner = np.sqrt(np.max(g, axis=1))
    else:
        inner = (np.sum(g ** (px / 2.0), axis=1) * dx) ** (1.0 / px)
    return float((np.sum(inner**p) * dt) ** (1.0 / p))
