"""Empirical checks of the Strichartz-type inequalities.

Every estimate is identified by an :class:`EstimateId` string.  A quotient
``lhs / rhs`` is computed for one set of inputs, and :func:`scaling_sweep`
fits the growth of the ensemble maximum against the frequency scale ``N``.

Two evaluation routes are available:

* grid fields (:class:`~zklab.grid.SpectralField` and
  :class:`~zklab.grid.SpaceTimeField`), sampled in time on the window;
* :class:`~zklab.modes.ModeField` inputs for the product estimates, where
  all space-time integrals are exact sums of kernel values.

Conventions for the ``0+``/``1/2+``/``1/2-`` exponents: ``0+`` is ``eps``,
``1/2+`` is ``b``, ``1/2-`` is ``1/2 - eps``, ``3/8+`` is ``3/8 + eps`` and
``4-`` is ``4 - eps``.  Norms restricted to ``[-T, T]`` use ``T = 1``;
global-in-time norms of grid fields are taken over the whole window.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import modes, norms, symbols
from .errors import ContractViolation, DegenerateInputError
from .grid import (TWO_PI, Grid, SpaceTimeField, SpectralField, _even_ceil,
                   conjugate_mirror, pad_spectrum, spacetime_forward, time_profile)
from .modes import ModeField
from .norms import DEFAULT_B, DEFAULT_EPS, MultiplierWeight
from .projectors import is_dyadic, shell_weight

# ---------------------------------------------------------------------------
# estimate registry


@dataclass(frozen=True)
class EstimateDef:
    """Static description of one inequality.

    ``arity`` is the number of inputs (``None`` means ``k + 1``); ``inputs``
    is ``"data"`` for estimates on initial data and ``"spacetime"``
    otherwise; ``modes`` tells whether the exact mode route is available.
    """

    id: str
    arity: int | None
    inputs: str
    lhs: str
    rhs: str
    modes: bool = False


_DEFS = [
    EstimateDef("L4-main", 1, "spacetime", "L^4_txy", "X_{eps,b}"),
    EstimateDef("L4-old", 1, "spacetime", "L^4_txy", "X_{1/6,3/8}"),
    EstimateDef("L4-interp", 1, "spacetime", "L^{4-eps}_txy", "X_{eps,1/2-eps}"),
    EstimateDef("MP-bilinear", 2, "spacetime", "||MP(u,v)||_L2",
                "||Jy^{1/2+eps} u||_{X_{0,b}} ||v||_{X_{0,b}}", True),
    EstimateDef("MP-dual", 2, "spacetime", "||MP(u,v)||_L2",
                "||u||_{X_{1/2+eps,1/2-eps}} ||v||_{X_{eps,1/2-eps}}", True),
    EstimateDef("Schr-L4", 1, "data", "L^4_Txy of e^{tS}u0", "||Jx^{1/4} u0||_L2"),
    EstimateDef("Schr-L6", 1, "data", "L^6_Txy of e^{tS}u0", "||Jx^{1/3} Jy^eps u0||_L2"),
    EstimateDef("Schr-Lp", 1, "spacetime", "L^p_Txy",
                "||Jx^{1/2-1/p} Jy^{(3/2-3/p)eps} u||_{X_{0,(3/2-3/p)b}}"),
    EstimateDef("Airy-L6", 1, "data", "||Ix^{1/6} e^{tS}u0||_L6", "||Iy^{1/3} u0||_L2"),
    EstimateDef("Airy-endpoint", 1, "data", "||Ix^{1/4} e^{tS}v0||_{L4_t Linf_x L2_y}",
                "||v0||_L2", True),
    EstimateDef("Airy-Lp", 1, "spacetime", "||Ix^{1/4-1/(2p)} u||_Lp",
                "||Iy^{1/2-1/p} u||_{X_{0,(3/2-3/p)b}}"),
    EstimateDef("Airy-L6-L2y", 1, "spacetime", "||Ix^{1/6} u||_{L6_tx L2_y}", "X_{0,b}", True),
    EstimateDef("Airy-L4-L2y", 1, "spacetime", "||Ix^{1/8} u||_{L4_tx L2_y}", "X_{0,3/8+eps}", True),
    EstimateDef("Opt-Lp", 1, "spacetime", "L^p_Txy",
                "X_{1/3-2/(3p)+(1/2-1/p)eps,(3/2-3/p)b}"),
    EstimateDef("Opt-L6", 1, "spacetime", "L^6_Txy", "X_{2/9+eps,b}"),
    EstimateDef("L5-Schr", 1, "spacetime", "L^5_Txy", "||Jx^{1/5} u||_{X_{eps,b}}"),
    EstimateDef("L5-Airy", 1, "spacetime", "||Ix^{1/10} u||_L5", "||Iy^{1/5} u||_{X_{eps,b}}"),
    EstimateDef("L5-Opt", 1, "spacetime", "L^5_Txy", "X_{2/15+eps,b}"),
    EstimateDef("Bilin-refine", 2, "spacetime", "||Ix^{alpha/4} P^alpha(uv)||_L2",
                "X_{eps,b} x X_{eps,b}", True),
    EstimateDef("Bilin-refine-dual", 2, "spacetime", "||Ix^{alpha/4} P^alpha(uv)||_L2",
                "X_{eps,1/2-eps} x X_{eps,1/2-eps}", True),
    EstimateDef("Multi-gZK", None, "spacetime", "||d_x prod u_i||_{X_{s,-1/2+2eps}}",
                "prod ||u_i||_{X_{s,1/2+eps}}", True),
    EstimateDef("Tri-mZK", 3, "spacetime", "||d_x(u1 u2 u3)||_{X_{s,-1/2+2eps}}",
                "prod ||u_i||_{X_{s,1/2+eps}}", True),
]

#: registry of all estimates, keyed by id
ESTIMATES: dict[str, EstimateDef] = {d.id: d for d in _DEFS}


class EstimateId(str):
    """An estimate identifier validated against :data:`ESTIMATES`."""

    def __new__(cls, value: str):
        if value not in ESTIMATES:
            raise ContractViolation(f"unknown estimate id {value!r}")
        return super().__new__(cls, value)

    @property
    def definition(self) -> EstimateDef:
        return ESTIMATES[str(self)]


def arity(estimate: str, k: int | None = None) -> int:
    d = EstimateId(estimate).definition
    if d.arity is not None:
        return d.arity
    if k is None or int(k) != k or k < 2:
        raise ContractViolation("Multi-gZK needs an integer k >= 2")
    return int(k) + 1


def s0(k: int, refined: bool = True) -> float:
    """Regularity threshold of the multilinear estimate for ``u^(k+1)``.

    ``refined`` selects the lower threshold 3/8 for the cubic case.
    """
    if int(k) != k or k < 2:
        raise ContractViolation("k must be an integer >= 2")
    if k == 2:
        return 3.0 / 8.0 if refined else 0.5
    if k == 3:
        return 8.0 / 15.0
    return 1.0 - 16.0 / (9.0 * k)


@dataclass(frozen=True)
class Params:
    """Parameters shared by all estimates.

    Parameters
    ----------
    s : float, optional
        Regularity of the multilinear estimates.  For the unary estimates it
        overrides the Sobolev exponent of the right-hand side, which is how
        deliberately false variants are run.
    b, eps : float
        ``1/2+`` and ``0+`` exponents.
    p : float, optional
        Lebesgue exponent of the ``Lp`` families.
    alpha : float, optional
        Exponent of the bilinear refinement.
    k : int, optional
        Degree of the multilinear estimate.
    T : float
        Half-length of the time restriction.
    time_oversample : int
        Time refinement of grid-field quadratures.
    check : bool
        Enforce each estimate's hypotheses.
    """

    s: float | None = None
    b: float = DEFAULT_B
    eps: float = DEFAULT_EPS
    p: float | None = None
    alpha: float | None = None
    k: int | None = None
    T: float = 1.0
    time_oversample: int = 4
    check: bool = True


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ContractViolation(msg)


def check_hypotheses(estimate: str, params: Params) -> None:
    """Raise :class:`ContractViolation` when ``params`` leave the estimate's range."""
    e = str(EstimateId(estimate))
    P = params
    _require(P.eps > 0, "eps must be positive")
    if e in ("L4-main", "Schr-Lp", "Airy-Lp", "Opt-Lp", "Opt-L6", "L5-Schr", "L5-Airy",
             "L5-Opt", "Airy-L6-L2y", "Bilin-refine"):
        _require(P.b > 0.5, f"{e} needs b > 1/2, got {P.b}")
    if e in ("Schr-Lp", "Airy-Lp", "Opt-Lp"):
        _require(P.p is not None and 2 <= P.p <= 6, f"{e} needs p in [2, 6], got {P.p}")
    if e == "L4-interp":
        _require(P.eps < 2, "L4-interp needs eps < 2")
    if e == "MP-bilinear":
        _require(P.b > 0, "MP-bilinear needs b > 0")
    if e in ("MP-dual", "Bilin-refine-dual"):
        _require(P.eps < 0.5, f"{e} needs eps < 1/2")
    if e.startswith("Bilin"):
        _require(P.alpha is not None and 0 <= P.alpha <= 1,
                 f"{e} needs alpha in [0, 1], got {P.alpha}")
    if e == "Multi-gZK":
        _require(P.k is not None and int(P.k) == P.k and P.k >= 2, "Multi-gZK needs k >= 2")
    if e in ("Multi-gZK", "Tri-mZK"):
        _require(P.s is not None, f"{e} needs s")
        _require(P.eps < 0.25, f"{e} needs eps < 1/4")


def rhs_allowance(estimate: str, params: Params) -> float:
    """Growth exponent in ``N`` that the right-hand side's ``eps`` weights permit.

    This is the slope bound used by the sweeps before the 0.05 tolerance.
    """
    e = str(EstimateId(estimate))
    eps = params.eps
    if e in ("L4-main", "L4-interp", "L5-Schr", "L5-Airy", "L5-Opt", "Opt-L6", "Schr-L6"):
        return eps
    if e in ("Bilin-refine", "Bilin-refine-dual"):
        return eps
    if e == "Opt-Lp":
        return (0.5 - 1.0 / params.p) * eps
    if e == "Schr-Lp":
        return (1.5 - 3.0 / params.p) * eps
    return 0.0


# ---------------------------------------------------------------------------
# reports

REPORT_COLUMNS = ("estimate_id", "k", "s", "b", "eps", "p", "alpha", "N", "L", "seed",
                  "lhs", "rhs", "quotient")
SWEEP_COLUMNS = ("estimate_id", "k", "s", "b", "eps", "p", "alpha", "Ns", "samples",
                 "slope", "ci_lo", "ci_hi", "max_quotient", "allowance")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class ReportRow:
    """One evaluated quotient (``quotient = lhs / rhs``)."""

    estimate_id: str
    k: int | None
    s: float | None
    b: float
    eps: float
    p: float | None
    alpha: float | None
    N: int | None
    L: int | None
    seed: int | None
    lhs: float
    rhs: float
    quotient: float

    def as_list(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in REPORT_COLUMNS]


@dataclass
class EstimateReport:
    """Quotient rows of one estimate plus ensemble statistics."""

    estimate_id: str
    params: Params
    rows: list = field(default_factory=list)

    def quotients(self, N: int | None = None) -> np.ndarray:
        return np.array([r.quotient for r in self.rows if N is None or r.N == N])

    @property
    def max_quotient(self) -> float:
        return float(np.nanmax(self.quotients()))

    @property
    def median_quotient(self) -> float:
        return float(np.nanmedian(self.quotients()))

    @property
    def flagged(self) -> int:
        """Number of rows recorded as degenerate (``nan`` quotient)."""
        return int(np.count_nonzero(~np.isfinite(self.quotients())))

    def by_N(self) -> dict:
        """``{N: (max, median)}`` over the rows."""
        out = {}
        for N in sorted({r.N for r in self.rows if r.N is not None}):
            q = self.quotients(N)
            out[N] = (float(q.max()), float(np.median(q)))
        return out

    def write_csv(self, path: str | Path, append: bool = False) -> Path:
        path = Path(path)
        new = not (append and path.exists())
        with path.open("a" if append else "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new:
                w.writerow(REPORT_COLUMNS)
            for r in self.rows:
                w.writerow(r.as_list())
        return path


@dataclass(frozen=True)
class SweepResult:
    """Log-log fit of the per-``N`` maximal quotient."""

    estimate_id: str
    params: Params
    Ns: tuple
    samples: int
    slope: float
    ci_lo: float
    ci_hi: float
    max_quotient: float
    allowance: float
    report: EstimateReport

    def as_list(self) -> list[str]:
        P = self.params
        vals = [self.estimate_id, P.k, P.s, P.b, P.eps, P.p, P.alpha,
                " ".join(str(n) for n in self.Ns), self.samples, self.slope,
                self.ci_lo, self.ci_hi, self.max_quotient, self.allowance]
        return [_fmt(v) for v in vals]


def write_sweep_summary(results: Sequence[SweepResult], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in results:
            w.writerow(r.as_list())
    return path


# ---------------------------------------------------------------------------
# random grid fields

LAWS = ("gaussian-coefficients", "single-shell", "characteristic-concentrated")


@dataclass(frozen=True)
class RandomFieldSpec:
    """Law of a random band-limited space-time field.

    ``gaussian-coefficients`` uses the smooth weights of ``P_N Q_L``;
    ``single-shell`` the sharp plateau ``0.8 N <= |(xi, q)| <= 1.25 N`` in
    the dilated magnitude together with ``Q_L``; and
    ``characteristic-concentrated`` the smooth ``P_N`` with the sharp
    modulation band ``|sigma| <= L``.  Coefficients are complex Gaussians,
    conjugate-symmetrised so that the field is real.
    """

    N: int
    L: int = 1
    law: str = "gaussian-coefficients"
    seed: int = 0
    grid: Grid | None = None

    def __post_init__(self):
        if not is_dyadic(self.N) or not is_dyadic(self.L):
            raise ContractViolation("N and L must be dyadic")
        if self.law not in LAWS:
            raise ContractViolation(f"unknown law {self.law!r}")


def shell_grid(N: int, L: int = 1) -> Grid:
    """Smallest default grid that resolves the shell ``N`` and modulation ``L``.

    ``Lx = 2 pi``, ``Nx = 2N``, ``Ny = 4N`` (at least 8), ``Tw = 4 pi`` and
    ``Nt = 8 L``: the maximal resolved frequencies exceed ``8N/5`` in the
    dilated magnitude and ``8L/5`` in modulation.
    """
    n = max(8, 2 * int(N))
    return Grid(Lx=TWO_PI, Nx=n, Ny=max(8, 4 * int(N)), Tw=2 * TWO_PI, Nt=max(8, 8 * int(L)))


def _resolves(grid: Grid, N: int, L: int) -> bool:
    r = 1.6 * N
    xi_max = math.pi * grid.Nx / grid.Lx
    sig_max = math.pi * grid.Nt / grid.Tw
    return r < grid.Ny / 2 and r / math.sqrt(3) < xi_max and 1.6 * L <= sig_max + 1e-12


def _rng(*key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(abs(k)) for k in key]))


def _weights(spec: RandomFieldSpec, g: Grid) -> np.ndarray:
    XI, Q = g.mesh()
    r = symbols.dilated_norm(XI, Q)
    sig = g.sigma
    if spec.law == "single-shell":
        lo, hi = (0.0, 1.25) if spec.N == 1 else (0.8 * spec.N, 1.25 * spec.N)
        ws = ((r >= lo) & (r <= hi)).astype(float)
    else:
        ws = shell_weight(r, spec.N)
    if spec.law == "characteristic-concentrated":
        wt = (np.abs(sig) <= spec.L + 1e-12).astype(float)
    else:
        wt = shell_weight(sig, spec.L)
    return wt[:, None, None] * ws[None]


def _nyquist_zero(W: np.ndarray) -> np.ndarray:
    W = W.copy()
    W[W.shape[0] // 2] = 0
    W[:, W.shape[1] // 2] = 0
    W[:, :, W.shape[2] // 2] = 0
    return W


def sample_field(spec: RandomFieldSpec) -> SpaceTimeField:
    """Draw a real random field with the declared support.

    Raises
    ------
    ContractViolation
        When the grid does not resolve the shell or the modulation band.
    """
    g = spec.grid if spec.grid is not None else shell_grid(spec.N, spec.L)
    if not _resolves(g, spec.N, spec.L):
        raise ContractViolation(f"grid does not resolve shell N={spec.N}, L={spec.L}")
    rng = _rng(spec.seed, spec.N, spec.L, LAWS.index(spec.law))
    shape = (g.Nt, g.Nx, g.Ny)
    Z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    W = _nyquist_zero(Z * _weights(spec, g))
    W = 0.5 * (W + conjugate_mirror(W))
    U = SpaceTimeField(g, W, True)
    n = U.l2_norm()
    if n == 0:
        raise ContractViolation("the declared support contains no grid point")
    return U.replace(W / n)


def sample_data(N: int, seed: int = 0, grid: Grid | None = None,
                law: str = "gaussian-coefficients") -> SpectralField:
    """Random real initial datum in the shell ``N`` (smooth or sharp shell)."""
    g = grid if grid is not None else shell_grid(N)
    if not _resolves(g, N, 1):
        raise ContractViolation(f"grid does not resolve shell N={N}")
    rng = _rng(seed, N, 7, LAWS.index(law))
    XI, Q = g.mesh()
    r = symbols.dilated_norm(XI, Q)
    if law == "single-shell":
        lo, hi = (0.0, 1.25) if N == 1 else (0.8 * N, 1.25 * N)
        w = ((r >= lo) & (r <= hi)).astype(float)
    else:
        w = shell_weight(r, N)
    Z = (rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)) / math.sqrt(2)
    c = Z * w
    c[g.Nx // 2] = 0
    c[:, g.Ny // 2] = 0
    c = 0.5 * (c + conjugate_mirror(c))
    u = SpectralField(g, c, True)
    return u * (1.0 / u.l2_norm())


def free_evolution(u0: SpectralField, grid: Grid | None = None) -> SpaceTimeField:
    """The free solution ``e^{tS} u0`` as a space-time field on the window.

    In the modulation frame it is a single ``sigma = 0`` slice.
    """
    g = grid if grid is not None else u0.grid
    if g.shape != u0.grid.shape or g.Lx != u0.grid.Lx:
        raise ContractViolation("grid does not match the datum")
    W = np.zeros((g.Nt, g.Nx, g.Ny), dtype=complex)
    W[0] = g.Tw * u0.coeffs
    return SpaceTimeField(g, W, u0.real)


# ---------------------------------------------------------------------------
# random mode fields

MODE_LAWS = ("packet", "random-phase")


@dataclass(frozen=True)
class ModeFieldSpec:
    """Law of a random :class:`~zklab.modes.ModeField`.

    ``packet``: ``packets`` coherent wave packets, each a contiguous window
    of ``modes`` lattice frequencies in ``xi`` at fixed ``q``, with a
    Gaussian envelope, a random global phase and one common modulation
    offset drawn from ``[-L, L]``.  ``random-phase``: ``modes`` independent
    frequencies with complex Gaussian coefficients and independent offsets.
    Centres are uniform in the sharp shell ``0.8 N <= |(xi, q)| <= 1.25 N``
    (``|(xi, q)| <= 1.25`` for ``N = 1``) and must satisfy ``region``.
    ``real`` adds the conjugate mirror of every mode.
    """

    N: int
    Lx: float
    law: str = "packet"
    seed: int = 0
    L: float = 1.0
    modes: int = 16
    packets: int = 1
    real: bool = False
    region: Callable | None = None

    def __post_init__(self):
        if not is_dyadic(self.N):
            raise ContractViolation("N must be dyadic")
        if self.law not in MODE_LAWS:
            raise ContractViolation(f"unknown mode law {self.law!r}")
        if self.modes < 1 or self.packets < 1:
            raise ContractViolation("need at least one mode and one packet")


def real_line_box(N: int, delta: float = 1.0, minimum: float = 64.0) -> float:
    """Box length that emulates ``x in R`` for interactions at frequency ``N``.

    Relative group velocities at scale ``N`` are at most about
    ``(8N/5)^2``; over the time support ``4 delta`` of the cutoff, wave
    packets then separate by less than half of ``Lx``.
    """
    return max(minimum, 2.0 * 4.0 * delta * (1.6 * N) ** 2)


def _shell_point(rng, N: int, Lx: float, region, tries: int = 10_000):
    lo, hi = (0.0, 1.25) if N == 1 else (0.8 * N, 1.25 * N)
    qmax = int(math.floor(hi))
    jmax = int(math.floor(hi / math.sqrt(3) * Lx / TWO_PI))
    for _ in range(tries):
        q = int(rng.integers(-qmax, qmax + 1))
        j = int(rng.integers(-jmax, jmax + 1))
        xi = TWO_PI * j / Lx
        r = math.sqrt(3 * xi * xi + q * q)
        if lo <= r <= hi and (region is None or region(xi, q)):
            return j, q
    raise ContractViolation(f"no admissible frequency found in shell N={N}")


def sample_modes(spec: ModeFieldSpec) -> ModeField:
    """Draw a random mode field (reproducible from ``spec.seed``)."""
    rng = _rng(spec.seed, spec.N, int(spec.Lx), MODE_LAWS.index(spec.law), spec.modes)
    js, qs, sig, cs = [], [], [], []
    if spec.law == "packet":
        m = spec.modes
        off = np.arange(m) - (m - 1) / 2.0
        env = np.exp(-(off / max(m / 4.0, 0.5)) ** 2)
        for _ in range(spec.packets):
            j0, q0 = _shell_point(rng, spec.N, spec.Lx, spec.region)
            phase = np.exp(1j * rng.uniform(0, TWO_PI))
            s0_ = rng.uniform(-spec.L, spec.L)
            js.append(j0 + np.arange(m, dtype=np.int64) - m // 2)
            qs.append(np.full(m, q0))
            sig.append(np.full(m, s0_))
            cs.append(env * phase)
    else:
        for _ in range(spec.modes):
            j, q = _shell_point(rng, spec.N, spec.Lx, spec.region)
            js.append([j])
            qs.append([q])
            sig.append([rng.uniform(-spec.L, spec.L)])
            cs.append([(rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2)])
    j = np.concatenate(js)
    q = np.concatenate(qs)
    s = np.concatenate(sig)
    c = np.concatenate(cs).astype(complex)
    if spec.real:
        j, q, s, c = (np.concatenate([j, -j]), np.concatenate([q, -q]),
                      np.concatenate([s, -s]), np.concatenate([c, np.conj(c)]))
    u = ModeField(spec.Lx, j, q, s, c)
    return u.scaled(1.0 / modes.l2_norm(u))


def transversal_pair(N: int, alpha: float, seed: int = 0, Lx: float | None = None,
                     modes_per_packet: int = 16, packets: int = 2, L: float = 1.0,
                     kappa: float = 1.0, kappa2: float = 1.0, tries: int = 1000):
    """Two packet fields at shell ``N`` whose product lands in the ``P^alpha`` region.

    Packet centres have ``xi > 0``; a pair of centres is accepted when the
    sum frequency satisfies ``|3 xi^2 - q^2| >= 2 kappa xi^alpha`` and
    ``xi >= 2 kappa2``, so the whole packet product lies in the region.
    """
    Lx = Lx if Lx is not None else real_line_box(N)
    rng = _rng(seed, N, 11)
    pos = lambda xi, q: xi > 0  # noqa: E731
    for _ in range(tries):
        s1, s2 = (int(x) for x in rng.integers(0, 2**31, size=2))
        u = sample_modes(ModeFieldSpec(N, Lx, "packet", s1, L, modes_per_packet, packets,
                                       region=pos))
        v = sample_modes(ModeFieldSpec(N, Lx, "packet", s2, L, modes_per_packet, packets,
                                       region=pos))
        xi = TWO_PI * (np.mean(u.j) + np.mean(v.j)) / Lx
        ok = True
        for a in _packet_centres(u):
            for b in _packet_centres(v):
                X = TWO_PI * (a[0] + b[0]) / Lx
                Qs = a[1] + b[1]
                if not (abs(3 * X * X - Qs * Qs) >= 2 * kappa * X**alpha and X >= 2 * kappa2):
                    ok = False
        if ok and xi > 0:
            return u, v
    raise ContractViolation(f"no transversal pair found at N={N}")


def comoving_pair(N: int, alpha: float, seed: int = 0, modes_per_packet: int = 24,
                  width: float = 1.0, L: float = 1.0, kappa: float = 1.0,
                  kappa2: float = 1.0):
    """Two packets at one centre of shell ``N`` with ``xi``-width ``width / sqrt(N)``.

    Both factors travel with the same group velocity, and the width keeps
    each packet coherent over the cutoff's support while its dispersion
    fits in the box ``Lx = 2 pi modes sqrt(N) / width``.  This is the
    configuration in which the ``|xi|^{alpha/4}`` gain of the refinement is
    sharp.  The doubled centre satisfies the ``P^alpha`` predicate with
    factor-2 margin.
    """
    M = int(modes_per_packet)
    W = width / math.sqrt(N)
    Lx = TWO_PI * M / W
    rng = _rng(seed, N, 13, M)

    def region(xi, q):
        X = 2 * xi
        return X >= 2 * kappa2 and abs(3 * X * X - 4 * q * q) >= 2 * kappa * X**alpha

    j0, q0 = _shell_point(rng, N, Lx, region)
    off = np.arange(M, dtype=np.int64) - M // 2
    env = np.exp(-(off / (M / 4.0)) ** 2)
    out = []
    for _ in range(2):
        c = env * np.exp(1j * rng.uniform(0, TWO_PI))
        f = ModeField(Lx, j0 + off, np.full(M, q0), np.full(M, rng.uniform(-L, L)), c)
        out.append(f.scaled(1.0 / modes.l2_norm(f)))
    return tuple(out)


def resonant_tuple(N: int, k: int, seed: int = 0, modes_per_packet: int = 6,
                   width: float = 1.0, L: float = 1.0):
    """``k + 1`` co-moving packets whose product has a resonant output.

    ``k // 2 + 1`` packets sit at a centre ``p0`` of shell ``N`` and the
    remaining ones at ``-p0``, so the sum frequency ``p0`` (``0`` for odd
    ``k``) is reached with zero resonance.  Widths and box follow
    :func:`comoving_pair`.
    """
    M = int(modes_per_packet)
    Lx = TWO_PI * M * math.sqrt(N) / width
    rng = _rng(seed, N, 17, k, M)
    j0, q0 = _shell_point(rng, N, Lx, lambda xi, q: xi > 0)
    off = np.arange(M, dtype=np.int64) - M // 2
    env = np.exp(-(off / (M / 4.0)) ** 2)
    out = []
    n_plus = k // 2 + 1
    for i in range(k + 1):
        c = env * np.exp(1j * rng.uniform(0, TWO_PI))
        sig = np.full(M, rng.uniform(-L, L))
        if i < n_plus:
            f = ModeField(Lx, j0 + off, np.full(M, q0), sig, c)
        else:
            f = ModeField(Lx, -(j0 + off), np.full(M, -q0), -sig, np.conj(c))
        out.append(f.scaled(1.0 / modes.l2_norm(f)))
    return out


def knapp_packet(N: int, seed: int = 0, modes_per_packet: int = 24, width: float = 1.0,
                 delta: float = 1.0, L: float = 1.0) -> ModeField:
    """Single-``q`` packet at shell ``N`` with ``xi``-width ``width / sqrt(N)``.

    At ``width ~ 1`` the packet stays coherent for a unit time, which is
    the extremal shape for the Airy-type estimates with an ``L^2_y`` inner
    norm.  The box ``Lx = 2 pi modes sqrt(N) / width`` contains the
    dispersive spreading over ``|t| <= 2 delta`` when
    ``modes_per_packet >= 4 delta``.
    """
    M = int(modes_per_packet)
    Lx = TWO_PI * M * math.sqrt(N) / width
    rng = _rng(seed, N, 19, M)
    j0, q0 = _shell_point(rng, N, Lx, None)
    off = np.arange(M, dtype=np.int64) - M // 2
    env = np.exp(-(off / (M / 4.0)) ** 2)
    c = env * np.exp(1j * rng.uniform(0, TWO_PI))
    f = ModeField(Lx, j0 + off, np.full(M, q0), np.full(M, rng.uniform(-L, L)), c, delta)
    return f.scaled(1.0 / modes.l2_norm(f))


def _packet_centres(u: ModeField):
    keys = {}
    for j, q in zip(u.j, u.q):
        keys.setdefault(int(q), []).append(int(j))
    return [(float(np.mean(v)), q) for q, v in keys.items()]


# ---------------------------------------------------------------------------
# quotient recipes


def _w(kind, s):
    return MultiplierWeight(kind, s)


def _lp(U: SpaceTimeField, p: float, P: Params, restricted: bool, weights=()) -> float:
    if weights:
        U = norms.apply_weight(U, list(weights))
    return norms.lp_spacetime(U, ((p, "txy"),), P.T if restricted else None, P.time_oversample)


def _data_l2(u0: SpectralField, weights=()) -> float:
    m = np.ones(u0.grid.shape)
    for w in weights:
        m = m * w.multiplier(u0.grid)
    return float(np.sqrt(np.sum(np.abs(m * u0.coeffs) ** 2) * u0.grid.spectral_cell))


def _rhs_s(P: Params, default: float) -> float:
    return default if P.s is None else P.s


def _unary(e: str, U, P: Params) -> tuple[float, float]:
    b, eps = P.b, P.eps
    if e == "L4-main":
        return _lp(U, 4, P, False), norms.xsb_norm(U, _rhs_s(P, eps), b)
    if e == "L4-old":
        return _lp(U, 4, P, False), norms.xsb_norm(U, _rhs_s(P, 1 / 6), 3 / 8)
    if e == "L4-interp":
        return _lp(U, 4 - eps, P, False), norms.xsb_norm(U, _rhs_s(P, eps), 0.5 - eps)
    if e == "Schr-Lp":
        p = P.p
        wts = [_w("Jx", 0.5 - 1 / p), _w("Jy", (1.5 - 3 / p) * eps)]
        return _lp(U, p, P, True), norms.xsb_norm(U, _rhs_s(P, 0.0), (1.5 - 3 / p) * b, wts)
    if e == "Airy-Lp":
        p = P.p
        return (_lp(U, p, P, False, [_w("Ix", 0.25 - 0.5 / p)]),
                norms.xsb_norm(U, _rhs_s(P, 0.0), (1.5 - 3 / p) * b, [_w("Iy", 0.5 - 1 / p)]))
    if isinstance(U, ModeField):
        return _unary_modes(e, U, P)
    if e == "Airy-L6-L2y":
        V = norms.apply_weight(U, _w("Ix", 1 / 6))
        lhs = norms.lp_spacetime(V, ((6, "tx"), (2, "y")), None, P.time_oversample)
        return lhs, norms.xsb_norm(U, _rhs_s(P, 0.0), b)
    if e == "Airy-L4-L2y":
        V = norms.apply_weight(U, _w("Ix", 1 / 8))
        lhs = norms.lp_spacetime(V, ((4, "tx"), (2, "y")), None, P.time_oversample)
        return lhs, norms.xsb_norm(U, _rhs_s(P, 0.0), 3 / 8 + eps)
    if e == "Opt-Lp":
        p = P.p
        s = 1 / 3 - 2 / (3 * p) + (0.5 - 1 / p) * eps
        return _lp(U, p, P, True), norms.xsb_norm(U, _rhs_s(P, s), (1.5 - 3 / p) * b)
    if e == "Opt-L6":
        return _lp(U, 6, P, True), norms.xsb_norm(U, _rhs_s(P, 2 / 9 + eps), b)
    if e == "L5-Schr":
        return _lp(U, 5, P, True), norms.xsb_norm(U, _rhs_s(P, eps), b, [_w("Jx", 0.2)])
    if e == "L5-Airy":
        return (_lp(U, 5, P, False, [_w("Ix", 0.1)]),
                norms.xsb_norm(U, _rhs_s(P, eps), b, [_w("Iy", 0.2)]))
    if e == "L5-Opt":
        return _lp(U, 5, P, True), norms.xsb_norm(U, _rhs_s(P, 2 / 15 + eps), b)
    raise ContractViolation(f"{e} is not a unary space-time estimate")


def _ix(s: float) -> Callable:
    return lambda xi, q: modes.spatial_weight("Ix", s, xi, q)


def _unary_modes(e: str, u: ModeField, P: Params) -> tuple[float, float]:
    if e == "Airy-L6-L2y":
        return modes.mixed_norm_tx_y(u, 6, weight=_ix(1 / 6)), modes.xsb_norm(u, _rhs_s(P, 0.0), P.b)
    if e == "Airy-L4-L2y":
        return (modes.mixed_norm_tx_y(u, 4, weight=_ix(1 / 8)),
                modes.xsb_norm(u, _rhs_s(P, 0.0), 3 / 8 + P.eps))
    raise ContractViolation(f"{e} is evaluated on grid fields only")


def mode_free_evolution(v0: ModeField) -> ModeField:
    """Free solution of the data ``v0 = sum_p a_p e^{i p.x}`` on ``|t| <= delta``.

    Offsets are dropped and the cutoff plateau ``v0.delta`` becomes the
    time window, so global-in-time norms are truncated to ``|t| <= 2 delta``.
    """
    return ModeField(v0.Lx, v0.j, v0.q, np.zeros(len(v0)), v0.c, v0.delta)


def _linear(e: str, u0, P: Params) -> tuple[float, float]:
    if isinstance(u0, ModeField):
        if e != "Airy-endpoint":
            raise ContractViolation(f"{e} is evaluated on grid fields only")
        v = mode_free_evolution(u0).combined()
        rhs = float(np.sqrt(np.sum(np.abs(v.c) ** 2) / v.box))
        return modes.mixed_norm_tx_y(v, 4, math.inf, weight=_ix(0.25)), rhs
    U = free_evolution(u0)
    if e == "Schr-L4":
        return _lp(U, 4, P, True), _data_l2(u0, [_w("Jx", 0.25)])
    if e == "Schr-L6":
        return _lp(U, 6, P, True), _data_l2(u0, [_w("Jx", 1 / 3), _w("Jy", P.eps)])
    if e == "Airy-L6":
        return _lp(U, 6, P, False, [_w("Ix", 1 / 6)]), _data_l2(u0, [_w("Iy", 1 / 3)])
    if e == "Airy-endpoint":
        V = norms.apply_weight(U, _w("Ix", 0.25))
        lhs = norms.lp_spacetime(V, ((4, "t"), (math.inf, "x"), (2, "y")), None,
                                 P.time_oversample)
        return lhs, _data_l2(u0)
    raise ContractViolation(f"{e} is not a linear estimate")


def _bilinear_rhs(e: str, u, v, P: Params) -> float:
    b, eps = P.b, P.eps
    half_minus = 0.5 - eps
    if isinstance(u, ModeField):
        X = lambda f, s, bb, w=None: modes.xsb_norm(f, s, bb, w)  # noqa: E731
        jy = lambda xi, q: modes.spatial_weight("Jy", 0.5 + eps, xi, q)  # noqa: E731
    else:
        X = lambda f, s, bb, w=None: norms.xsb_norm(f, s, bb, w or ())  # noqa: E731
        jy = [_w("Jy", 0.5 + eps)]
    if e == "MP-bilinear":
        return X(u, 0.0, b, jy) * X(v, 0.0, b)
    if e == "MP-dual":
        return X(u, 0.5 + eps, half_minus) * X(v, eps, half_minus)
    if e == "Bilin-refine":
        return X(u, eps, b) * X(v, eps, b)
    if e == "Bilin-refine-dual":
        return X(u, eps, half_minus) * X(v, eps, half_minus)
    raise ContractViolation(f"{e} is not bilinear")


def refinement_symbol(alpha: float, kappa: float = 1.0, kappa2: float = 1.0) -> Callable:
    """Output symbol ``|xi|^{alpha/4}`` times the indicator of the ``P^alpha`` region."""
    def sym(xi, q):
        xi = np.asarray(xi, dtype=float)
        q = np.asarray(q, dtype=float)
        ax = np.abs(xi)
        mask = (np.abs(3 * xi * xi - q * q) >= kappa * ax**alpha) & (ax >= kappa2)
        return np.where(mask, ax ** (alpha / 4.0), 0.0)
    return sym


def _bilinear_lhs(e: str, u, v, P: Params) -> float:
    if e.startswith("MP"):
        if isinstance(u, ModeField):
            return modes.mp_l2(u, v)
        return norms.mp_l2_norm(u, v, P.time_oversample)
    sym = refinement_symbol(P.alpha)
    if isinstance(u, ModeField):
        return modes.product_l2(modes.product_modes([u, v], out_symbol=sym))
    return dense_product_l2([u, v], sym, P.time_oversample)


def _product_grid(g: Grid, n: int, pad: float | None) -> Grid:
    f = float(n) if pad is None else float(pad)
    return g.with_(Nx=_even_ceil(g.Nx * f), Ny=_even_ceil(g.Ny * f))


def _band(U: SpaceTimeField) -> tuple[int, int]:
    g = U.grid
    supp = np.any(np.abs(U.coeffs) > 0, axis=0)
    if not supp.any():
        return 0, 0
    j = np.fft.fftfreq(g.Nx, 1.0 / g.Nx).round().astype(int)
    ii, kk = np.nonzero(supp)
    return int(np.max(np.abs(j[ii]))), int(np.max(np.abs(g.q[kk])))


def _check_alias(fields: Sequence[SpaceTimeField], g2: Grid) -> None:
    bx = sum(_band(U)[0] for U in fields)
    by = sum(_band(U)[1] for U in fields)
    if bx >= g2.Nx // 2 or by >= g2.Ny // 2:
        raise ContractViolation(
            f"product band ({bx}, {by}) exceeds the product grid ({g2.Nx}, {g2.Ny}): aliasing")


def _product_samples(fields: Sequence[SpaceTimeField], g2: Grid, oversample: int):
    """Spatial coefficients of the product at the refined time samples."""
    g = fields[0].grid
    prod = None
    for U in fields:
        t, C = time_profile(U, oversample)
        C2 = pad_spectrum(C, (C.shape[0], g2.Nx, g2.Ny))
        f = np.fft.ifft2(C2, axes=(1, 2)) / (g2.dx * g2.dy)
        prod = f if prod is None else prod * f
    out = np.fft.fft2(prod, axes=(1, 2)) * (g2.dx * g2.dy)
    return t, out


def dense_product_l2(fields: Sequence[SpaceTimeField], out_symbol: Callable | None = None,
                     time_oversample: int = 4, pad: float | None = None) -> float:
    """``||m(D) prod U_i||_{L^2_txy}`` by physical products at time samples.

    The product is formed on a grid enlarged by ``pad`` (default: the
    number of factors), which holds the full product band.

    Raises
    ------
    ContractViolation
        When the product band exceeds the enlarged grid.
    """
    g = fields[0].grid
    for U in fields[1:]:
        if U.grid != g:
            raise ContractViolation("factors must share a grid")
    g2 = _product_grid(g, len(fields), pad)
    _check_alias(fields, g2)
    _, C = _product_samples(fields, g2, time_oversample)
    if out_symbol is not None:
        XI, Q = g2.mesh()
        C = C * out_symbol(XI, Q)[None]
    dt = g.Tw / C.shape[0]
    return float(np.sqrt(np.sum(np.abs(C) ** 2) * g2.spectral_cell * dt))


def dense_multilinear_xsb(fields: Sequence[SpaceTimeField], s: float, b: float,
                          time_oversample: int = 2, pad: float | None = None) -> float:
    """``||d_x prod U_i||_{X_{s,b}}`` on the grid.

    The product is formed in physical space on the enlarged grid at refined
    time samples, transformed back to the modulation frame, differentiated
    and weighted in frequency.
    """
    g = fields[0].grid
    for U in fields[1:]:
        if U.grid != g:
            raise ContractViolation("factors must share a grid")
    g2 = _product_grid(g, len(fields), pad)
    _check_alias(fields, g2)
    _, C = _product_samples(fields, g2, time_oversample)
    g3 = g2.with_(Nt=C.shape[0])
    XI, _ = g3.mesh()
    W = spacetime_forward(C * (1j * XI)[None], g3)
    return norms.xsb_norm(W, s, b)


def _multilinear(fields, s: float, eps: float, P: Params) -> tuple[float, float]:
    b_out = -0.5 + 2 * eps
    b_in = 0.5 + eps
    if isinstance(fields[0], ModeField):
        modes.require_nonzero(*fields)
        pm = modes.product_modes(fields, out_symbol=lambda xi, q: 1j * xi)
        lhs = modes.product_xsb(pm, s, b_out)
        rhs = float(np.prod([modes.xsb_norm(f, s, b_in) for f in fields]))
    else:
        for f in fields:
            if not np.any(f.coeffs != 0):
                raise DegenerateInputError("a factor vanishes identically")
        lhs = dense_multilinear_xsb(fields, s, b_out, P.time_oversample)
        rhs = float(np.prod([norms.xsb_norm(f, s, b_in) for f in fields]))
    return lhs, rhs


def _check_inputs(e: str, inputs: Sequence, P: Params) -> None:
    d = ESTIMATES[e]
    n = arity(e, P.k)
    if len(inputs) != n:
        raise ContractViolation(f"{e} takes {n} inputs, got {len(inputs)}")
    mode_inputs = [isinstance(x, ModeField) for x in inputs]
    if any(mode_inputs):
        if not all(mode_inputs):
            raise ContractViolation("do not mix mode fields and grid fields")
        if not d.modes:
            raise ContractViolation(f"{e} is evaluated on grid fields only")
        return
    want = SpectralField if d.inputs == "data" else SpaceTimeField
    for x in inputs:
        if not isinstance(x, want):
            raise ContractViolation(f"{e} expects {want.__name__} inputs")


def _is_zero(x) -> bool:
    if isinstance(x, ModeField):
        return x.is_zero()
    return not np.any(x.coeffs != 0)


def quotient(estimate: str, inputs, params: Params | None = None, *, N: int | None = None,
             L: int | None = None, seed: int | None = None) -> ReportRow:
    """Evaluate ``lhs / rhs`` of one estimate.

    Parameters
    ----------
    estimate : str
        An :data:`ESTIMATES` key.
    inputs : field or sequence of fields
        ``arity(estimate)`` inputs; product estimates also accept
        :class:`~zklab.modes.ModeField` inputs.
    params : Params
    N, L, seed : optional
        Provenance recorded in the row.

    Raises
    ------
    DegenerateInputError
        When the right-hand side vanishes.
    """
    e = str(EstimateId(estimate))
    P = params if params is not None else Params()
    if e == "Tri-mZK":
        P = replace(P, k=2)
    if not isinstance(inputs, (list, tuple)):
        inputs = [inputs]
    inputs = list(inputs)
    if P.check:
        check_hypotheses(e, P)
    _check_inputs(e, inputs, P)
    if any(_is_zero(x) for x in inputs):
        raise DegenerateInputError("an input vanishes identically")
    d = ESTIMATES[e]
    if d.arity == 1 and d.inputs == "data":
        lhs, rhs = _linear(e, inputs[0], P)
    elif d.arity == 1:
        lhs, rhs = _unary(e, inputs[0], P)
    elif d.arity == 2:
        rhs = _bilinear_rhs(e, inputs[0], inputs[1], P)
        lhs = _bilinear_lhs(e, inputs[0], inputs[1], P) if rhs > 0 else 0.0
    else:
        lhs, rhs = _multilinear(inputs, P.s, P.eps, P)
    if not rhs > 0 or not math.isfinite(rhs):
        raise DegenerateInputError(f"{e}: right-hand side is {rhs}")
    return ReportRow(e, P.k, P.s, P.b, P.eps, P.p, P.alpha, N, L, seed,
                     float(lhs), float(rhs), float(lhs / rhs))


def multilinear_quotient(k: int, s: float, eps: float, fields: Sequence, *,
                         N: int | None = None, seed: int | None = None,
                         time_oversample: int = 2) -> ReportRow:
    """Quotient of the multilinear estimate for ``d_x(u_1 ... u_{k+1})``.

    Inputs are either time-localized grid fields (evaluated by physical
    products on an enlarged grid) or mode fields (exact route).
    """
    P = Params(s=s, eps=eps, k=k, time_oversample=time_oversample)
    return quotient("Tri-mZK" if k == 2 else "Multi-gZK", list(fields), P, N=N, seed=seed)


# ---------------------------------------------------------------------------
# ensembles for sweeps


def default_sampler(estimate: str, params: Params, **opts) -> Callable:
    """Input generator ``(N, seed) -> inputs`` used by :func:`scaling_sweep`.

    * unary space-time estimates: ``gaussian-coefficients`` fields on
      :func:`shell_grid`;
    * estimates on data: random shell data;
    * Airy-type estimates with an ``L^2_y`` inner norm: single-``q``
      packets from :func:`knapp_packet` with random widths in
      ``[1/4, 4] / sqrt(N)``;
    * MP estimates: packets with ``u`` at shell ``N`` and ``v`` at shell 1
      in a box from :func:`real_line_box`, ``u`` near ``q = 0`` for even
      seeds;
    * bilinear refinements: :func:`comoving_pair` for even seeds and
      :func:`transversal_pair` for odd seeds;
    * multilinear estimates: :func:`resonant_tuple` for even seeds, real
      random-phase mode fields at shell ``N`` in a box of length
      ``opts.get("Lx", 8 pi)`` for odd seeds.
    """
    e = str(EstimateId(estimate))
    d = ESTIMATES[e]
    law = opts.get("law", "gaussian-coefficients")
    if d.arity == 1 and d.modes:
        delta = float(opts.get("delta", 8.0 if d.inputs == "data" else 1.0))
        return _KnappSampler(int(opts.get("modes", max(24, int(8 * delta)))), delta)
    if d.arity == 1 and d.inputs == "data":
        return _DataSampler(law)
    if d.arity == 1:
        return _FieldSampler(law, int(opts.get("L", 1)))
    if e.startswith("MP"):
        return _MPSampler(int(opts.get("modes", 32)), int(opts.get("packets", 2)))
    if e.startswith("Bilin"):
        return _PairSampler(params.alpha, int(opts.get("modes", 16)), int(opts.get("packets", 2)))
    n = arity(e, params.k)
    return _MultiSampler(n, float(opts.get("Lx", 4 * TWO_PI)),
                         int(opts.get("modes", max(2, 12 // (n - 1)))),
                         opts.get("law", "random-phase"))


@dataclass(frozen=True)
class _DataSampler:
    law: str

    def __call__(self, N, seed):
        return [sample_data(N, seed, law=self.law)]


@dataclass(frozen=True)
class _FieldSampler:
    law: str
    L: int

    def __call__(self, N, seed):
        return [sample_field(RandomFieldSpec(N, self.L, self.law, seed))]


@dataclass(frozen=True)
class _KnappSampler:
    modes: int
    delta: float

    def __call__(self, N, seed):
        # widths spread over [1/4, 4] around the coherent width
        width = 2.0 ** _rng(seed, N, 23).uniform(-2, 2)
        return [knapp_packet(N, seed, self.modes, width, self.delta)]


def _low_q(xi, q):
    return abs(q) <= 1


@dataclass(frozen=True)
class _MPSampler:
    modes: int
    packets: int

    def __call__(self, N, seed):
        # even seeds place u near q = 0, where the MP symbol is largest
        # relative to the Jy weight; odd seeds draw the centre freely
        Lx = real_line_box(N)
        region = _low_q if seed % 2 == 0 else None
        u = sample_modes(ModeFieldSpec(N, Lx, "packet", seed, modes=self.modes,
                                       packets=self.packets, region=region))
        v = sample_modes(ModeFieldSpec(1, Lx, "packet", seed + 7919, modes=self.modes,
                                       packets=self.packets))
        return [u, v]


@dataclass(frozen=True)
class _PairSampler:
    alpha: float
    modes: int
    packets: int

    def __call__(self, N, seed):
        # even seeds: co-moving packets (sharp case); odd seeds: independent
        # packets in a box emulating the real line
        if seed % 2 == 0:
            return list(comoving_pair(N, self.alpha, seed))
        return list(transversal_pair(N, self.alpha, seed, modes_per_packet=self.modes,
                                     packets=self.packets))


@dataclass(frozen=True)
class _MultiSampler:
    n: int
    Lx: float
    modes: int
    law: str

    def __call__(self, N, seed):
        # even seeds: resonant co-moving packets; odd seeds: independent
        # real random fields in a fixed box
        if seed % 2 == 0:
            return resonant_tuple(N, self.n - 1, seed)
        return [sample_modes(ModeFieldSpec(N, self.Lx, self.law, seed * 131 + i,
                                           modes=self.modes, real=True))
                for i in range(self.n)]


def _eval_task(args):
    e, P, sampler, N, seed, record = args
    try:
        return quotient(e, sampler(N, seed), P, N=N, L=None, seed=seed)
    except DegenerateInputError:
        if not record:
            raise
        nan = float("nan")
        return ReportRow(e, P.k, P.s, P.b, P.eps, P.p, P.alpha, N, None, seed, nan, nan, nan)


def fit_slope(Ns, values) -> float:
    """Least-squares slope of ``log(values)`` against ``log(Ns)``."""
    x = np.log(np.asarray(Ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _bootstrap_ci(Ns, groups, seed: int, reps: int = 400, level: float = 0.95):
    rng = np.random.default_rng(seed)
    slopes = np.empty(reps)
    for r in range(reps):
        m = [np.max(g[rng.integers(0, len(g), len(g))]) for g in groups]
        slopes[r] = fit_slope(Ns, m)
    a = (1 - level) / 2
    return float(np.quantile(slopes, a)), float(np.quantile(slopes, 1 - a))


def scaling_sweep(estimate: str, Ns: Sequence[int], samples: int = 20,
                  params: Params | None = None, *, seed: int = 0, workers: int = 1,
                  sampler: Callable | None = None, enforce_size: bool = True,
                  on_degenerate: str = "raise", **sampler_opts) -> SweepResult:
    """Fit the growth of the maximal quotient over dyadic shells.

    Sample ``i`` at shell ``N`` uses the seed ``seed * 1_000_003 + 1000 N + i``;
    rows are ordered by ``(N, i)`` whatever the number of workers.  The
    confidence interval is a 95% bootstrap over resampled ensembles.

    With ``on_degenerate="record"`` a sample whose right-hand side vanishes
    becomes a row with ``nan`` entries and is left out of the fit.
    """
    if on_degenerate not in ("raise", "record"):
        raise ContractViolation("on_degenerate must be 'raise' or 'record'")
    e = str(EstimateId(estimate))
    P = params if params is not None else Params()
    Ns = [int(n) for n in Ns]
    if enforce_size and (len(Ns) < 4 or samples < 20):
        raise ContractViolation("a sweep needs at least 4 shells and 20 samples per shell")
    if not all(is_dyadic(n) for n in Ns):
        raise ContractViolation("sweep shells must be dyadic")
    smp = sampler if sampler is not None else default_sampler(e, P, **sampler_opts)
    record = on_degenerate == "record"
    tasks = [(e, P, smp, N, seed * 1_000_003 + 1000 * N + i, record)
             for N in Ns for i in range(samples)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_eval_task, tasks))
    else:
        rows = [_eval_task(t) for t in tasks]
    return summarize(EstimateReport(e, P, rows), Ns, samples, seed)


def summarize(rep: EstimateReport, Ns: Sequence[int] | None = None,
              samples: int | None = None, seed: int = 0) -> SweepResult:
    """Slope fit and bootstrap interval of an existing report.

    Rows with a ``nan`` quotient are ignored; shells without a finite
    quotient drop out of the fit.
    """
    if Ns is None:
        Ns = sorted({int(r.N) for r in rep.rows if r.N is not None})
    Ns = [int(n) for n in Ns]
    if samples is None:
        samples = max((len(rep.quotients(N)) for N in Ns), default=0)
    e, P = rep.estimate_id, rep.params
    groups = [q[np.isfinite(q)] for q in (rep.quotients(N) for N in Ns)]
    keep = [i for i, g in enumerate(groups) if len(g)]
    Nk = [Ns[i] for i in keep]
    groups = [groups[i] for i in keep]
    maxima = [float(g.max()) for g in groups]
    if len(Nk) >= 2:
        slope = fit_slope(Nk, maxima)
        lo, hi = _bootstrap_ci(Nk, groups, seed)
    else:
        slope = lo = hi = float("nan")
    return SweepResult(e, P, tuple(Ns), samples, slope, lo, hi,
                       max(maxima) if maxima else float("nan"), rhs_allowance(e, P), rep)


def _parse_cell(v: str, kind):
    if v == "":
        return None
    return kind(v)


def read_report_csv(path: str | Path) -> list[EstimateReport]:
    """Read rows written by :meth:`EstimateReport.write_csv`.

    Rows are grouped into one report per parameter set, in order of first
    appearance.
    """
    out: dict = {}
    with Path(path).open(newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != REPORT_COLUMNS:
            raise ContractViolation(f"{path}: not an estimate report (columns {rd.fieldnames})")
        for d in rd:
            row = ReportRow(d["estimate_id"], _parse_cell(d["k"], int), _parse_cell(d["s"], float),
                            float(d["b"]), float(d["eps"]), _parse_cell(d["p"], float),
                            _parse_cell(d["alpha"], float), _parse_cell(d["N"], int),
                            _parse_cell(d["L"], int), _parse_cell(d["seed"], int),
                            float(d["lhs"]), float(d["rhs"]), float(d["quotient"]))
            key = (row.estimate_id, row.k, row.s, row.b, row.eps, row.p, row.alpha)
            if key not in out:
                P = Params(s=row.s, b=row.b, eps=row.eps, p=row.p, alpha=row.alpha, k=row.k,
                           check=False)
                out[key] = EstimateReport(row.estimate_id, P, [])
            out[key].rows.append(row)
    return list(out.values())


# ---------------------------------------------------------------------------
# the counterexample family

#: resolution of the counterexample grid in xi and sigma (cells per unit)
_CE_RES = 16


def counterexample_grid(N: int) -> Grid:
    """Grid for the counterexample at shell ``N``: ``dxi = dsigma = 1/16``."""
    L = TWO_PI * _CE_RES
    return Grid(Lx=L, Nx=4 * _CE_RES, Ny=max(8, 4 * int(N)), Tw=L, Nt=4 * _CE_RES)


def _edge_weights(n: int) -> np.ndarray:
    # samples of the indicator of [-1, 1] on the lattice k / 16 in FFT order;
    # the two endpoints carry 1/sqrt(2) so that |u|^2 has trapezoid weights
    k = np.fft.fftfreq(n, 1.0 / n).round().astype(int)
    w = (np.abs(k) <= _CE_RES).astype(float)
    w[np.abs(k) == _CE_RES] = math.sqrt(0.5)
    return w


def counterexample_field(N: int, grid: Grid | None = None) -> SpaceTimeField:
    """``u_N`` with ``u^ = (delta_{q,N} + delta_{q,-N}) 1_{[-1,1]}(xi) 1_{[-1,1]}(tau - phi)``.

    Raises
    ------
    ContractViolation
        When ``N`` is not resolved in ``q`` or the grid is too coarse.
    """
    if int(N) != N or N < 2:
        raise ContractViolation("counterexample needs an integer N >= 2")
    g = grid if grid is not None else counterexample_grid(N)
    if N >= g.Ny // 2:
        raise ContractViolation(f"N={N} exceeds the q-resolution of the grid (Ny={g.Ny})")
    if abs(g.dxi * _CE_RES - 1) > 1e-12 or abs(g.dsigma * _CE_RES - 1) > 1e-12 \
            or g.Nx <= 2 * _CE_RES or g.Nt <= 2 * _CE_RES:
        raise ContractViolation("counterexample grid must have dxi = dsigma = 1/16 "
                                "and resolve [-1, 1]")
    W = np.zeros((g.Nt, g.Nx, g.Ny), dtype=complex)
    prof = _edge_weights(g.Nt)[:, None] * _edge_weights(g.Nx)[None, :]
    W[:, :, N] = prof
    W[:, :, g.Ny - N] = prof
    return SpaceTimeField(g, W, True)


#: factor converting Parseval-normalised norms to the unnormalised convention
_UNNORM = TWO_PI ** 1.5


def counterexample_closed_form(N: int, s: float, b: float, n: int = 4001) -> float:
    """``(2 int_{-1}^{1} <(xi,N)>^{2s} dxi int_{-1}^{1} <sigma>^{2b} dsigma)^{1/2}``."""
    x = np.linspace(-1.0, 1.0, n)
    a = np.trapezoid((1 + x * x + N * N) ** s, x)
    c = np.trapezoid((1 + x * x) ** b, x)
    return float(math.sqrt(2 * a * c))


def counterexample_norms(N: int, s: float, b: float, time_oversample: int = 8,
                         with_l4: bool = True) -> dict:
    """Norms of the counterexample in the unnormalised Fourier convention.

    Norms are those of ``u^`` in ``L^2(d tau d xi)`` with counting measure
    in ``q`` (no factors of ``2 pi``), so that ``xsb = sqrt(8)`` at
    ``s = b = 0``.  ``l4`` is ``||u_N^ * u_N^||_{L^2}``, which equals
    ``||u_N||_{L^4}^2`` in that convention.

    Returns
    -------
    dict
        ``xsb_closed``, ``xsb_grid`` and (if requested) ``l4``.
    """
    U = counterexample_field(N)
    out = {"xsb_closed": counterexample_closed_form(N, s, b),
           "xsb_grid": _UNNORM * norms.xsb_norm(U, s, b)}
    if with_l4:
        l4 = norms.lp_spacetime(U, ((4, "txy"),), None, time_oversample)
        out["l4"] = TWO_PI ** 4.5 * l4 ** 2
    return out


def counterexample_sweep(Ns: Sequence[int], s_values: Sequence[float], b: float = DEFAULT_B):
    """Slopes of ``log xsb`` and ``log l4`` against ``log N``.

    Returns
    -------
    dict
        ``xsb_slopes`` keyed by ``s``, ``l4_slope``, and ``rows``: tuples
        ``(N, s, xsb_closed, xsb_grid, l4)``.
    """
    rows = []
    l4 = {}
    for N in Ns:
        l4[N] = counterexample_norms(N, 0.0, b)["l4"]
        for s in s_values:
            r = counterexample_norms(N, s, b, with_l4=False)
            rows.append((N, s, r["xsb_closed"], r["xsb_grid"], l4[N]))
    slopes = {s: fit_slope(Ns, [r[3] for r in rows if r[1] == s]) for s in s_values}
    return {"xsb_slopes": slopes, "l4_slope": fit_slope(Ns, [l4[N] for N in Ns]),
            "l4": l4, "rows": rows}


def params_dict(P: Params) -> dict:
    return asdict(P)
