"""Exact measures of the level sets ``B^lin`` and ``B^alpha``.

For ``(tau, xi, q)`` with ``xi > 0`` and a level window ``[c, c + K]`` the sets
consist of pairs ``(xi1, q1)`` in ``R x Z`` with

* ``p(xi1, q1 + h) in [c, c + K]`` where ``p(x, y) = xi (3x^2 + y^2) + 2 q x y``;
* two ball constraints ``|(xi1 + xi/2, q1 + q/2 + h)| <= kb N1`` and
  ``|(xi/2 - xi1, q/2 - q1 - h)| <= kb N2`` in the dilated norm;
* for the ``lin`` variant ``|xi1| < xi/2`` and ``|3 xi^2 - q^2| >= kh``;
* for the ``alpha`` variant ``xi >= kx`` and ``|3 xi^2 - q^2| >= kh xi^alpha``.

For fixed ``q1`` the level constraint is a quadratic inequality in ``xi1``
whose solution set is ``x0 + ([-r2, -r1] u [r1, r2])`` with
``x0 = -(q1 + h) q / (3 xi)``, ``r_i = sqrt(D_i)`` and

    D1 = (q^2 - 3 xi^2) / (9 xi^2) (q1 + h)^2 + c / (3 xi),
    D2 = same with c + K,

collapsing to ``x0 + [-r2, r2]`` when ``D1 <= 0 <= D2``.  The ball and strip
constraints cut out one interval per ``q1``; intersecting gives the slice,
and the measure is the sum of slice lengths over the finite admissible range
of ``q1``.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels, symbols
from .errors import ContractViolation
from .projectors import is_dyadic

VARIANTS = ("lin", "alpha")


@dataclass(frozen=True)
class MeasureQuery:
    """Parameters defining one set ``B^lin`` (``alpha is None``) or ``B^alpha``.

    ``tau`` is carried as provenance; the level window is ``[c, c + K]``.  Use
    :meth:`from_modulation` to derive ``c`` and ``K`` from ``tau`` and a
    modulation size.
    """

    tau: float = 0.0
    xi: float = 1.0
    q: int = 0
    h: float = 0.0
    N1: int = 1
    N2: int = 1
    c: float = 0.0
    K: float = 1.0
    alpha: float | None = None
    kappa_ball: float = 1.0
    kappa_hyp: float = 1.0
    kappa_xi: float = 1.0

    def __post_init__(self):
        if self.K < 1:
            raise ContractViolation(f"K must be >= 1, got {self.K}")
        if self.h not in (0, 0.5):
            raise ContractViolation(f"h must be 0 or 1/2, got {self.h}")
        if int(self.q) != self.q:
            raise ContractViolation(f"q must be an integer, got {self.q}")
        for name in ("N1", "N2"):
            if not is_dyadic(getattr(self, name)):
                raise ContractViolation(f"{name} must be a dyadic integer, got {getattr(self, name)}")
        if self.alpha is not None and not 0 <= self.alpha <= 1:
            raise ContractViolation(f"alpha must lie in [0, 1], got {self.alpha}")
        for name in ("kappa_ball", "kappa_hyp", "kappa_xi"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"{name} must be positive")

    @property
    def variant(self) -> str:
        return "lin" if self.alpha is None else "alpha"

    @property
    def Nmax(self) -> int:
        return max(self.N1, self.N2)

    @classmethod
    def from_modulation(cls, tau: float, xi: float, q: int, L: float, ctilde: float = 1.0,
                        **kw) -> "MeasureQuery":
        """Query with ``c = tau - (xi/4)(xi^2 + q^2) - ctilde L`` and ``K = 2 ctilde L``."""
        c = tau - 0.25 * xi * (xi * xi + q * q) - ctilde * L
        kw.setdefault("h", float(symbols.h_parity(int(q))))
        return cls(tau=tau, xi=xi, q=int(q), c=c, K=2.0 * ctilde * L, **kw)


@dataclass(frozen=True)
class SliceIntervals:
    """Disjoint closed intervals in ``xi1`` making up the slice at ``q1``."""

    q1: int
    intervals: tuple
    case_tag: str

    @property
    def length(self) -> float:
        return float(sum(b - a for a, b in self.intervals))


def case_tag(xi: float, q: int, c: float, K: float) -> str:
    """Sign case of ``(q^2 - 3 xi^2, c, c + K)``.

    ``i``: ``q^2 > 3 xi^2`` and ``c >= 0``;  ``ii.1``: ``q^2 > 3 xi^2``,
    ``c < 0 <= c + K``;  ``ii.2``: ``q^2 > 3 xi^2``, ``c + K < 0``;
    ``iii``: ``q^2 < 3 xi^2``, ``c > 0``;  ``iv``: ``q^2 < 3 xi^2``, ``c <= 0``;
    ``degenerate``: ``q^2 = 3 xi^2``.
    """
    g = q * q - 3.0 * xi * xi
    if g > 0:
        if c >= 0:
            return "i"
        return "ii.1" if c + K >= 0 else "ii.2"
    if g < 0:
        return "iii" if c > 0 else "iv"
    return "degenerate"


def gap_holds(query: MeasureQuery) -> bool:
    """Whether ``(xi, q)`` belongs to the family of the query's variant."""
    gap = abs(3.0 * query.xi**2 - query.q**2)
    if query.alpha is None:
        return gap >= query.kappa_hyp
    return query.xi >= query.kappa_xi and gap >= query.kappa_hyp * query.xi**query.alpha


def admissible_q1(query: MeasureQuery) -> np.ndarray:
    """All integers ``q1`` for which both ball constraints admit some ``xi1``.

    With ``y = q1 + h`` the constraints force ``|y + q/2| <= kb N1`` and
    ``|q/2 - y| <= kb N2``; the resulting range is exact.
    """
    R1 = query.kappa_ball * query.N1
    R2 = query.kappa_ball * query.N2
    half = query.q / 2.0
    ylo = max(-R1 - half, half - R2)
    yhi = min(R1 - half, half + R2)
    if yhi < ylo:
        return np.zeros(0, dtype=np.int64)
    lo = math.ceil(ylo - query.h - 1e-12)
    hi = math.floor(yhi - query.h + 1e-12)
    return np.arange(lo, hi + 1, dtype=np.int64)


def _constraint_box(query: MeasureQuery, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interval ``[lo, hi]`` in ``xi1`` allowed by the strip and ball constraints."""
    xi, half = query.xi, query.q / 2.0
    R1 = query.kappa_ball * query.N1
    R2 = query.kappa_ball * query.N2
    r1 = np.sqrt(np.maximum((R1 * R1 - (y + half) ** 2) / 3.0, 0.0))
    r2 = np.sqrt(np.maximum((R2 * R2 - (half - y) ** 2) / 3.0, 0.0))
    lo = np.maximum(-xi / 2 - r1, xi / 2 - r2)
    hi = np.minimum(-xi / 2 + r1, xi / 2 + r2)
    ok = (np.abs(y + half) <= R1) & (np.abs(half - y) <= R2)
    if query.alpha is None:
        lo = np.maximum(lo, -xi / 2)
        hi = np.minimum(hi, xi / 2)
    hi = np.where(ok, hi, lo)
    return lo, hi


def _check_xi(query: MeasureQuery) -> None:
    if not query.xi > 0:
        raise ContractViolation(f"xi must be positive, got {query.xi}")


def slice_intervals(query: MeasureQuery, q1: int) -> SliceIntervals:
    """Exact solution set in ``xi1`` at fixed ``q1``, intersected with all constraints."""
    _check_xi(query)
    tag = case_tag(query.xi, query.q, query.c, query.K)
    y = float(q1) + query.h
    lo, hi = (float(v[0]) for v in _constraint_box(query, np.array([y])))
    xi, q, c, K = query.xi, query.q, query.c, query.K
    a = (q * q - 3.0 * xi * xi) / (9.0 * xi * xi)
    D1 = a * y * y + c / (3.0 * xi)
    D2 = a * y * y + (c + K) / (3.0 * xi)
    if D2 < 0 or hi <= lo:
        return SliceIntervals(int(q1), (), tag)
    x0 = -q * y / (3.0 * xi)
    r2 = math.sqrt(D2)
    if D1 > 0:
        r1 = math.sqrt(D1)
        pieces = [(x0 - r2, x0 - r1), (x0 + r1, x0 + r2)]
    else:
        pieces = [(x0 - r2, x0 + r2)]
    out = []
    for a0, a1 in pieces:
        s, e = max(a0, lo), min(a1, hi)
        if e > s:
            out.append((s, e))
    return SliceIntervals(int(q1), tuple(out), tag)


def slice_lengths(query: MeasureQuery, q1: np.ndarray) -> np.ndarray:
    """Vectorised slice lengths for an array of ``q1`` values."""
    _check_xi(query)
    y = np.ascontiguousarray(np.asarray(q1, dtype=float) + query.h)
    lo, hi = _constraint_box(query, y)
    out = np.zeros(len(y))
    kernels.slice_lengths(float(query.xi), float(query.q), float(query.c), float(query.K),
                          y, np.ascontiguousarray(lo), np.ascontiguousarray(hi), out)
    return out


def measure_B(query: MeasureQuery, q1_range: tuple[int, int] | None = None) -> float:
    """Lebesgue-times-counting measure of the query's set.

    Points ``(xi, q)`` outside the variant's family (gap condition failing)
    give measure 0.  ``q1_range`` restricts the sum to ``lo <= q1 < hi``.
    """
    _check_xi(query)
    if not gap_holds(query):
        return 0.0
    q1 = admissible_q1(query)
    if q1_range is not None:
        q1 = q1[(q1 >= q1_range[0]) & (q1 < q1_range[1])]
    if len(q1) == 0:
        return 0.0
    return float(np.sum(slice_lengths(query, q1)))


def mc_oracle_measure(query: MeasureQuery, samples: int = 10_000, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo estimate of :func:`measure_B` with its standard error.

    Each admissible ``q1`` contributes a stratum: ``xi1`` is drawn uniformly
    on the constraint interval and the indicator of ``p in [c, c + K]`` is
    evaluated directly.  Samples are allotted proportionally to interval
    width.  The per-stratum variance uses the smoothed frequency
    ``(hits + 1/2) / (n + 1)`` so strata in which every draw agrees still
    report a nonzero uncertainty.
    """
    if samples < 10_000:
        raise ContractViolation(f"samples must be >= 1e4, got {samples}")
    _check_xi(query)
    if not gap_holds(query):
        return 0.0, 0.0
    q1 = admissible_q1(query)
    y = q1.astype(float) + query.h
    lo, hi = _constraint_box(query, y)
    width = np.maximum(hi - lo, 0.0)
    keep = width > 0
    if not keep.any():
        return 0.0, 0.0
    y, lo, width = y[keep], lo[keep], width[keep]
    alloc = np.maximum(1, np.floor(samples * width / width.sum())).astype(int)
    rng = np.random.default_rng(seed)
    est = 0.0
    var = 0.0
    for yi, l0, w, n in zip(y, lo, width, alloc):
        x = l0 + w * rng.random(n)
        p = symbols.p_poly(query.xi, query.q, x, yi)
        hits = np.count_nonzero((p >= query.c) & (p <= query.c + query.K))
        est += w * hits / n
        ps = (hits + 0.5) / (n + 1.0)
        var += w * w * ps * (1.0 - ps) / n
    return float(est), float(math.sqrt(var))


# ---------------------------------------------------------------------------
# supremum scans


def ratio(query: MeasureQuery, measure: float, eps: float) -> float:
    """``xi^(alpha/4) |B|^(1/2) / ((N1 v N2)^eps K^(1/2))`` (no ``xi`` factor for lin)."""
    r = math.sqrt(measure) / (query.Nmax**eps * math.sqrt(query.K))
    if query.alpha is not None:
        r *= query.xi ** (query.alpha / 4.0)
    return r


@dataclass
class ScanRow:
    query: MeasureQuery
    measure: float
    ratio: float
    case_tag: str
    mc_estimate: float = float("nan")
    mc_stderr: float = float("nan")


@dataclass
class ScanReport:
    variant: str
    eps: float
    rows: list
    max_ratio: float
    argmax: MeasureQuery | None
    k_exponent: float | None = None
    n_exponent: float | None = None
    meta: dict = field(default_factory=dict)

    CSV_COLUMNS = ("variant", "tau", "xi", "q", "h", "N1", "N2", "c", "K", "alpha",
                   "measure", "ratio", "case_tag", "mc_estimate", "mc_stderr")

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.CSV_COLUMNS)
            for r in self.rows:
                qy = r.query
                w.writerow([qy.variant, _f(qy.tau), _f(qy.xi), qy.q, _f(qy.h), qy.N1, qy.N2,
                            _f(qy.c), _f(qy.K), "" if qy.alpha is None else _f(qy.alpha),
                            _f(r.measure), _f(r.ratio), r.case_tag, _f(r.mc_estimate),
                            _f(r.mc_stderr)])
        return path

    def summary(self) -> dict:
        return {"variant": self.variant, "eps": self.eps, "queries": len(self.rows),
                "max_ratio": self.max_ratio, "k_exponent": self.k_exponent,
                "n_exponent": self.n_exponent,
                "argmax": None if self.argmax is None else asdict(self.argmax), **self.meta}


def _f(x) -> str:
    return f"{float(x):.12g}"


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Least-squares slope of ``log y`` against ``log x`` over positive ``y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0)
    if np.count_nonzero(ok) < 2 or np.ptp(np.log(x[ok])) == 0:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def _grouped_max_slope(rows: list, key) -> float | None:
    groups: dict = {}
    for r in rows:
        k = key(r.query)
        groups[k] = max(groups.get(k, 0.0), math.sqrt(r.measure))
    if len(groups) < 2:
        return None
    ks = sorted(groups)
    return loglog_slope(ks, [groups[k] for k in ks])


def _evaluate(args):
    query, eps = args
    m = measure_B(query)
    return ScanRow(query, m, ratio(query, m, eps), case_tag(query.xi, query.q, query.c, query.K))


def scan_sup_bound(family: Sequence[MeasureQuery], eps: float, variant: str | None = None,
                   workers: int = 1, mc_samples: int = 0, seed: int = 0) -> ScanReport:
    """Maximum bound ratio over a finite family and sup-growth exponents.

    The exponents are least-squares slopes of ``log max |B|^(1/2)`` against
    ``log K`` (grouping by ``K``) and against ``log (N1 v N2)``.  They are
    ``None`` when the family has fewer than two distinct values.  When
    ``mc_samples > 0`` every row also carries the Monte-Carlo oracle.
    """
    family = list(family)
    if not family:
        raise ContractViolation("empty query family")
    if not eps > 0:
        raise ContractViolation("eps must be positive")
    if variant is not None:
        if variant not in VARIANTS:
            raise ContractViolation(f"variant must be one of {VARIANTS}")
        bad = [qy for qy in family if qy.variant != variant]
        if bad:
            raise ContractViolation(f"family contains queries of variant {bad[0].variant}")
    else:
        variant = family[0].variant
    args = [(qy, eps) for qy in family]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_evaluate, args, chunksize=16))
    else:
        rows = [_evaluate(a) for a in args]
    if mc_samples:
        for i, r in enumerate(rows):
            r.mc_estimate, r.mc_stderr = mc_oracle_measure(r.query, mc_samples, seed + i)
    best = max(range(len(rows)), key=lambda i: rows[i].ratio)
    return ScanReport(variant=variant, eps=eps, rows=rows, max_ratio=rows[best].ratio,
                      argmax=rows[best].query if rows[best].ratio > 0 else None,
                      k_exponent=_grouped_max_slope(rows, lambda qy: qy.K),
                      n_exponent=_grouped_max_slope(rows, lambda qy: qy.Nmax))


# ---------------------------------------------------------------------------
# standard families


DYADIC_256 = tuple(2**j for j in range(9))


def k_sweep_family(xi: float, q: int, N1: int, N2: int, Ks: Sequence[float] = DYADIC_256,
                   alpha: float | None = None, h: float | None = None, **kw) -> list:
    """Queries at fixed ``(xi, q, N1, N2)`` covering every level window.

    For each ``K`` the lower level ``c`` runs over the unit lattice covering
    the full range of ``p`` on the ball constraints.  Taking the maximum over
    ``c`` realises the supremum over ``tau``, so the maximal measure is
    nondecreasing in ``K`` and at most doubles when ``K`` doubles.
    """
    if h is None:
        h = float(symbols.h_parity(int(q)))
    R = max(N1, N2) * kw.get("kappa_ball", 1.0)
    span = abs(xi) * (3 * R * R + R * R) + 2 * abs(q) * R * R + 1
    lo = math.floor(-span)
    out = []
    for K in Ks:
        for c in range(lo, math.ceil(span) + 1):
            out.append(MeasureQuery(xi=xi, q=int(q), h=h, N1=N1, N2=N2, c=float(c), K=float(K),
                                    alpha=alpha, tau=float(c), **kw))
    return out


def random_family(Ns: Sequence[int] = DYADIC_256, per_N: int = 200, K: float = 1.0,
                  alpha: float | None = None, seed: int = 0, **kw) -> list:
    """Randomised queries with ``N1 = N2 = N`` for each ``N``.

    ``xi`` is log-uniform on ``[1/N, N]`` (``[1, N]`` for the alpha variant),
    ``q`` uniform on ``[-2N, 2N]`` and ``h`` the parity of ``q``.  The level
    window is placed so that it contains ``p`` at a uniformly drawn point of
    the constraint region, which keeps the sets nonempty.
    """
    rng = np.random.default_rng(seed)
    out = []
    for N in Ns:
        for _ in range(per_N):
            out.append(_random_query(rng, N, N, K, alpha, **kw))
    return out


def _random_query(rng, N1, N2, K, alpha, **kw) -> MeasureQuery:
    N = max(N1, N2)
    lo = 0.0 if alpha is not None else -math.log(N)
    xi = float(math.exp(rng.uniform(lo, math.log(N)))) if N > 1 else float(rng.uniform(0.5, 1.5))
    q = int(rng.integers(-2 * N, 2 * N + 1))
    base = MeasureQuery(xi=xi, q=q, h=float(symbols.h_parity(q)), N1=N1, N2=N2, K=K,
                        alpha=alpha, **kw)
    q1s = admissible_q1(base)
    if len(q1s) == 0:
        return base
    q1 = int(rng.choice(q1s))
    y = np.array([q1 + base.h])
    a, b = (float(v[0]) for v in _constraint_box(base, y))
    x = float(rng.uniform(a, b)) if b > a else 0.0
    c = float(symbols.p_poly(xi, q, x, y[0]) - K * rng.uniform())
    return replace(base, c=c, tau=c)


def oracle_family(n: int = 200, seed: int = 0, **kw) -> list:
    """Mixed ``lin``/``alpha`` queries inside their gap families, for oracle checks."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        alpha = None if len(out) % 2 else float(rng.uniform(0, 1))
        N1, N2 = (int(2 ** rng.integers(0, 6)) for _ in range(2))
        qy = _random_query(rng, N1, N2, float(2 ** rng.integers(0, 5)), alpha, **kw)
        if gap_holds(qy):
            out.append(qy)
    return out


def targeted_family(Ns: Sequence[int] = DYADIC_256, K: float = 1.0, **kw) -> list:
    """Near-worst-case queries: ``xi ~ N / 2`` with ``q^2 - 3 xi^2 ~ 1``.

    Here the slices accumulate over ``~ N`` values of ``q1`` and the measure
    grows logarithmically in ``N``; the family exposes the ``N^eps`` loss.
    """
    out = []
    for N in Ns:
        q = max(1, N // 2)
        xi = math.sqrt(max(q * q - 1.0, 0.0) / 3.0) or 0.5
        for c in np.linspace(-2.0, 2.0, 9):
            out.append(MeasureQuery(xi=xi, q=q, h=float(symbols.h_parity(q)), N1=N, N2=N,
                                    c=float(c), K=K, tau=float(c), **kw))
    return out


def with_tau_shift(query: MeasureQuery, shift: float) -> MeasureQuery:
    """Same set with ``tau`` shifted and ``c`` recentred accordingly."""
    return replace(query, tau=query.tau + shift, c=query.c + shift)
