"""Execution of configured experiment families.

Each family writes its CSVs into the output directory and returns a
:class:`FamilyResult`; :func:`run` chains the families of a config and
writes ``manifest.json``.  Every CSV depends on the config only, so reruns
reproduce the files byte for byte; timing goes to the manifest.
"""
from __future__ import annotations

import csv
import hashlib
import json
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path

import numpy as np

from . import __version__, harness, measure, propagator, symbols
from .config import ConfigError, ExperimentConfig
from .errors import BlowUpDetected, ContractViolation
from .grid import SpectralField, conjugate_mirror, fft_forward

MULTILINEAR_IDS = ("Tri-mZK", "Multi-gZK")
_LP_IDS = ("Schr-Lp", "Airy-Lp", "Opt-Lp")


@dataclass
class FamilyResult:
    name: str
    csvs: list = field(default_factory=list)
    flagged: int = 0
    summary: dict = field(default_factory=dict)
    lines: list = field(default_factory=list)


def _writer(path: Path):
    fh = path.open("w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _r(x) -> str:
    return repr(float(x))


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)


# ---------------------------------------------------------------------------
# estimates


def estimate_params(cfg: ExperimentConfig, estimate: str) -> list[harness.Params]:
    """Parameter sets swept for one estimate of the ``[estimates]`` section.

    ``s`` applies to the unary estimates only, ``p`` to the ``Lp`` families
    and ``alpha`` to the bilinear refinements; other estimates run once per
    ``(b, eps)``.
    """
    sec = cfg.estimates
    d = harness.ESTIMATES[estimate]
    if estimate in MULTILINEAR_IDS:
        raise ConfigError("estimates.ids", f"{estimate} is configured in [multilinear]")
    s_vals = sec.s if d.arity == 1 else (None,)
    p_vals = sec.p if estimate in _LP_IDS else (None,)
    a_vals = sec.alpha if estimate.startswith("Bilin") else (None,)
    out = []
    for b, eps, s, p, a in product(sec.b, sec.eps, s_vals, p_vals, a_vals):
        P = harness.Params(s=s, b=b, eps=eps, p=p, alpha=a,
                           time_oversample=sec.time_oversample)
        try:
            harness.check_hypotheses(estimate, P)
        except ContractViolation as exc:
            raise ConfigError("estimates", str(exc)) from None
        out.append(P)
    return out


def _sweep_family(name, jobs, Ns, samples, cfg, out: Path, csv_name) -> FamilyResult:
    res = FamilyResult(name)
    sweeps = []
    files: dict = {}
    for est, P in jobs:
        sw = harness.scaling_sweep(est, Ns, samples, P, seed=cfg.seed, workers=cfg.workers,
                                   enforce_size=False, on_degenerate="record")
        path = out / csv_name(est)
        sw.report.write_csv(path, append=path in files)
        files[path] = True
        res.flagged += sw.report.flagged
        sweeps.append(sw)
        res.lines.append(_sweep_line(sw))
    res.csvs = list(files)
    res.summary = {"sweeps": [dict(zip(harness.SWEEP_COLUMNS, sw.as_list())) for sw in sweeps]}
    return res


def _sweep_line(sw: harness.SweepResult) -> str:
    P = sw.params
    tags = [f"{k}={v}" for k, v in (("k", P.k), ("s", P.s), ("b", P.b), ("eps", P.eps),
                                    ("p", P.p), ("alpha", P.alpha)) if v is not None]
    flag = f"  flagged={sw.report.flagged}" if sw.report.flagged else ""
    return (f"{sw.estimate_id} [{' '.join(tags)}]: slope {sw.slope:+.3f} "
            f"(95% CI {sw.ci_lo:+.3f}..{sw.ci_hi:+.3f}), max quotient {sw.max_quotient:.4g}, "
            f"allowance {sw.allowance:.3g}{flag}")


def run_estimates(cfg: ExperimentConfig, out: Path) -> FamilyResult:
    sec = cfg.estimates
    jobs = [(e, P) for e in sec.ids for P in estimate_params(cfg, e)]
    return _sweep_family("estimates", jobs, sec.N, sec.samples, cfg, out,
                         lambda e: f"quotients_{_safe(e)}.csv")


def multilinear_jobs(cfg: ExperimentConfig) -> list:
    """``(estimate, Params)`` pairs of the ``[multilinear]`` section."""
    sec = cfg.multilinear
    jobs = []
    for k, s, eps in product(sec.k, sec.s, sec.eps):
        est = "Tri-mZK" if k == 2 else "Multi-gZK"
        P = harness.Params(s=s, eps=eps, k=k, time_oversample=2)
        try:
            harness.check_hypotheses(est, P)
        except ContractViolation as exc:
            raise ConfigError("multilinear", str(exc)) from None
        jobs.append((est, P))
    return jobs


def run_multilinear(cfg: ExperimentConfig, out: Path) -> FamilyResult:
    sec = cfg.multilinear
    return _sweep_family("multilinear", multilinear_jobs(cfg), sec.N, sec.samples, cfg, out,
                         lambda e: "multilinear.csv")


# ---------------------------------------------------------------------------
# counterexample


COUNTEREXAMPLE_COLUMNS = ("N", "s", "b", "xsb_closed", "xsb_grid", "l4")


def run_counterexample(cfg: ExperimentConfig, out: Path) -> FamilyResult:
    sec = cfg.counterexample
    res = FamilyResult("counterexample")
    path = out / "counterexample.csv"
    fh, w = _writer(path)
    slopes = []
    with fh:
        w.writerow(COUNTEREXAMPLE_COLUMNS)
        for b in sec.b:
            rows = []
            l4 = {}
            for N in sec.N:
                if sec.l4:
                    l4[N] = harness.counterexample_norms(N, 0.0, b)["l4"]
                for s in sec.s:
                    r = harness.counterexample_norms(N, s, b, with_l4=False)
                    rows.append((N, s, r["xsb_closed"], r["xsb_grid"], l4.get(N, float("nan"))))
            for N, s, xc, xg, l in rows:
                w.writerow([N, _r(s), _r(b), _r(xc), _r(xg), _r(l)])
            for s in sec.s:
                g = [r[3] for r in rows if r[1] == s]
                c = [r[2] for r in rows if r[1] == s]
                entry = {"b": b, "s": s, "xsb_grid_slope": harness.fit_slope(sec.N, g),
                         "xsb_closed_slope": harness.fit_slope(sec.N, c)}
                slopes.append(entry)
                res.lines.append(f"b={b} s={s:+g}: slope of ||u_N||_X(s,b) "
                                 f"{entry['xsb_grid_slope']:+.4f} (closed form "
                                 f"{entry['xsb_closed_slope']:+.4f})")
            if sec.l4:
                vals = [l4[N] for N in sec.N]
                ls = harness.fit_slope(sec.N, vals)
                slopes.append({"b": b, "l4_slope": ls, "l4_min_ratio": min(vals) / vals[0]})
                res.lines.append(f"b={b}: slope of ||u_N||_L4^2 {ls:+.4f}, "
                                 f"min/first {min(vals) / vals[0]:.4f}")
    res.csvs = [path]
    res.summary = {"slopes": slopes}
    return res


# ---------------------------------------------------------------------------
# measure lab


_ANCHORS = ((1.0, 3, 16), (0.3, 5, 32), (5.0, 2, 8), (2.2, 4, 64))


def measure_family(cfg: ExperimentConfig, variant: str, alpha: float | None) -> list:
    """Query family named by ``measure.family``.

    ``k-sweep`` covers every level window at four anchor points
    ``(xi, q, N)``.  ``default`` keeps the anchors with ``N <= 16`` (the
    level lattice grows like ``N^2``) and adds the randomised family over
    ``measure.N``.
    """
    sec = cfg.measure
    a = alpha if variant == "alpha" else None
    Ks = [float(k) for k in sec.K]
    fam = sec.family
    out = []
    if fam in ("default", "k-sweep"):
        for xi, q, N in _ANCHORS:
            if fam == "default" and N > 16:
                continue
            out += measure.k_sweep_family(xi, q, N, N, Ks, alpha=a)
    if fam in ("default", "random"):
        out += measure.random_family(sec.N, sec.per_N, alpha=a, seed=cfg.seed)
    if fam == "targeted":
        out += measure.targeted_family(sec.N, alpha=a)
    if fam == "oracle":
        out += [qy for qy in measure.oracle_family(sec.per_N, cfg.seed) if qy.variant == variant]
    return out


def run_measure(cfg: ExperimentConfig, out: Path) -> FamilyResult:
    sec = cfg.measure
    res = FamilyResult("measure")
    reports = []
    for variant in sec.variant:
        alphas = sec.alpha if variant == "alpha" else (None,)
        for a, eps in product(alphas, sec.eps):
            fam = measure_family(cfg, variant, a)
            rep = measure.scan_sup_bound(fam, eps, variant, workers=cfg.workers,
                                         mc_samples=sec.mc_samples, seed=cfg.seed)
            tag = f"_alpha{a:g}" if a is not None else ""
            path = out / f"measure_{variant}{tag}_eps{eps:g}.csv"
            rep.write_csv(path)
            res.csvs.append(path)
            summ = rep.summary()
            reports.append(summ)
            kx = "n/a" if rep.k_exponent is None else f"{rep.k_exponent:.3f}"
            nx = "n/a" if rep.n_exponent is None else f"{rep.n_exponent:+.3f}"
            res.lines.append(f"{variant}{tag} eps={eps:g}: {len(rep.rows)} queries, "
                             f"max ratio {rep.max_ratio:.4g}, K-exponent {kx}, N-exponent {nx}")
    res.summary = {"scans": reports}
    return res


# ---------------------------------------------------------------------------
# solver


SIMULATE_COLUMNS = ("k", "sign", "status", "t_last", "mass_drift", "energy_drift", "csv")


def random_datum(grid, band: int, amplitude: float, seed: int) -> SpectralField:
    """Real datum with random coefficients on ``|j|, |q| <= band`` and ``L^2`` norm ``amplitude``."""
    rng = np.random.default_rng(seed)
    c = np.zeros(grid.shape, dtype=complex)
    J = np.fft.fftfreq(grid.Nx, 1.0 / grid.Nx)
    Q = np.fft.fftfreq(grid.Ny, 1.0 / grid.Ny)
    mask = (np.abs(J)[:, None] <= band) & (np.abs(Q)[None, :] <= band)
    c[mask] = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum())
    c = 0.5 * (c + conjugate_mirror(c))
    c[grid.Nx // 2, :] = 0
    c[:, grid.Ny // 2] = 0
    f = SpectralField(grid, c, True)
    return f.replace(c * (amplitude / np.sqrt(propagator.mass(f))))


def gaussian_datum(grid, amplitude: float) -> SpectralField:
    """Smooth localized datum ``exp(-(x - Lx/2)^2 / 4) (1 + cos(y)/2 + 3 sin(2y)/10)``.

    The ``L^2`` norm is ``amplitude``; the Nyquist lines are zeroed.
    """
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    f = np.exp(-((X - grid.Lx / 2) ** 2) / 4) * (1 + 0.5 * np.cos(Y) + 0.3 * np.sin(2 * Y))
    c = fft_forward(f, grid, real=True).coeffs.copy()
    c[grid.Nx // 2, :] = 0
    c[:, grid.Ny // 2] = 0
    u = SpectralField(grid, c, True)
    return u.replace(c * (amplitude / np.sqrt(propagator.mass(u))))


def run_simulate(cfg: ExperimentConfig, out: Path) -> FamilyResult:
    sec = cfg.simulate
    g = cfg.grid.to_grid()
    res = FamilyResult("simulate")
    if sec.datum == "gaussian":
        u0 = gaussian_datum(g, sec.amplitude)
    else:
        u0 = random_datum(g, sec.band, sec.amplitude, cfg.seed)
    path = out / "simulate.csv"
    rows = []
    for k, sign in product(sec.k, sec.sign):
        ev = propagator.EvolutionConfig(k=k, sign=sign, dt=sec.dt, T=sec.T, stride=sec.stride)
        name = f"simulate_k{k}_{'plus' if sign > 0 else 'minus'}.csv"
        try:
            tr = propagator.gzk_solve(u0, ev)
        except BlowUpDetected as exc:
            res.flagged += 1
            rows.append([k, sign, "blow-up", _r(exc.t_last), "", "", ""])
            res.lines.append(f"k={k} sign={sign:+d}: blow-up after t={exc.t_last:g}")
            continue
        tr.report.write_csv(out / name)
        res.csvs.append(out / name)
        md, ed = tr.report.drift("mass"), tr.report.drift("energy")
        rows.append([k, sign, "ok", _r(sec.T), _r(md), _r(ed), name])
        res.lines.append(f"k={k} sign={sign:+d}: mass drift {md:.2e}, energy drift {ed:.2e}")
    fh, w = _writer(path)
    with fh:
        w.writerow(SIMULATE_COLUMNS)
        w.writerows(rows)
    res.csvs.insert(0, path)
    res.summary = {"runs": [dict(zip(SIMULATE_COLUMNS, r)) for r in rows]}
    return res


# ---------------------------------------------------------------------------
# exact algebra


def run_identities(cfg: ExperimentConfig, out: Path) -> FamilyResult:
    sec = cfg.identities
    res = FamilyResult("identities")
    worst = symbols.identity_defects(sec.samples, cfg.seed, sec.bound, sec.den)
    path = out / "identities.csv"
    fh, w = _writer(path)
    with fh:
        w.writerow(("identity", "samples", "max_defect"))
        for name, d in worst.items():
            w.writerow((name, sec.samples, str(d)))
    top = max(worst.values())
    res.csvs = [path]
    res.summary = {name: str(d) for name, d in worst.items()}
    res.lines = [f"{name}: max absolute defect {d}" for name, d in worst.items()]
    res.lines.append(f"max absolute defect {top} over {sec.samples} rational samples")
    return res


RESONANCE_COLUMNS = ("N", "x1", "q1", "x2", "q2", "x3", "q3", "resonance",
                     "defect_factored", "defect_rewritten")


def run_resonance(cfg: ExperimentConfig, out: Path) -> FamilyResult:
    """Cubic resonance on rational triples with ``|x_i| <= N`` and ``|q_i| <= N``.

    Both factored forms are compared with the direct value in exact
    arithmetic.
    """
    sec = cfg.resonance
    res = FamilyResult("resonance")
    rng = random.Random(cfg.seed)
    path = out / "resonance.csv"
    worst = Fraction(0)
    fh, w = _writer(path)
    with fh:
        w.writerow(RESONANCE_COLUMNS)
        for N in sec.N:
            for _ in range(sec.samples):
                pts = [(Fraction(rng.randint(-64 * N, 64 * N), 64), rng.randint(-N, N))
                       for _ in range(3)]
                r = symbols.resonance3(*pts)
                d1 = abs(r - symbols.resonance3_factored(*pts))
                d2 = abs(r - symbols.resonance3_rewritten(*pts))
                worst = max(worst, d1, d2)
                w.writerow([N] + [str(v) for p in pts for v in p] + [str(r), str(d1), str(d2)])
    res.csvs = [path]
    res.summary = {"max_defect": str(worst)}
    res.lines = [f"{len(sec.N) * sec.samples} triples, max absolute defect {worst}"]
    return res


# ---------------------------------------------------------------------------
# report


def run_report(out: Path, plots: bool = False, seed: int = 0) -> FamilyResult:
    """Sweep summary of every estimate report found in ``out``."""
    res = FamilyResult("report")
    sweeps = []
    sources = sorted(out.glob("quotients_*.csv"))
    if (out / "multilinear.csv").exists():
        sources.append(out / "multilinear.csv")
    for src in sources:
        for rep in harness.read_report_csv(src):
            sw = harness.summarize(rep, seed=seed)
            sweeps.append(sw)
            res.lines.append(_sweep_line(sw))
    if sweeps:
        path = harness.write_sweep_summary(sweeps, out / "summary.csv")
        res.csvs.append(path)
    if plots:
        from .plots import render_all
        res.summary["plots"] = [p.name for p in render_all(out)]
    if not sources:
        res.lines.append(f"no estimate reports in {out}")
    return res


# ---------------------------------------------------------------------------
# orchestration


RUNNERS = {
    "estimates": run_estimates, "counterexample": run_counterexample, "measure": run_measure,
    "simulate": run_simulate, "identities": run_identities, "resonance": run_resonance,
    "multilinear": run_multilinear,
}


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out: Path, cfg: ExperimentConfig | None, results: list, wall: float,
                   command: str) -> Path:
    """``manifest.json`` listing every CSV of ``out`` with its sha256."""
    csvs = sorted(out.glob("*.csv"))
    doc = {
        "tool": "zklab", "version": __version__, "command": command,
        "config_hash": None if cfg is None else cfg.config_hash(),
        "config": None if cfg is None else cfg.to_dict(),
        "wall_time_s": round(wall, 3),
        "flagged_rows": sum(r.flagged for r in results),
        "files": {p.name: sha256_file(p) for p in csvs},
        "results": {r.name: r.summary for r in results},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
    return path


def run(cfg: ExperimentConfig, out: Path | None = None, families=None, echo=print,
        command: str = "run") -> list[FamilyResult]:
    """Run the configured families (or ``families``) and write the manifest."""
    out = Path(out if out is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    names = list(families if families is not None else cfg.experiments)
    if not names:
        raise ConfigError("run.experiments", "nothing to run")
    # validate every family's parameters before any work starts
    for n in names:
        if n == "estimates":
            for e in cfg.estimates.ids:
                estimate_params(cfg, e)
        elif n == "multilinear":
            multilinear_jobs(cfg)
    t0 = time.perf_counter()
    results = []
    for n in names:
        r = RUNNERS[n](cfg, out)
        for line in r.lines:
            echo(f"[{n}] {line}")
        results.append(r)
    if cfg.plots:
        from .plots import render_all
        render_all(out)
    write_manifest(out, cfg, results, time.perf_counter() - t0, command)
    return results
