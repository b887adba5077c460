"""Figures rendered from the CSVs of an output directory (needs matplotlib)."""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import numpy as np


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError("plots need matplotlib (pip install 'artifact[plot]')") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _rows(path: Path) -> list[dict]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def plot_quotients(path: Path, plt) -> Path:
    """Per-shell maximal quotient against ``N`` for each parameter set."""
    groups = defaultdict(lambda: defaultdict(list))
    for r in _rows(path):
        key = " ".join(f"{c}={r[c]}" for c in ("estimate_id", "k", "s", "eps", "p", "alpha") if r[c])
        q = float(r["quotient"])
        if np.isfinite(q):
            groups[key][int(r["N"])].append(q)
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, by_n in groups.items():
        Ns = sorted(by_n)
        ax.loglog(Ns, [max(by_n[n]) for n in Ns], "o-", label=key)
    ax.set_xlabel("N")
    ax.set_ylabel("max quotient")
    ax.legend(fontsize=7)
    out = path.with_suffix(".png")
    fig.savefig(out, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return out


def plot_measure(path: Path, plt) -> Path:
    """Largest measure against ``K``."""
    best = defaultdict(float)
    for r in _rows(path):
        best[float(r["K"])] = max(best[float(r["K"])], float(r["measure"]))
    Ks = sorted(k for k in best if best[k] > 0)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(Ks, [np.sqrt(best[k]) for k in Ks], "o-")
    ax.set_xlabel("K")
    ax.set_ylabel("max |B|^(1/2)")
    out = path.with_suffix(".png")
    fig.savefig(out, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return out


def plot_counterexample(path: Path, plt) -> Path:
    """``X_{s,b}`` norms and the ``L^4`` quantity of the counterexample against ``N``."""
    by_s = defaultdict(dict)
    l4 = {}
    for r in _rows(path):
        N = int(r["N"])
        by_s[float(r["s"])][N] = float(r["xsb_grid"])
        if r["l4"] != "nan":
            l4[N] = float(r["l4"])
    fig, ax = plt.subplots(figsize=(6, 4))
    for s, vals in sorted(by_s.items()):
        Ns = sorted(vals)
        ax.loglog(Ns, [vals[n] for n in Ns], "o-", label=f"X_(s,b), s={s:g}")
    if l4:
        Ns = sorted(l4)
        ax.loglog(Ns, [l4[n] for n in Ns], "k--", label="L4 quantity")
    ax.set_xlabel("N")
    ax.legend(fontsize=7)
    out = path.with_suffix(".png")
    fig.savefig(out, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return out


def render_all(out_dir: str | Path) -> list[Path]:
    """Render every figure whose source CSV exists in ``out_dir``."""
    out_dir = Path(out_dir)
    plt = _pyplot()
    made = []
    for p in sorted(out_dir.glob("quotients_*.csv")) + sorted(out_dir.glob("multilinear.csv")):
        made.append(plot_quotients(p, plt))
    for p in sorted(out_dir.glob("measure_*.csv")):
        made.append(plot_measure(p, plt))
    if (out_dir / "counterexample.csv").exists():
        made.append(plot_counterexample(out_dir / "counterexample.csv", plt))
    return made
