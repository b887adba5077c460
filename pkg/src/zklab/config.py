"""Experiment configuration: an INI file with one section per experiment family.

Example::

    [run]
    seed = 7
    out = results
    workers = 2

    [estimates]
    ids = L4-main, MP-bilinear
    N = 4..32
    samples = 20

Lists are comma separated; ``a..b`` expands to the powers of two from ``a``
to ``b``.  In the ``s`` list the word ``default`` stands for the exponent of
the estimate itself.  JSON with the same nesting is accepted as well.
Missing keys take the defaults of the section dataclasses below; a section
that is absent is not run unless ``run.experiments`` names it.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ContractViolation
from .grid import Grid
from .projectors import is_dyadic

FAMILIES = ("estimates", "counterexample", "measure", "simulate", "identities",
            "resonance", "multilinear")
MEASURE_FAMILIES = ("default", "k-sweep", "random", "targeted", "oracle")
DATA = ("random", "gaussian")


class ConfigError(ContractViolation):
    """Invalid configuration; ``field`` is ``"section.key"`` when known."""

    def __init__(self, field_name: str | None, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}" if field_name else message)


def dyadic(lo: int, hi: int) -> list[int]:
    """Powers of two in ``[lo, hi]``."""
    out, n = [], 1
    while n <= hi:
        if n >= lo:
            out.append(n)
        n *= 2
    return out


# ---------------------------------------------------------------------------
# value codecs; each key declares its kind in the field metadata


def _kind(kind: str):
    return {"kind": kind}


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.replace("\n", ",").split(",") if t.strip()]


def _parse_scalar(kind: str, text: str, where: str):
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "str":
            return text.strip()
        if kind == "bool":
            t = text.strip().lower()
            if t in ("1", "true", "yes", "on"):
                return True
            if t in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
    except ValueError:
        raise ConfigError(where, f"cannot read {text!r} as {kind}") from None
    raise AssertionError(kind)


def parse_list(kind: str, text, where: str = "") -> tuple:
    """Decode a list value (string, JSON list or scalar) of element kind ``kind``."""
    if isinstance(text, str):
        items = _split(text)
    elif isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [text]  # a bare scalar is a one-element sweep
    out = []
    for it in items:
        if isinstance(it, str) and ".." in it:
            a, b = it.split("..", 1)
            lo, hi = _parse_scalar("int", a, where), _parse_scalar("int", b, where)
            if lo < 1 or hi < lo:
                raise ConfigError(where, f"bad range {it!r}")
            vals = dyadic(lo, hi)
            out.extend(float(v) if kind in ("float", "optfloat") else v for v in vals)
        elif kind == "optfloat":
            out.append(None if it is None or str(it).strip() == "default"
                       else _parse_scalar("float", str(it), where))
        else:
            out.append(it if not isinstance(it, str) and kind != "str"
                       else _parse_scalar(kind, str(it), where))
    if kind == "int":
        out = [int(v) for v in out]
    elif kind == "float":
        out = [float(v) for v in out]
    return tuple(out)


def _decode(kind: str, value, where: str):
    if kind.startswith("list:"):
        return parse_list(kind[5:], value, where)
    if isinstance(value, str):
        return _parse_scalar(kind, value, where)
    if kind == "float" and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind == "int" and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind == "bool" and isinstance(value, bool):
        return value
    if kind == "str" and isinstance(value, str):
        return value
    raise ConfigError(where, f"expected {kind}, got {value!r}")


def _encode(kind: str, value) -> str:
    if kind.startswith("list:"):
        return ", ".join("default" if v is None else _encode(kind[5:], v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ---------------------------------------------------------------------------
# sections


@dataclass(frozen=True)
class GridSection:
    Nx: int = field(default=Grid.Nx, metadata=_kind("int"))
    Ny: int = field(default=Grid.Ny, metadata=_kind("int"))
    Nt: int = field(default=Grid.Nt, metadata=_kind("int"))
    Lx: float = field(default=Grid.Lx, metadata=_kind("float"))
    Tw: float = field(default=Grid.Tw, metadata=_kind("float"))

    def to_grid(self) -> Grid:
        return Grid(Lx=self.Lx, Nx=self.Nx, Ny=self.Ny, Tw=self.Tw, Nt=self.Nt)


@dataclass(frozen=True)
class EstimatesSection:
    ids: tuple = field(default=(), metadata=_kind("list:str"))
    N: tuple = field(default=(4, 8, 16, 32), metadata=_kind("list:int"))
    samples: int = field(default=20, metadata=_kind("int"))
    s: tuple = field(default=(None,), metadata=_kind("list:optfloat"))
    b: tuple = field(default=(0.55,), metadata=_kind("list:float"))
    eps: tuple = field(default=(0.05,), metadata=_kind("list:float"))
    p: tuple = field(default=(4.0,), metadata=_kind("list:float"))
    alpha: tuple = field(default=(0.0, 0.5, 1.0), metadata=_kind("list:float"))
    time_oversample: int = field(default=4, metadata=_kind("int"))


@dataclass(frozen=True)
class CounterexampleSection:
    N: tuple = field(default=tuple(dyadic(4, 256)), metadata=_kind("list:int"))
    s: tuple = field(default=(-0.5, -0.25, 0.0, 0.25), metadata=_kind("list:float"))
    b: tuple = field(default=(0.55,), metadata=_kind("list:float"))
    l4: bool = field(default=True, metadata=_kind("bool"))


@dataclass(frozen=True)
class MeasureSection:
    variant: tuple = field(default=("lin",), metadata=_kind("list:str"))
    eps: tuple = field(default=(0.05,), metadata=_kind("list:float"))
    family: str = field(default="default", metadata=_kind("str"))
    K: tuple = field(default=tuple(dyadic(1, 256)), metadata=_kind("list:int"))
    N: tuple = field(default=tuple(dyadic(1, 256)), metadata=_kind("list:int"))
    per_N: int = field(default=50, metadata=_kind("int"))
    alpha: tuple = field(default=(1.0,), metadata=_kind("list:float"))
    mc_samples: int = field(default=0, metadata=_kind("int"))


@dataclass(frozen=True)
class SimulateSection:
    k: tuple = field(default=(1,), metadata=_kind("list:int"))
    sign: tuple = field(default=(1,), metadata=_kind("list:int"))
    dt: float = field(default=1e-3, metadata=_kind("float"))
    T: float = field(default=1.0, metadata=_kind("float"))
    stride: int = field(default=100, metadata=_kind("int"))
    amplitude: float = field(default=1.0, metadata=_kind("float"))
    band: int = field(default=4, metadata=_kind("int"))
    datum: str = field(default="random", metadata=_kind("str"))


@dataclass(frozen=True)
class IdentitiesSection:
    samples: int = field(default=1000, metadata=_kind("int"))
    bound: int = field(default=50, metadata=_kind("int"))
    den: int = field(default=97, metadata=_kind("int"))


@dataclass(frozen=True)
class ResonanceSection:
    samples: int = field(default=200, metadata=_kind("int"))
    N: tuple = field(default=tuple(dyadic(1, 64)), metadata=_kind("list:int"))


@dataclass(frozen=True)
class MultilinearSection:
    k: tuple = field(default=(2,), metadata=_kind("list:int"))
    s: tuple = field(default=(0.4,), metadata=_kind("list:float"))
    eps: tuple = field(default=(0.01,), metadata=_kind("list:float"))
    N: tuple = field(default=(4, 8, 16, 32), metadata=_kind("list:int"))
    samples: int = field(default=20, metadata=_kind("int"))


SECTIONS = {
    "grid": GridSection, "estimates": EstimatesSection,
    "counterexample": CounterexampleSection, "measure": MeasureSection,
    "simulate": SimulateSection, "identities": IdentitiesSection,
    "resonance": ResonanceSection, "multilinear": MultilinearSection,
}
_RUN_KEYS = {"seed": "int", "out": "str", "workers": "int", "plots": "bool",
             "experiments": "list:str"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description.

    ``seed`` is mandatory.  ``experiments`` lists the families to run, in
    order; each has a section (given or default).
    """

    seed: int
    out: str = "results"
    workers: int = 1
    plots: bool = False
    experiments: tuple = ()
    grid: GridSection = GridSection()
    estimates: EstimatesSection = EstimatesSection()
    counterexample: CounterexampleSection = CounterexampleSection()
    measure: MeasureSection = MeasureSection()
    simulate: SimulateSection = SimulateSection()
    identities: IdentitiesSection = IdentitiesSection()
    resonance: ResonanceSection = ResonanceSection()
    multilinear: MultilinearSection = MultilinearSection()

    def __post_init__(self):
        validate(self)

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        d = {"run": {"seed": self.seed, "out": self.out, "workers": self.workers,
                     "plots": self.plots, "experiments": list(self.experiments)}}
        for name in SECTIONS:
            sec = asdict(getattr(self, name))
            d[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in sec.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_ini(self) -> str:
        lines = ["[run]"]
        for k, kind in _RUN_KEYS.items():
            lines.append(f"{k} = {_encode(kind, getattr(self, k))}")
        for name in SECTIONS:
            sec = getattr(self, name)
            lines += ["", f"[{name}]"]
            for f in fields(sec):
                lines.append(f"{f.name} = {_encode(f.metadata['kind'], getattr(sec, f.name))}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        """sha256 of the canonical JSON form."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def replace(self, **changes) -> "ExperimentConfig":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(changes)
        return ExperimentConfig(**d)


# ---------------------------------------------------------------------------
# parsing


def _build_section(name: str, raw: dict) -> object:
    cls = SECTIONS[name]
    known = {f.name: f for f in fields(cls)}
    kw = {}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown key")
        kw[key] = _decode(known[key].metadata["kind"], value, f"{name}.{key}")
    return cls(**kw)


def from_dict(d: dict) -> ExperimentConfig:
    """Build a config from the nested mapping used by the JSON form."""
    if not isinstance(d, dict):
        raise ConfigError(None, "top level must be a mapping of sections")
    for name in d:
        if name != "run" and name not in SECTIONS:
            raise ConfigError(name, "unknown section")
    run = dict(d.get("run", {}))
    for key in run:
        if key not in _RUN_KEYS:
            raise ConfigError(f"run.{key}", "unknown key")
    if "seed" not in run or run["seed"] in (None, ""):
        raise ConfigError("run.seed", "a seed is mandatory")
    kw = {k: _decode(kind, run[k], f"run.{k}") for k, kind in _RUN_KEYS.items() if k in run}
    present = [n for n in d if n in FAMILIES]
    if "experiments" not in kw:
        kw["experiments"] = tuple(present)
    for name in SECTIONS:
        if name in d:
            kw[name] = _build_section(name, dict(d[name] or {}))
    return ExperimentConfig(**kw)


def parse_ini(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(None, f"syntax error: {exc}") from None
    return from_dict({s: dict(cp[s]) for s in cp.sections()})


def parse_json(text: str) -> ExperimentConfig:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(None, f"JSON error at line {exc.lineno}: {exc.msg}") from None
    return from_dict(d)


def load(path: str | Path) -> ExperimentConfig:
    """Read a config file; ``.json`` files are JSON, anything else INI."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(None, f"cannot read {path}: {exc.strerror}") from None
    if path.suffix.lower() == ".json":
        return parse_json(text)
    return parse_ini(text)


# ---------------------------------------------------------------------------
# validation


def _nonempty(cfg, section: str, key: str) -> tuple:
    v = getattr(getattr(cfg, section), key) if section != "run" else getattr(cfg, key)
    if len(v) == 0:
        raise ConfigError(f"{section}.{key}", "sweep list is empty")
    return v


def _positive(value, where: str, allow_zero: bool = False) -> None:
    if not (value > 0 or (allow_zero and value == 0)):
        raise ConfigError(where, f"must be {'non-negative' if allow_zero else 'positive'}")


def _dyadic_list(values, where: str) -> None:
    bad = [v for v in values if not is_dyadic(v)]
    if bad:
        raise ConfigError(where, f"not dyadic: {bad}")


def validate(cfg: ExperimentConfig) -> None:
    """Raise :class:`ConfigError` naming the first offending field."""
    from .harness import ESTIMATES

    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, int):
        raise ConfigError("run.seed", "a seed is mandatory and must be an integer")
    if cfg.seed < 0:
        raise ConfigError("run.seed", "must be non-negative")
    _positive(cfg.workers, "run.workers")
    for e in cfg.experiments:
        if e not in FAMILIES:
            raise ConfigError("run.experiments", f"unknown experiment {e!r}; choose from {FAMILIES}")
    try:
        cfg.grid.to_grid()
    except ContractViolation as exc:
        raise ConfigError("grid", str(exc)) from None

    est = cfg.estimates
    for key in ("N", "s", "b", "eps", "p", "alpha"):
        _nonempty(cfg, "estimates", key)
    if "estimates" in cfg.experiments:
        _nonempty(cfg, "estimates", "ids")
    for i in est.ids:
        if i not in ESTIMATES:
            raise ConfigError("estimates.ids", f"unknown estimate {i!r}")
    _dyadic_list(est.N, "estimates.N")
    _positive(est.samples, "estimates.samples")
    _positive(est.time_oversample, "estimates.time_oversample")

    ce = cfg.counterexample
    for key in ("N", "s", "b"):
        _nonempty(cfg, "counterexample", key)
    if any(n < 2 for n in ce.N):
        raise ConfigError("counterexample.N", "needs N >= 2")

    ms = cfg.measure
    for key in ("variant", "eps", "K", "N", "alpha"):
        _nonempty(cfg, "measure", key)
    for v in ms.variant:
        if v not in ("lin", "alpha"):
            raise ConfigError("measure.variant", f"unknown variant {v!r}")
    if ms.family not in MEASURE_FAMILIES:
        raise ConfigError("measure.family", f"choose from {MEASURE_FAMILIES}")
    for e in ms.eps:
        _positive(e, "measure.eps")
    _dyadic_list(ms.N, "measure.N")
    _positive(ms.per_N, "measure.per_N")
    _positive(ms.mc_samples, "measure.mc_samples", allow_zero=True)

    sm = cfg.simulate
    for key in ("k", "sign"):
        _nonempty(cfg, "simulate", key)
    if any(k < 1 for k in sm.k):
        raise ConfigError("simulate.k", "degrees must be positive")
    if any(s not in (1, -1) for s in sm.sign):
        raise ConfigError("simulate.sign", "signs must be +1 or -1")
    _positive(sm.dt, "simulate.dt")
    _positive(sm.T, "simulate.T")
    if sm.dt > sm.T:
        raise ConfigError("simulate.dt", "must not exceed simulate.T")
    _positive(sm.stride, "simulate.stride")
    _positive(sm.band, "simulate.band")
    if sm.datum not in DATA:
        raise ConfigError("simulate.datum", f"choose from {DATA}")

    _positive(cfg.identities.samples, "identities.samples")
    _positive(cfg.resonance.samples, "resonance.samples")
    _nonempty(cfg, "resonance", "N")

    ml = cfg.multilinear
    for key in ("k", "s", "eps", "N"):
        _nonempty(cfg, "multilinear", key)
    if any(k < 2 for k in ml.k):
        raise ConfigError("multilinear.k", "needs k >= 2")
    _dyadic_list(ml.N, "multilinear.N")
    _positive(ml.samples, "multilinear.samples")
