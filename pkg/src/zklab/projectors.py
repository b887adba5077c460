"""Littlewood-Paley projectors and sharp Fourier-region projectors.

The smooth cutoff ``mu`` equals 1 on ``[-5/4, 5/4]`` and vanishes outside
``[-8/5, 8/5]``; it is the classical smooth step built from ``exp(-1/x)``.
Shell multipliers are ``psi_1 = mu(|(xi, q)|)`` and
``psi_N = psi(|(xi, q)| / N)`` with ``psi(x) = mu(x) - mu(2x)``, so the dyadic
family telescopes to exactly one.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import symbols
from .errors import ContractViolation
from .grid import SpaceTimeField, SpectralField

PLATEAU = 5.0 / 4.0
SUPPORT = 8.0 / 5.0


def _smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def mu(x) -> np.ndarray:
    """Even bump: 1 on ``|x| <= 5/4``, 0 on ``|x| >= 8/5``, smooth in between."""
    r = np.abs(np.asarray(x, dtype=float))
    out = _smooth_step((SUPPORT - r) / (SUPPORT - PLATEAU))
    return out if out.ndim else float(out)


def psi(x) -> np.ndarray:
    """Dyadic shell profile ``mu(x) - mu(2x)``, supported in ``5/8 <= |x| <= 8/5``."""
    x = np.asarray(x, dtype=float)
    out = mu(x) - mu(2 * x)
    return out


def is_dyadic(N) -> bool:
    n = int(N)
    return n == N and n >= 1 and (n & (n - 1)) == 0


def _check_dyadic(N) -> int:
    if not is_dyadic(N):
        raise ContractViolation(f"dyadic index must be a power of two >= 1, got {N}")
    return int(N)


def shell_weight(r, N: int) -> np.ndarray:
    """``psi_N`` evaluated on a radius array (dilated magnitude or modulation)."""
    N = _check_dyadic(N)
    r = np.abs(np.asarray(r, dtype=float))
    if N == 1:
        return mu(r)
    return psi(r / N)


def dyadic_range(rmax: float) -> list[int]:
    """All dyadic N whose shell can meet ``[0, rmax]``, up to ``4 * rmax``."""
    out, N = [1], 2
    while N <= max(4.0 * rmax, 1.0):
        out.append(N)
        N *= 2
    return out


def _apply_spatial(u, mult: np.ndarray, keep_real: bool = True):
    if isinstance(u, SpaceTimeField):
        return u.replace(u.coeffs * mult[None], real=u.real and keep_real)
    if isinstance(u, SpectralField):
        return u.replace(u.coeffs * mult, real=u.real and keep_real)
    raise ContractViolation(f"expected a SpectralField or SpaceTimeField, got {type(u).__name__}")


def _dilated(grid) -> np.ndarray:
    XI, Q = grid.mesh()
    return symbols.dilated_norm(XI, Q)


def apply_PN(u, N: int):
    """Smooth spatial shell projector ``P_N``."""
    return _apply_spatial(u, shell_weight(_dilated(u.grid), N))


def apply_QL(U: SpaceTimeField, L: int) -> SpaceTimeField:
    """Smooth modulation shell projector ``Q_L``.

    In the modulation frame the multiplier depends on ``sigma`` only.
    """
    if not isinstance(U, SpaceTimeField):
        raise ContractViolation("Q_L acts on space-time fields")
    w = shell_weight(U.grid.sigma, L)
    return U.replace(U.coeffs * w[:, None, None])


def p_alpha_mask(grid, alpha: float, kappa: float = 1.0, kappa2: float = 1.0) -> np.ndarray:
    """Indicator of ``|3 xi^2 - q^2| >= kappa |xi|^alpha`` and ``|xi| >= kappa2``."""
    if not 0.0 <= alpha <= 1.0:
        raise ContractViolation(f"alpha must lie in [0, 1], got {alpha}")
    if kappa <= 0 or kappa2 <= 0:
        raise ContractViolation("kappa constants must be positive")
    XI, Q = grid.mesh()
    ax = np.abs(XI)
    return ((np.abs(3 * XI**2 - Q**2) >= kappa * ax**alpha) & (ax >= kappa2)).astype(float)


def apply_P_alpha(u, alpha: float, kappa: float = 1.0, kappa2: float = 1.0):
    """Sharp projector onto the transversal region used by the bilinear refinement."""
    return _apply_spatial(u, p_alpha_mask(u.grid, alpha, kappa, kappa2))


def apply_QN_beta(u, N: int, beta: float, kappa: float = 1.0):
    """Sharp y-frequency cutoff ``|q| <= kappa N^beta``."""
    N = _check_dyadic(N)
    if kappa <= 0:
        raise ContractViolation("kappa must be positive")
    bound = kappa * float(N) ** beta
    keep = (np.abs(u.grid.q) <= bound + 1e-12).astype(float)
    return _apply_spatial(u, np.broadcast_to(keep[None, :], u.grid.shape))


# ---------------------------------------------------------------------------
# region descriptors

REGION_KINDS = ("xi-vs-q-power", "hyperbola-gap", "half-space", "custom")


@dataclass(frozen=True)
class Region:
    """A sharp frequency region.

    ``xi-vs-q-power`` with ``theta``: ``|xi| <= |q|^theta``.
    ``hyperbola-gap`` with ``threshold``: ``|3 xi^2 - q^2| > threshold``.
    ``half-space`` with ``sign``: ``sign * xi > 0``.
    ``custom`` wraps a callable ``(XI, Q) -> bool array``; it does not serialise.
    """

    name: str
    params: dict = field(default_factory=dict)
    func: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.name not in REGION_KINDS:
            raise ContractViolation(f"unknown region descriptor {self.name!r}")
        if self.name == "custom" and self.func is None:
            raise ContractViolation("custom region needs a callable")

    def mask(self, grid) -> np.ndarray:
        XI, Q = grid.mesh()
        p = self.params
        if self.name == "xi-vs-q-power":
            m = np.abs(XI) <= np.abs(Q) ** float(p["theta"]) + 1e-12
        elif self.name == "hyperbola-gap":
            m = np.abs(3 * XI**2 - Q**2) > float(p["threshold"])
        elif self.name == "half-space":
            m = np.sign(float(p.get("sign", 1))) * XI > 0
        else:
            m = np.asarray(self.func(XI, Q), dtype=bool)
        return m.astype(float)

    def to_json(self) -> str:
        if self.name == "custom":
            raise ContractViolation("custom regions cannot be serialised")
        return json.dumps({"name": self.name, "params": self.params}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str | dict) -> "Region":
        d = json.loads(text) if isinstance(text, str) else dict(text)
        if "name" not in d:
            raise ContractViolation("region descriptor needs a name")
        return cls(d["name"], dict(d.get("params", {})))


def region_projector(u, region: Region, complement: bool = False):
    """Apply a sharp region multiplier (or its complement).

    A half-space projector breaks conjugate symmetry, so its output is
    flagged complex.
    """
    if not isinstance(region, Region):
        raise ContractViolation(f"unknown region descriptor {region!r}")
    m = region.mask(u.grid)
    if complement:
        m = 1.0 - m
    return _apply_spatial(u, m, keep_real=region.name not in ("half-space", "custom"))
