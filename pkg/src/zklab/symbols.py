"""Scalar symbols of the linear gZK flow on R x T.

Every function here is plain arithmetic, so it works unchanged on Python
ints, floats, :class:`fractions.Fraction` and NumPy arrays.  Exact rational
input gives exact rational output, which is what the identity checks rely on.
"""
from __future__ import annotations

import random
from fractions import Fraction
from typing import NamedTuple

import numpy as np


class FrequencyPoint(NamedTuple):
    """A spatial frequency (xi, q) with xi real and q an integer."""

    xi: float
    q: int


def phase(xi, q):
    """Dispersion symbol xi * (xi**2 + q**2)."""
    return xi * (xi * xi + q * q)


def dilated_norm_sq(xi, q):
    return 3 * xi * xi + q * q


def dilated_norm(xi, q):
    """Anisotropic magnitude sqrt(3 xi**2 + q**2)."""
    return np.sqrt(dilated_norm_sq(xi, q))


def bracket(*x):
    """Japanese bracket (1 + |x|_2**2) ** (1/2) of a scalar or a vector."""
    sq = 0
    for c in x:
        sq = sq + c * c
    return np.sqrt(1 + sq)


def h_parity(q):
    """0 for even q, 1/2 for odd q."""
    if isinstance(q, np.ndarray):
        return np.where(q % 2 == 0, 0.0, 0.5)
    return Fraction(int(q) % 2, 2)


def p_poly(xi, q, x, y):
    """The quadratic form xi (3 x**2 + y**2) + 2 q x y."""
    return xi * (3 * x * x + y * y) + 2 * q * x * y


def phase_pair_sum(xi, q, xi1, q1):
    """phi(xi1, q1) + phi(xi - xi1, q - q1)."""
    return phase(xi1, q1) + phase(xi - xi1, q - q1)


def phase_pair_sum_centered(xi, q, xi1, q1):
    """Same quantity as :func:`phase_pair_sum`, via the centred quadratic form.

    With ``x = xi1 - xi/2`` and ``y = q1 - q/2`` (so that ``y = q~1 + h(q)``)
    the pair sum equals ``p_poly(xi, q, x, y) + xi (xi**2 + q**2) / 4``.
    """
    h = h_parity(q)
    x = xi1 - Fraction(1, 2) * xi if _is_exact(xi, xi1) else xi1 - xi / 2
    qt = q1 - Fraction(q, 2) - h if _is_exact(q, q1) else q1 - q / 2 - h
    return p_poly(xi, q, x, qt + h) + xi * (xi * xi + q * q) / 4


def resonance2(xi, q, xi1, q1):
    """phi(xi, q) - phi(xi1, q1) - phi(xi - xi1, q - q1)."""
    return phase(xi, q) - phase(xi1, q1) - phase(xi - xi1, q - q1)


def resonance3(p1, p2, p3):
    """phi(p1 + p2 + p3) - sum_i phi(p_i) for three frequency points."""
    xi0 = p1[0] + p2[0] + p3[0]
    q0 = p1[1] + p2[1] + p3[1]
    return phase(xi0, q0) - phase(*p1) - phase(*p2) - phase(*p3)


def resonance3_factored(p1, p2, p3):
    """Cubic resonance as -6 (x1+x2)(x1+x3)(x2+x3) + sum x_i (|p0|^2 - |p_i|^2)."""
    (x1, q1), (x2, q2), (x3, q3) = p1, p2, p3
    x0, q0 = x1 + x2 + x3, q1 + q2 + q3
    d0 = dilated_norm_sq(x0, q0)
    tail = 0
    for x, q in (p1, p2, p3):
        tail = tail + x * (d0 - dilated_norm_sq(x, q))
    return -6 * (x1 + x2) * (x1 + x3) * (x2 + x3) + tail


def resonance3_rewritten(p1, p2, p3):
    """Cubic resonance as 12 (x1+x2)(x1+x3)(x2+x3) + x0 (q0^2 - 3 x0^2) - sum x_i (q_i^2 - 3 x_i^2)."""
    (x1, q1), (x2, q2), (x3, q3) = p1, p2, p3
    x0, q0 = x1 + x2 + x3, q1 + q2 + q3
    out = 12 * (x1 + x2) * (x1 + x3) * (x2 + x3) + x0 * (q0 * q0 - 3 * x0 * x0)
    for x, q in (p1, p2, p3):
        out = out - x * (q * q - 3 * x * x)
    return out


def _is_exact(*vals) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in vals)


def _random_fraction(rng: random.Random, bound: int, den: int) -> Fraction:
    return Fraction(rng.randint(-bound * den, bound * den), rng.randint(1, den))


def identity_defects(samples: int = 1000, seed: int = 0, bound: int = 50, den: int = 97) -> dict:
    """Evaluate every algebraic identity on random rational tuples.

    Returns the maximum absolute defect per identity, computed in exact
    rational arithmetic, so a correct implementation reports ``0`` for each.
    """
    rng = random.Random(seed)
    worst = {"pair_sum": Fraction(0), "resonance_factored": Fraction(0),
             "resonance_rewritten": Fraction(0)}
    for _ in range(samples):
        xi = _random_fraction(rng, bound, den)
        if xi == 0:
            xi = Fraction(1, den)
        q = rng.randint(-bound, bound)
        xi1 = _random_fraction(rng, bound, den)
        q1 = rng.randint(-bound, bound)
        d = abs(phase_pair_sum(xi, q, xi1, q1) - phase_pair_sum_centered(xi, q, xi1, q1))
        worst["pair_sum"] = max(worst["pair_sum"], d)

        pts = [(_random_fraction(rng, bound, den), rng.randint(-bound, bound)) for _ in range(3)]
        direct = resonance3(*pts)
        worst["resonance_factored"] = max(worst["resonance_factored"],
                                          abs(direct - resonance3_factored(*pts)))
        worst["resonance_rewritten"] = max(worst["resonance_rewritten"],
                                           abs(direct - resonance3_rewritten(*pts)))
    return worst
