"""Exact number helpers.

All weight and metric arithmetic in this package runs on ``int`` or
``fractions.Fraction`` so equality tests (distance ties, LARAC termination)
are reliable. Floats coming from instance files are converted exactly; they
are never compared directly.
"""

from __future__ import annotations

import math
from fractions import Fraction

Number = int | Fraction


def exact(value) -> Number:
    """Convert to an exact number, collapsing integral fractions to ``int``."""
    if isinstance(value, bool):
        raise TypeError("bool is not a weight")
    if isinstance(value, int):
        return value
    frac = Fraction(value)
    return frac.numerator if frac.denominator == 1 else frac


def as_fraction(value) -> Fraction:
    if isinstance(value, bool):
        raise TypeError("bool is not a number")
    return Fraction(value)


def float_up(value: Number) -> float:
    """Smallest float that is >= ``value``.

    Used when serializing exact bounds so a JSON round trip can only relax
    a feasibility test, never break it.
    """
    f = float(value)
    if Fraction(f) < Fraction(value):
        f = math.nextafter(f, math.inf)
    return f


def scale_to_int(values: list[Fraction | int]) -> tuple[list[int], int]:
    """Rescale exact values to integers over a common denominator.

    Returns ``(scaled, denominator)`` with ``scaled[i] / denominator``
    equal to ``values[i]`` exactly.
    """
    denom = 1
    for v in values:
        if isinstance(v, Fraction):
            denom = math.lcm(denom, v.denominator)
    scaled = [int(v * denom) for v in values]
    return scaled, denom
