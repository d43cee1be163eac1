"""Compensated summation helpers.

The permutation sum near t = 0 and the alternating subset expansions
cancel heavily, so their term lists are reduced with error-free
transformations instead of naive accumulation.  For finished term lists
``math.fsum`` (exactly rounded) is used; for streaming partial sums the
Neumaier variant of Kahan's method keeps the running error compensated.
"""

from __future__ import annotations

import math
from typing import Iterable


def cfsum(values: Iterable[complex]) -> complex:
    """Exactly rounded sum of a finite complex term list."""
    vals = list(values)
    return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))


class NeumaierSum:
    """Running compensated sum of real values."""

    __slots__ = ("_s", "_c")

    def __init__(self) -> None:
        self._s = 0.0
        self._c = 0.0

    def add(self, x: float) -> None:
        t = self._s + x
        if abs(self._s) >= abs(x):
            self._c += (self._s - t) + x
        else:
            self._c += (x - t) + self._s
        self._s = t

    @property
    def value(self) -> float:
        return self._s + self._c


class ComplexNeumaierSum:
    """Running compensated sum of complex values."""

    __slots__ = ("_re", "_im")

    def __init__(self) -> None:
        self._re = NeumaierSum()
        self._im = NeumaierSum()

    def add(self, z: complex) -> None:
        self._re.add(z.real)
        self._im.add(z.imag)

    @property
    def value(self) -> complex:
        return complex(self._re.value, self._im.value)
