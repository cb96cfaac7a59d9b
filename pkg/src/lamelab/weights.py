"""Exact weight handling: rationals stay Fractions, everything else is complex."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

Weight = Union[Fraction, complex]


def as_weight(x) -> Weight:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a weight")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        try:
            return Fraction(s)
        except ValueError:
            return complex(s.replace("i", "j"))
    if isinstance(x, float):
        f = Fraction(x).limit_denominator(1000)
        if abs(float(f) - x) < 1e-12:
            return f
        return complex(x)
    z = complex(x)
    if z.imag == 0:
        return as_weight(z.real)
    return z


def is_half_nat(w: Weight, allow_zero: bool = False) -> bool:
    """True when w lies in (1/2)Z_{>0} (or (1/2)Z_{>=0} with allow_zero)."""
    if not isinstance(w, Fraction):
        return False
    if (2 * w).denominator != 1:
        return False
    return w > 0 or (allow_zero and w == 0)


def is_nat(w: Weight) -> bool:
    return isinstance(w, Fraction) and w.denominator == 1 and w > 0


@dataclass(frozen=True)
class WeightVector:
    n: tuple

    def __init__(self, n: Sequence):
        vals = tuple(as_weight(x) for x in n)
        if any(v == 0 for v in vals):
            raise ValueError("weights must be nonzero")
        object.__setattr__(self, "n", vals)

    def __len__(self):
        return len(self.n)

    def __iter__(self):
        return iter(self.n)

    def __getitem__(self, i):
        return self.n[i]

    @property
    def r(self) -> int:
        return len(self.n)

    @property
    def total(self) -> Weight:
        return sum(self.n, Fraction(0))

    @property
    def total_int(self) -> int:
        t = self.total
        if isinstance(t, Fraction) and t.denominator == 1:
            return int(t)
        if isinstance(t, complex) and abs(t - round(t.real)) < 1e-9:
            return int(round(t.real))
        raise ValueError(f"total weight {t} is not an integer")

    @property
    def half_integer_index_set(self) -> tuple:
        return tuple(i for i, w in enumerate(self.n) if is_half_nat(w))

    @property
    def all_half_nat(self) -> bool:
        return all(is_half_nat(w) for w in self.n)

    @property
    def delta(self) -> int:
        """1 when every weight is a positive integer, else 0."""
        return int(all(is_nat(w) for w in self.n))

    def ells(self) -> tuple:
        return tuple(int(2 * w) for w in self.n)

    def complex_values(self) -> tuple:
        return tuple(complex(w) for w in self.n)

    def __str__(self):
        return ",".join(str(w) for w in self.n)


def parse_weights(text: str) -> WeightVector:
    return WeightVector([s for s in text.split(",") if s.strip()])
