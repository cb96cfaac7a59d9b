"""q-graded Grothendieck ring of sl2 highest-weight classes.

Two rules generate everything:

    M_a (x) M_b = sum_k q^k M_{a+b-k}
    M_n = L_n + q^{2n+1} M_{-n-1}        (n in (1/2)Z, n >= 0)

Weights are symbolic: an integer-free linear form in opaque tags plus a
rational offset, so whether a weight is a nonnegative half-integer is decided
exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple

from .errors import ParseError
from .weights import WeightVector, is_half_nat


@dataclass(frozen=True, order=True)
class SymWeight:
    """offset + sum(coeff * tag); tags are generic parameters."""

    tags: tuple = ()
    offset: Fraction = Fraction(0)

    @staticmethod
    def generic(tag: str, offset=0) -> "SymWeight":
        return SymWeight(((tag, Fraction(1)),), Fraction(offset))

    @staticmethod
    def of(x) -> "SymWeight":
        if isinstance(x, SymWeight):
            return x
        if isinstance(x, str):
            return parse_sym_weight(x)
        return SymWeight((), Fraction(x))

    @staticmethod
    def _norm(d: dict) -> tuple:
        return tuple(sorted((t, c) for t, c in d.items() if c != 0))

    def __add__(self, other) -> "SymWeight":
        other = SymWeight.of(other)
        d = dict(self.tags)
        for t, c in other.tags:
            d[t] = d.get(t, Fraction(0)) + c
        return SymWeight(self._norm(d), self.offset + other.offset)

    __radd__ = __add__

    def __neg__(self) -> "SymWeight":
        return SymWeight(tuple((t, -c) for t, c in self.tags), -self.offset)

    def __sub__(self, other) -> "SymWeight":
        return self + (-SymWeight.of(other))

    def __rsub__(self, other) -> "SymWeight":
        return SymWeight.of(other) - self

    def scale(self, m) -> "SymWeight":
        m = Fraction(m)
        return SymWeight(self._norm({t: m * c for t, c in self.tags}), m * self.offset)

    @property
    def is_rational(self) -> bool:
        return not self.tags

    @property
    def value(self) -> Fraction:
        if self.tags:
            raise ValueError(f"weight {self} is generic")
        return self.offset

    def is_half_nat(self, allow_zero: bool = True) -> bool:
        return self.is_rational and is_half_nat(self.offset, allow_zero=allow_zero)

    def __str__(self):
        parts = []
        for t, c in self.tags:
            if c == 1:
                parts.append(f"+{t}")
            elif c == -1:
                parts.append(f"-{t}")
            else:
                parts.append(f"{'+' if c > 0 else '-'}{abs(c)}*{t}")
        if self.offset != 0 or not parts:
            parts.append(f"{'+' if self.offset >= 0 else '-'}{abs(self.offset)}")
        s = "".join(parts)
        return s[1:] if s.startswith("+") else s


_TERM = re.compile(r"([+-]?)\s*(?:(\d+(?:/\d+)?)\s*\*?\s*)?([A-Za-z_]\w*)?")


def parse_sym_weight(text: str) -> SymWeight:
    """Parse forms like "1/2", "g", "-g+3/2", "2*g-1"."""
    s = text.replace(" ", "")
    if not s:
        raise ParseError("empty weight")
    pos = 0
    w = SymWeight()
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos or (m.group(2) is None and m.group(3) is None):
            raise ParseError(f"cannot parse weight {text!r} at position {pos}")
        sign = -1 if m.group(1) == "-" else 1
        num = Fraction(m.group(2)) if m.group(2) else Fraction(1)
        if m.group(3):
            w = w + SymWeight(((m.group(3), sign * num),))
        else:
            w = w + sign * num
        pos = m.end()
        if pos < len(s) and s[pos] not in "+-":
            raise ParseError(f"cannot parse weight {text!r} at position {pos}")
    return w


@dataclass(frozen=True, order=True)
class ModuleClass:
    kind: str  # "M" (Verma) or "L" (simple)
    weight: SymWeight

    def __post_init__(self):
        if self.kind not in ("M", "L"):
            raise ValueError(f"unknown module kind {self.kind!r}")
        if self.kind == "L" and not self.weight.is_half_nat():
            raise ValueError(f"simple class needs weight in (1/2)Z>=0, got {self.weight}")

    def __str__(self):
        return f"{self.kind}_{{{self.weight}}}"


def verma(w) -> ModuleClass:
    return ModuleClass("M", SymWeight.of(w))


def simple(w) -> ModuleClass:
    return ModuleClass("L", SymWeight.of(w))


def natural_class(w) -> ModuleClass:
    """L for weights in (1/2)Z>=0, M otherwise."""
    w = SymWeight.of(w)
    return ModuleClass("L" if w.is_half_nat() else "M", w)


@dataclass
class RingElement:
    """sum of coeff * q^k [class], terms with k > order dropped."""

    terms: dict = field(default_factory=dict)
    order: int = 6

    def __post_init__(self):
        self.terms = {key: c for key, c in self.terms.items() if c != 0 and key[0] <= self.order}

    @staticmethod
    def of(cls: ModuleClass, order: int = 6, k: int = 0, coeff: int = 1) -> "RingElement":
        return RingElement({(k, cls): coeff}, order)

    def copy(self, order=None) -> "RingElement":
        return RingElement(dict(self.terms), self.order if order is None else order)

    def _combine(self, other, sign):
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, 0) + sign * c
        return RingElement(out, min(self.order, other.order))

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return RingElement({key: -c for key, c in self.terms.items()}, self.order)

    def __eq__(self, other):
        if not isinstance(other, RingElement):
            return NotImplemented
        order = min(self.order, other.order)
        a = {key: c for key, c in self.terms.items() if key[0] <= order}
        b = {key: c for key, c in other.terms.items() if key[0] <= order}
        return a == b

    def shift(self, k: int) -> "RingElement":
        return RingElement({(j + k, cls): c for (j, cls), c in self.terms.items()}, self.order)

    def items(self):
        return sorted(self.terms.items(), key=lambda kv: (kv[0][0], kv[0][1].kind, kv[0][1].weight))

    def coefficient(self, k: int, cls: ModuleClass) -> int:
        return self.terms.get((k, cls), 0)

    @property
    def is_normal(self) -> bool:
        return all(not (cls.kind == "M" and cls.weight.is_half_nat()) for (_, cls) in self.terms)

    def __str__(self):
        if not self.terms:
            return "0"
        out = []
        for (k, cls), c in self.items():
            qk = "" if k == 0 else ("q " if k == 1 else f"q^{k} ")
            coef = "" if c == 1 else ("-" if c == -1 else f"{c} ")
            out.append(f"{coef}{qk}{cls}")
        return " + ".join(out).replace("+ -", "- ")


def decompose_verma(n, order: int = 6) -> RingElement:
    """[M_n] = [L_n] + q^{2n+1}[M_{-n-1}] for n in (1/2)Z>=0."""
    w = SymWeight.of(n)
    if not w.is_half_nat():
        raise ValueError(f"decomposition needs n in (1/2)Z>=0, got {w}")
    k = int(2 * w.value + 1)
    return RingElement({(0, simple(w)): 1, (k, verma(-w - 1)): 1}, order)


def to_verma(e: RingElement) -> RingElement:
    """Rewrite simple classes as L_n = M_n - q^{2n+1} M_{-n-1}."""
    out: dict = {}
    for (k, cls), c in e.terms.items():
        if cls.kind == "M":
            out[(k, cls)] = out.get((k, cls), 0) + c
            continue
        w = cls.weight
        out[(k, verma(w))] = out.get((k, verma(w)), 0) + c
        key = (k + int(2 * w.value + 1), verma(-w - 1))
        out[key] = out.get(key, 0) - c
    return RingElement(out, e.order)


def normal_form(e: RingElement) -> RingElement:
    """Replace every Verma class of weight in (1/2)Z>=0 by its decomposition.

    The tail class M_{-n-1} has negative weight, so one pass reaches the
    fixpoint; the loop guards against future rule additions anyway.
    """
    cur = e
    while not cur.is_normal:
        out: dict = {}
        for (k, cls), c in cur.terms.items():
            if cls.kind == "M" and cls.weight.is_half_nat():
                for (j, cls2), c2 in decompose_verma(cls.weight, cur.order).terms.items():
                    out[(k + j, cls2)] = out.get((k + j, cls2), 0) + c * c2
            else:
                out[(k, cls)] = out.get((k, cls), 0) + c
        cur = RingElement(out, cur.order)
    return cur


def tensor(e1: RingElement, e2: RingElement, order: int | None = None) -> RingElement:
    """Bilinear Verma rule, result in normal form."""
    order = min(e1.order, e2.order) if order is None else order
    a, b = to_verma(e1.copy(order)), to_verma(e2.copy(order))
    out: dict = {}
    for (k1, c1), x1 in a.terms.items():
        for (k2, c2), x2 in b.terms.items():
            base = c1.weight + c2.weight
            for j in range(order - k1 - k2 + 1):
                key = (k1 + k2 + j, verma(base - j))
                out[key] = out.get(key, 0) + x1 * x2
    return normal_form(RingElement(out, order))


def tensor_all(factors: Iterable[RingElement], order: int) -> RingElement:
    factors = list(factors)
    if not factors:
        raise ValueError("empty tensor product")
    acc = normal_form(factors[0].copy(order))
    for f in factors[1:]:
        acc = tensor(acc, f, order)
    return acc


# characters: a term e^{2x} at grading degree d is stored under (x, d)

def character(e: RingElement, order: int | None = None) -> dict:
    """Formal character truncated at total degree order.

    ch M_w = sum_j e^{2(w-j)}; a class at q^k contributes at degree k+j, which
    keeps the truncation compatible with both ring rules.
    """
    order = e.order if order is None else order
    ch: dict = {}
    for (k, cls), c in e.terms.items():
        w = cls.weight
        top = order - k
        if cls.kind == "L":
            top = min(top, int(2 * w.value))
        for j in range(top + 1):
            key = (w - j, k + j)
            ch[key] = ch.get(key, 0) + c
    return {key: c for key, c in ch.items() if c != 0}


def character_product(ch1: dict, ch2: dict, order: int) -> dict:
    out: dict = {}
    for (x1, d1), c1 in ch1.items():
        for (x2, d2), c2 in ch2.items():
            if d1 + d2 <= order:
                key = (x1 + x2, d1 + d2)
                out[key] = out.get(key, 0) + c1 * c2
    return {key: c for key, c in out.items() if c != 0}


def _series_mul(a: list, b: list, kmax: int) -> list:
    out = [0] * (kmax + 1)
    for i, x in enumerate(a[: kmax + 1]):
        if x:
            for j, y in enumerate(b[: kmax + 1 - i]):
                out[i + j] += x * y
    return out


def generating_series(n, kmax: int) -> list:
    """Coefficients of prod_{j in I}(1 - x^{2n_j+1}) / (1-x)^{r-1} up to x^kmax."""
    ws = [SymWeight.of(w) if isinstance(w, (str, SymWeight)) else SymWeight.of(w) for w in n]
    r = len(ws)
    series = [1] + [0] * kmax
    for w in ws:
        if w.is_half_nat(allow_zero=False):
            f = [0] * (kmax + 1)
            f[0] = 1
            e = int(2 * w.value + 1)
            if e <= kmax:
                f[e] = -1
            series = _series_mul(series, f, kmax)
    geom = [1] * (kmax + 1)
    for _ in range(r - 1):
        series = _series_mul(series, geom, kmax)
    return series


def _total_int(ws) -> int:
    total = SymWeight()
    for w in ws:
        total = total + w
    if not total.is_rational or total.value.denominator != 1 or total.value <= 0:
        raise ValueError(f"total weight {total} is not a positive integer")
    return int(total.value)


def c_coefficients(n, kmax: int | None = None) -> list:
    """c_k(n) for k = 0..kmax, kmax defaulting to (and capped at) n-1."""
    if isinstance(n, WeightVector):
        n = [w if not isinstance(w, complex) else None for w in n.n]
        if any(w is None for w in n):
            raise ValueError("complex weights need symbolic tags; pass SymWeights")
    ws = [SymWeight.of(w) for w in n]
    total = _total_int(ws)
    if kmax is None:
        kmax = total - 1
    if kmax > total - 1:
        raise ValueError(f"kmax={kmax} outside the stratum range 0..{total - 1}")
    return generating_series(ws, kmax)


def c_coefficients_by_tensor(n, kmax: int | None = None) -> list:
    """Same numbers read off the iterated tensor product: coefficient of q^k M_{n-k}
    in the Verma expansion."""
    ws = [SymWeight.of(w) for w in n]
    total = _total_int(ws)
    if kmax is None:
        kmax = total - 1
    prod = tensor_all([RingElement.of(natural_class(w), kmax) for w in ws], kmax)
    flat = to_verma(prod)
    return [flat.coefficient(k, verma(total - k)) for k in range(kmax + 1)]


class Stratum(NamedTuple):
    k: int
    weight: SymWeight
    coefficient: int
    included: bool


def _default_order(w1: SymWeight, w2: SymWeight) -> int:
    cands = [4]
    for w in (w1, w2, w1 + w2):
        if w.is_rational:
            cands.append(int(2 * abs(w.value)) + 2)
    return max(cands)


def predict_strata(n1, n2, order: int | None = None) -> list:
    """Strata of the collision p1 -> p2 read from [n1] (x) [n2] in normal form.

    Each factor is L when its weight lies in (1/2)Z>=0 and M otherwise. The
    coefficient at q^k counts every class of weight n1+n2-k (L or M);
    included means it is positive.
    """
    w1, w2 = SymWeight.of(n1), SymWeight.of(n2)
    order = _default_order(w1, w2) if order is None else order
    prod = tensor(RingElement.of(natural_class(w1), order), RingElement.of(natural_class(w2), order), order)
    total = w1 + w2
    out = []
    for k in range(order + 1):
        wk = total - k
        c = prod.coefficient(k, verma(wk))
        if wk.is_half_nat():
            c += prod.coefficient(k, simple(wk))
        out.append(Stratum(k, wk, c, c > 0))
    return out


def strata_index_set(n1, n2, order: int | None = None) -> set:
    return {s.k for s in predict_strata(n1, n2, order) if s.included}


def collision_case(n1, n2) -> int:
    """Which special case applies: 0 generic, 1..4 as in the degeneration corollary."""
    w1, w2 = SymWeight.of(n1), SymWeight.of(n2)
    h1, h2, hs = w1.is_half_nat(False), w2.is_half_nat(False), (w1 + w2).is_half_nat(False)
    neg2 = w2.is_rational and w2.value < 0 and (2 * w2.value).denominator == 1
    if h1 and h2:
        return 4
    if h1 and neg2 and hs:
        return 3
    if h1 and not w2.is_rational:
        return 1
    if not w1.is_rational and not w2.is_rational and hs:
        return 2
    return 0


def parse_factor(text: str) -> ModuleClass:
    """"M:1/2", "L:3/2", "M:g+1/2"."""
    try:
        kind, w = text.split(":", 1)
    except ValueError:
        raise ParseError(f"factor {text!r} must look like KIND:WEIGHT") from None
    kind = kind.strip().upper()
    try:
        return ModuleClass(kind, parse_sym_weight(w))
    except ValueError as exc:
        raise ParseError(str(exc)) from None
