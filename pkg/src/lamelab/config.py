"""Run configuration: parsing, validation, lossless serialization, and result records.

Documents are JSON objects. Complex numbers are written as [re, im] pairs and
rational weights as "a/b" strings, so half-integers survive a round trip exactly.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Any

import numpy as np

from .errors import ParseError, ValidationError
from .weights import as_weight

FORMATS = ("csv", "json")
U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class RunConfig:
    tau: complex | None = None
    n: tuple = ()
    p: tuple = ()
    c: complex | None = None
    t: complex | None = None
    s: complex | None = None
    tol: float = 1e-6
    seed: int = 0
    threads: int = 1
    out: str | None = None
    format: str = "json"
    options: dict = field(default_factory=dict)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "options" in kw:
            kw["options"] = {**self.options, **kw["options"]}
        return validate(replace(self, **kw))

    def __hash__(self):
        return hash(serialize(self))


# ------------------------------------------------------------------ scalars

def parse_complex(value, name: str = "value") -> complex:
    """[re, im], a bare real, or a string such as '0.2+1.1i'."""
    if isinstance(value, bool):
        raise ParseError("expected a complex number, got a boolean", field=name)
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        text = value.strip().replace(" ", "").replace("i", "j")
        try:
            return complex(text)
        except ValueError:
            pass
    raise ParseError(f"expected [re, im] or a complex literal, got {value!r}", field=name)


def parse_weight(value, name: str = "n"):
    if isinstance(value, (list, tuple)):
        return as_weight(parse_complex(value, name))
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ParseError(f"weights are 'a/b' strings, numbers or [re, im], got {value!r}", field=name)
    try:
        return as_weight(value)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"cannot read weight {value!r}", field=name) from None


def _emit_complex(z):
    return None if z is None else [float(complex(z).real), float(complex(z).imag)]


def _emit_weight(w):
    if isinstance(w, Fraction):
        return str(w)
    return _emit_complex(w)


# -------------------------------------------------------------------- parse

def parse_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    return config_from_dict(doc)


def config_from_dict(doc: dict) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    extra = set(doc) - known
    if extra:
        raise ParseError(f"unknown keys {sorted(extra)}", field=sorted(extra)[0])
    kw: dict[str, Any] = {}
    for key in ("tau", "c", "t", "s"):
        if doc.get(key) is not None:
            kw[key] = parse_complex(doc[key], key)
    if "n" in doc:
        if not isinstance(doc["n"], list):
            raise ParseError("n must be a list", field="n")
        kw["n"] = tuple(parse_weight(v, "n") for v in doc["n"])
    if "p" in doc:
        if not isinstance(doc["p"], list):
            raise ParseError("p must be a list", field="p")
        kw["p"] = tuple(parse_complex(v, "p") for v in doc["p"])
    if "tol" in doc:
        if isinstance(doc["tol"], bool) or not isinstance(doc["tol"], (int, float)):
            raise ParseError("tol must be a number", field="tol")
        kw["tol"] = float(doc["tol"])
    for key in ("seed", "threads"):
        if key in doc:
            if isinstance(doc[key], bool) or not isinstance(doc[key], int):
                raise ParseError(f"{key} must be an integer", field=key)
            kw[key] = doc[key]
    for key in ("out", "format"):
        if doc.get(key) is not None:
            if not isinstance(doc[key], str):
                raise ParseError(f"{key} must be a string", field=key)
            kw[key] = doc[key]
    if "options" in doc:
        if not isinstance(doc["options"], dict):
            raise ParseError("options must be an object", field="options")
        kw["options"] = dict(doc["options"])
    return validate(RunConfig(**kw))


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.tau is not None and not cfg.tau.imag > 0:
        raise ValidationError(f"Im(tau) must be positive, got {cfg.tau}", field="tau")
    for w in cfg.n:
        if w == 0:
            raise ValidationError("weights must be nonzero", field="n")
    if cfg.n and cfg.p and len(cfg.n) != len(cfg.p):
        raise ValidationError(f"{len(cfg.n)} weights but {len(cfg.p)} poles", field="p")
    if cfg.p and cfg.tau is not None:
        _check_poles(cfg.p, cfg.tau)
    if not cfg.tol > 0:
        raise ValidationError("tol must be positive", field="tol")
    if not 0 <= cfg.seed <= U64_MAX:
        raise ValidationError("seed must fit in an unsigned 64-bit integer", field="seed")
    if cfg.threads < 1:
        raise ValidationError("threads must be at least 1", field="threads")
    if cfg.format not in FORMATS:
        raise ValidationError(f"format must be one of {FORMATS}", field="format")
    return cfg


def _check_poles(p, tau):
    """Coincidence modulo Z + tau Z, via real coordinates in the basis (1, tau)."""
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            d = p[i] - p[j]
            v = d.imag / tau.imag
            u = d.real - v * tau.real
            if abs(u - round(u)) < 1e-10 and abs(v - round(v)) < 1e-10:
                raise ValidationError(f"poles {i} and {j} coincide modulo the lattice", field="p")


# ---------------------------------------------------------------- serialize

def config_to_dict(cfg: RunConfig) -> dict:
    return {
        "tau": _emit_complex(cfg.tau),
        "n": [_emit_weight(w) for w in cfg.n],
        "p": [_emit_complex(z) for z in cfg.p],
        "c": _emit_complex(cfg.c),
        "t": _emit_complex(cfg.t),
        "s": _emit_complex(cfg.s),
        "tol": cfg.tol,
        "seed": cfg.seed,
        "threads": cfg.threads,
        "out": cfg.out,
        "format": cfg.format,
        "options": cfg.options,
    }


def serialize(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), sort_keys=True, indent=2)


def config_hash(cfg: RunConfig) -> str:
    """Hash of the fields that determine results; out, format and threads are excluded."""
    doc = config_to_dict(cfg)
    for key in ("out", "format", "threads"):
        doc.pop(key)
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


# ------------------------------------------------------------------ records

def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the stamp for reproducible JSON output
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
            else _dt.datetime.now(_dt.timezone.utc))
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class ResultRecord:
    command: str
    config_hash: str
    columns: list
    rows: list
    residuals: dict = field(default_factory=dict)
    expected: int | None = None
    found: int | None = None
    extra: dict = field(default_factory=dict)
    timestamp: str = field(default_factory=_timestamp)

    @property
    def count_mismatch(self) -> bool:
        return self.expected is not None and self.found is not None and self.expected != self.found

    def payload(self) -> dict:
        return {"columns": self.columns, "rows": [[jsonable(v) for v in r] for r in self.rows],
                "extra": jsonable(self.extra)}

    def to_json(self) -> str:
        doc = {"command": self.command, "config_hash": self.config_hash, "timestamp": self.timestamp,
               "payload": self.payload(), "residuals": jsonable(self.residuals),
               "counts": {"expected": self.expected, "found": self.found}}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        import csv
        import io
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([csv_cell(v) for v in r])
        return buf.getvalue()


def jsonable(v):
    """Plain JSON types: complex as [re, im], Fractions as strings."""
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v if v is None or isinstance(v, str) else str(v)


def csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return f"{float(v.real)!r}{float(v.imag):+.17g}j"
    return str(v)
