"""Experiment configuration: JSON file schema, measure specs, validation.

A measure spec is a small dict, e.g. ``{"type": "gaussian", "mean": 0, "std": 1}``.
Specs are normalised on load so that ``load(dump(cfg)) == cfg``. Exact numbers
(atom values, masses, matrix entries) are stored as strings like ``"1/4"``.
"""

from __future__ import annotations

import json
import secrets
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from .matrix_core import MAX_K, DEFAULT_RANK_TOL
from .measures import (
    DEFAULT_ENUMERATION_BUDGET,
    AtomicMixture,
    FiniteSupport,
    Gaussian,
    IidEntries,
    MassSumError,
    MeasureError,
    RankOneMixture,
    Rademacher,
    Uniform,
)
from .montecarlo import DEFAULT_TRIALS
from .spectra import DEFAULT_TAU, Policy

COMMANDS = ("estimate", "sweep", "oracle", "bound-check", "lemma-check")
FORMATS = ("json", "csv", "svg")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class UnknownMeasureError(ConfigError):
    pass


class DimensionRangeError(ConfigError):
    pass


class MassSumConfigError(ConfigError):
    pass


def _q(x) -> str:
    return str(Fraction(str(x)) if isinstance(x, float) else Fraction(x))


def _continuous_spec(spec: dict) -> dict:
    kind = spec.get("type")
    if kind in ("gaussian", "normal"):
        return {"type": "gaussian", "mean": float(spec.get("mean", 0.0)), "std": float(spec.get("std", 1.0))}
    if kind == "uniform":
        return {"type": "uniform", "lo": float(spec.get("lo", -1.0)), "hi": float(spec.get("hi", 1.0))}
    raise UnknownMeasureError(f"unknown continuous measure {kind!r}")


def normalize_measure(spec: Any) -> dict:
    """Canonical dict form of a measure spec (string shorthand or dict)."""
    if isinstance(spec, str):
        spec = parse_measure_shorthand(spec)
    if not isinstance(spec, dict) or "type" not in spec:
        raise UnknownMeasureError(f"measure spec must name a type: {spec!r}")
    kind = spec["type"]
    if kind in ("gaussian", "normal", "uniform"):
        return _continuous_spec(spec)
    if kind == "rademacher":
        return {"type": "rademacher"}
    if kind == "atomic":
        atoms = [[_q(v), _q(w)] for v, w in spec.get("atoms", [])]
        cont = spec.get("continuous")
        return {"type": "atomic", "atoms": atoms, "continuous": None if cont is None else _continuous_spec(cont)}
    if kind == "rank-one-mixture":
        return {"type": "rank-one-mixture", "p1": _q(spec["p1"]), "generic": normalize_measure(spec.get("generic", "gaussian"))}
    if kind == "finite":
        support = [
            {"matrix": [[_q(x) for x in row] for row in item["matrix"]], "mass": _q(item["mass"])}
            for item in spec["support"]
        ]
        return {"type": "finite", "support": support}
    raise UnknownMeasureError(f"unknown measure type {kind!r}")


def parse_measure_shorthand(text: str) -> dict:
    """``gaussian``, ``gaussian:0,1``, ``uniform:-1,1``, ``rademacher``,
    ``atomic:0@1/4,1@3/4`` or ``atomic:0@1/2+gaussian:0,1``; a leading ``{``
    means inline JSON."""
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    head, _, cont = text.partition("+")
    name, _, params = head.partition(":")
    name = name.strip().lower()
    args = [p for p in params.split(",") if p.strip()] if params else []
    if name in ("gaussian", "normal"):
        mean, std = (args + ["0", "1"][len(args):])[:2]
        return {"type": "gaussian", "mean": float(mean), "std": float(std)}
    if name == "uniform":
        lo, hi = (args + ["-1", "1"][len(args):])[:2]
        return {"type": "uniform", "lo": float(lo), "hi": float(hi)}
    if name == "rademacher":
        return {"type": "rademacher"}
    if name == "atomic":
        atoms = []
        for item in args:
            value, _, mass = item.partition("@")
            if not mass:
                raise ConfigError(f"atom {item!r} needs the form value@mass")
            atoms.append([value.strip(), mass.strip()])
        return {"type": "atomic", "atoms": atoms,
                "continuous": parse_measure_shorthand(cont) if cont else None}
    raise UnknownMeasureError(f"unknown measure {name!r}")


def _build_entry(spec: dict):
    kind = spec["type"]
    if kind == "gaussian":
        return Gaussian(spec["mean"], spec["std"])
    if kind == "uniform":
        return Uniform(spec["lo"], spec["hi"])
    if kind == "rademacher":
        return Rademacher()
    if kind == "atomic":
        cont = spec["continuous"]
        return AtomicMixture(
            tuple((Fraction(v), Fraction(w)) for v, w in spec["atoms"]),
            None if cont is None else _build_entry(cont),
        )
    raise UnknownMeasureError(f"{kind!r} is not an entry law")


def build_measure(spec: dict, k: int):
    """Turn a canonical spec into a measure object."""
    try:
        kind = spec["type"]
        if kind == "finite":
            measure = FiniteSupport(tuple(
                ([[Fraction(x) for x in row] for row in item["matrix"]], Fraction(item["mass"]))
                for item in spec["support"]
            ))
            if measure.k != k:
                raise DimensionRangeError(f"support matrices are {measure.k}x{measure.k}, k={k}")
            return measure
        if kind == "rank-one-mixture":
            return RankOneMixture(Fraction(spec["p1"]), IidEntries(_build_entry(spec["generic"]), k))
        return IidEntries(_build_entry(spec), k)
    except MassSumError as exc:
        raise MassSumConfigError(f"mass sum != 1: {exc}") from exc
    except MeasureError as exc:
        raise ConfigError(str(exc)) from exc


def parse_n_values(value) -> list[int]:
    """``5``, ``[1, 2, 4]``, ``"1..8"``, ``"1,2,4"`` or ``"1..64:x2"`` (geometric)."""
    if isinstance(value, int):
        out = [value]
    elif isinstance(value, (list, tuple)):
        out = [int(v) for v in value]
    else:
        out = []
        for part in str(value).split(","):
            part = part.strip()
            if ".." in part:
                rng, _, step = part.partition(":")
                lo, hi = (int(x) for x in rng.split(".."))
                if step.startswith("x"):
                    factor = int(step[1:])
                    if factor < 2:
                        raise ConfigError("geometric step must be at least x2")
                    n = lo
                    while n <= hi:
                        out.append(n)
                        n *= factor
                else:
                    out.extend(range(lo, hi + 1, int(step) if step else 1))
            elif part:
                out.append(int(part))
    if not out or any(n < 1 for n in out):
        raise ConfigError("n values must be positive integers")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError("n values must be strictly increasing")
    return out


@dataclass
class ExperimentConfig:
    command: str
    k: int
    measure: dict
    n: list = field(default_factory=lambda: [1])
    trials: int = DEFAULT_TRIALS
    seed: Optional[int] = None
    policy: str = "fallback"
    tau: float = DEFAULT_TAU
    rank_tol: float = DEFAULT_RANK_TOL
    confidence: float = 0.95
    budget: int = DEFAULT_ENUMERATION_BUDGET
    workers: int = 1
    output: Optional[str] = None
    formats: list = field(default_factory=lambda: ["json"])

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not isinstance(self.k, int) or not 1 <= self.k <= MAX_K:
            raise DimensionRangeError(f"k={self.k!r} outside [1, {MAX_K}]")
        self.measure = normalize_measure(self.measure)
        self.n = parse_n_values(self.n)
        if self.command == "estimate" and len(self.n) != 1:
            raise ConfigError("estimate takes a single n; use sweep for several")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.seed is None:
            self.seed = secrets.randbits(63)
        self.seed = int(self.seed)
        if self.policy not in ("float", "exact", "fallback"):
            raise ConfigError(f"unknown policy {self.policy!r}")
        if not self.tau > 0 or not self.rank_tol > 0:
            raise ConfigError("tolerances must be positive")
        if not 0 < self.confidence < 1:
            raise ConfigError("confidence must lie in (0, 1)")
        self.formats = list(self.formats)
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ConfigError(f"unknown output format(s) {bad}")
        # build once to surface measure errors at parse time
        self.build_measure()

    def build_measure(self):
        return build_measure(self.measure, self.k)

    def build_policy(self) -> Policy:
        return Policy(self.policy, self.tau, self.rank_tol)

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"command", "k", "measure"} - set(data)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        return cls(**data)

    @classmethod
    def loads(cls, text: str) -> ExperimentConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        return cls.loads(Path(path).read_text())
