"""Structured outcome of a sampled axiom or theorem check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class Inconclusive(RuntimeError):
    """A search or schedule ran out of budget before reaching a verdict."""

    def __init__(self, message: str, best: Any = None, stage: str | None = None):
        super().__init__(message)
        self.best = best
        self.stage = stage


@dataclass
class VerificationReport:
    check: str
    passed: bool
    samples: int = 0
    seed: int | None = None
    margin: float | None = None
    witness: Any = None
    details: dict = field(default_factory=dict)
    inconclusive: bool = False

    def __post_init__(self):
        if not self.passed and not self.inconclusive and self.witness is None:
            raise ValueError(f"failing report {self.check!r} needs a witness")

    @property
    def status(self) -> str:
        if self.inconclusive:
            return "inconclusive"
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "pass": self.passed,
            "status": self.status,
            "margin": jsonable(self.margin),
            "witness": jsonable(self.witness),
            "samples": self.samples,
            "seed": self.seed,
            "details": jsonable(self.details),
        }


class WorstCase:
    """Tracks the smallest margin seen; ties keep the first sample."""

    def __init__(self):
        self.margin = math.inf
        self.witness = None

    def update(self, margin: float, witness_fn) -> None:
        if margin < self.margin:
            self.margin = margin + 0.0  # drop the sign of -0.0
            self.witness = witness_fn()

    @property
    def value(self) -> float | None:
        return None if self.margin == math.inf else self.margin


def jsonable(obj):
    """Recursively convert numpy values, tuples and DistFns into JSON-ready data."""
    from .distfn import DistFn

    if isinstance(obj, DistFn):
        return {"xs": list(obj.xs), "vs": list(obj.vs)}
    if isinstance(obj, np.ndarray):
        return [jsonable(x) for x in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    return obj
