"""Margin reports produced by hypothesis checkers.

A checker evaluates one or more inequality margins on a finite sample set
and reports, per condition, the worst (largest) margin together with the
sample point attaining it.  Ties are broken by the lowest flattened
sample index, which is independent of the worker count.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ConditionReport:
    """Worst sampled margin of one inequality."""

    name: str
    worst_margin: float
    argmax: dict
    passed: bool
    strict: bool = False  # pass required margin < 0 instead of <= 0

    def to_dict(self):
        return {
            "name": self.name,
            "worst_margin": self.worst_margin,
            "argmax": {k: _jsonable(v) for k, v in self.argmax.items()},
            "passed": bool(self.passed),
            "strict": self.strict,
        }


@dataclass
class CheckReport:
    """Bundle of condition reports for one checker invocation."""

    name: str
    conditions: list
    extras: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.conditions)

    def condition(self, name):
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "conditions": [c.to_dict() for c in self.conditions],
            "extras": {k: _jsonable(v) for k, v in self.extras.items()},
        }


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def condition_from_margins(name, margins, argpoints, strict=False):
    """Build a ConditionReport from flattened margin values.

    ``argpoints`` maps coordinate names to arrays aligned with ``margins``.
    The reported argmax is the first index attaining the maximum.
    """
    margins = np.asarray(margins, dtype=float).reshape(-1)
    if margins.size == 0:
        raise ValueError("empty sample set")
    if not np.all(np.isfinite(margins)):
        bad = int(np.argmax(~np.isfinite(margins)))
        raise ValueError(f"{name}: non-finite margin at sample index {bad}")
    k = int(np.argmax(margins))
    worst = float(margins[k])
    arg = {}
    for key, vals in argpoints.items():
        vv = np.asarray(vals)
        arg[key] = vv[k] if vv.ndim > 1 else vv.reshape(-1)[k]
    passed = worst < 0.0 if strict else worst <= 0.0
    return ConditionReport(name, worst, arg, passed, strict)
