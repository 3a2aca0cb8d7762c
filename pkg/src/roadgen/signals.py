"""Finite timestamped signals and multi-signal traces.

A SampledSignal is a named, finite, strictly increasing sequence of
(timestamp, value) pairs. A Trace bundles several signals sharing one
timestamp vector; it is the input to the temporal-logic monitor and the
carrier of the e1/d1 perturbation signals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = ["SampledSignal", "Trace", "trace_from_json", "trace_to_json"]


@dataclass(frozen=True)
class SampledSignal:
    name: str
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float)
        vs = np.asarray(self.values, dtype=float)
        if ts.ndim != 1 or vs.ndim != 1 or len(ts) != len(vs):
            raise ValueError("timestamps and values must be 1-d and equal length")
        if len(ts) < 1:
            raise ValueError("signal must contain at least one sample")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(vs))):
            raise ValueError("timestamps and values must be finite")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vs)

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class Trace:
    signals: dict[str, SampledSignal] = field(default_factory=dict)

    def __post_init__(self):
        if not self.signals:
            raise ValueError("trace must contain at least one signal")
        ref = next(iter(self.signals.values())).timestamps
        for sig in self.signals.values():
            if len(sig.timestamps) != len(ref) or not np.array_equal(sig.timestamps, ref):
                raise ValueError("all signals in a trace must share one timestamp vector")

    @property
    def timestamps(self) -> np.ndarray:
        return next(iter(self.signals.values())).timestamps

    def __len__(self) -> int:
        return len(self.timestamps)

    def __getitem__(self, name: str) -> SampledSignal:
        return self.signals[name]

    def __contains__(self, name: str) -> bool:
        return name in self.signals


def trace_from_json(text: str) -> Trace:
    """Parse a trace from JSON: {"timestamps": [...], "signals": {name: [...]}}."""
    obj = json.loads(text)
    if not isinstance(obj, dict) or "timestamps" not in obj or "signals" not in obj:
        raise ValueError("trace JSON must contain 'timestamps' and 'signals'")
    ts = obj["timestamps"]
    sigs = obj["signals"]
    if not isinstance(sigs, dict) or not sigs:
        raise ValueError("'signals' must be a nonempty object")
    return Trace({name: SampledSignal(name, ts, vals) for name, vals in sigs.items()})


def trace_to_json(trace: Trace) -> str:
    obj = {
        "timestamps": trace.timestamps.tolist(),
        "signals": {name: sig.values.tolist() for name, sig in trace.signals.items()},
    }
    return json.dumps(obj)
