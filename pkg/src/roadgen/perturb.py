"""Sinusoidal road variants with temporal-logic rejection filtering.

A variant offsets the base spline by e(t) = sum_i A_i sin(w_i t + p_i)
along the local normal (or a fixed axis), refits a spline through the
offset points, and records the perturbation magnitude e1 and the
base-to-variant distance d1 as signals over the spline parameter scaled
by a time horizon. generate_variants drives seeded rejection sampling:
draw sinusoid parameters, monitor the requested formula on the trace,
and keep satisfying variants until the batch is full.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Spline2D, distance_lp, fit_spline, pointwise_distance_signal, CurveMetricParams
from .signals import SampledSignal, Trace
from .stl import Verdict, monitor
from .ioutil import atomic_write_text

__all__ = [
    "SinusoidTerm",
    "SinusoidParams",
    "PerturbRanges",
    "PerturbationTrace",
    "VariantBatch",
    "BudgetExhausted",
    "perturb_spline",
    "build_trace",
    "generate_variants",
    "max_deviation",
    "write_batch",
]

DIRECTIONS = ("normal", "axis-y")
DEFAULT_HORIZON = 10.0


class BudgetExhausted(RuntimeError):
    def __init__(self, accepted: int, requested: int, attempts: int):
        rate = accepted / attempts if attempts else 0.0
        super().__init__(
            f"accepted {accepted}/{requested} variants in {attempts} attempts "
            f"(acceptance rate {rate:.3f})")
        self.accepted = accepted
        self.requested = requested
        self.attempts = attempts
        self.acceptance_rate = rate


@dataclass(frozen=True)
class SinusoidTerm:
    amplitude: float          # px
    frequency: float          # rad per unit parameter
    phase: float              # rad

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")


@dataclass(frozen=True)
class SinusoidParams:
    terms: tuple[SinusoidTerm, ...]
    direction: str = "normal"

    def __post_init__(self):
        if len(self.terms) < 1:
            raise ValueError("at least one sinusoid term required")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True)
class PerturbRanges:
    """Uniform sampling ranges for rejection-sampled sinusoid parameters."""

    amplitude: tuple[float, float] = (0.0, 5.0)
    frequency: tuple[float, float] = (2.0 * np.pi, 6.0 * np.pi)
    phase: tuple[float, float] = (0.0, 2.0 * np.pi)
    n_terms: int = 1
    direction: str = "normal"

    def __post_init__(self):
        for name in ("amplitude", "frequency", "phase"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} range must satisfy lo <= hi")
        if self.amplitude[0] < 0:
            raise ValueError("amplitude range must be nonnegative")
        if self.n_terms < 1:
            raise ValueError("n_terms must be >= 1")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")


@dataclass(frozen=True)
class PerturbationTrace:
    e1: SampledSignal
    d1: SampledSignal

    def __post_init__(self):
        if not np.array_equal(self.e1.timestamps, self.d1.timestamps):
            raise ValueError("e1 and d1 must share timestamps")

    def as_trace(self) -> Trace:
        return Trace({"e1": self.e1, "d1": self.d1})


@dataclass(frozen=True)
class VariantBatch:
    base: Spline2D
    accepted: tuple[tuple[Spline2D, PerturbationTrace, Verdict], ...]
    rejected_count: int
    seed: int


def _offset_e(params: SinusoidParams, u: np.ndarray) -> np.ndarray:
    e = np.zeros_like(u)
    for term in params.terms:
        e += term.amplitude * np.sin(term.frequency * u + term.phase)
    return e


def _directions(base: Spline2D, params: SinusoidParams, u: np.ndarray) -> np.ndarray:
    if params.direction == "axis-y":
        d = np.zeros((len(u), 2))
        d[:, 1] = 1.0
        return d
    tangent = base.derivative(1)(np.clip(u, 0.0, np.nextafter(1.0, 0.0)))
    norm = np.linalg.norm(tangent, axis=1, keepdims=True)
    norm[norm < 1e-12] = 1.0
    unit = tangent / norm
    return np.column_stack([-unit[:, 1], unit[:, 0]])


def perturb_spline(base: Spline2D, params: SinusoidParams, samples: int,
                   horizon: float = DEFAULT_HORIZON) -> tuple[Spline2D, SampledSignal]:
    """Offset `samples` points of the base curve by the sinusoid sum and refit.

    The refit runs at the original parameter grid with the base's control
    point count, so a zero perturbation reproduces the base exactly. The
    returned e1 signal carries |e(t_k)| on timestamps t_k * horizon.
    """
    if samples < 4:
        raise ValueError("samples must be >= 4")
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    u = np.linspace(0.0, 1.0, samples)
    e = _offset_e(params, u)
    pts = base(u) + e[:, None] * _directions(base, params, u)
    result = fit_spline(pts, base.n_ctrl, params=u)
    e1 = SampledSignal("e1", u * horizon, np.abs(e))
    return result.spline, e1


def build_trace(base: Spline2D, variant: Spline2D, e1: SampledSignal) -> PerturbationTrace:
    """Pair e1 with d1, the pointwise base-to-variant distance on e1's grid."""
    d = pointwise_distance_signal(base, variant, len(e1))
    d1 = SampledSignal("d1", e1.timestamps, d.values)
    return PerturbationTrace(e1=e1, d1=d1)


def max_deviation(base: Spline2D, variant: Spline2D, samples: int = 1024) -> float:
    """d_inf between base and variant (sup of the pointwise distance)."""
    return distance_lp(base, variant, CurveMetricParams(p=np.inf, samples=samples))


def _draw_params(rng: np.random.Generator, ranges: PerturbRanges) -> SinusoidParams:
    terms = tuple(
        SinusoidTerm(
            amplitude=float(rng.uniform(*ranges.amplitude)),
            frequency=float(rng.uniform(*ranges.frequency)),
            phase=float(rng.uniform(*ranges.phase)),
        )
        for _ in range(ranges.n_terms)
    )
    return SinusoidParams(terms=terms, direction=ranges.direction)


def generate_variants(base: Spline2D, spec, n: int, sampling: PerturbRanges,
                      seed: int, max_attempts: int, samples: int = 256,
                      horizon: float = DEFAULT_HORIZON,
                      d1_reference: str = "base") -> VariantBatch:
    """Rejection sampling of spec-satisfying variants.

    Each attempt derives its own generator stream from (seed, attempt index),
    so batches are bit-reproducible and order-deterministic regardless of
    scheduling. d1_reference selects what d1 compares a candidate against:
    "base" (default) or "previous" (the latest accepted variant, the base
    before any acceptance).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if max_attempts < n:
        raise ValueError("max_attempts must be >= n")
    if d1_reference not in ("base", "previous"):
        raise ValueError("d1_reference must be 'base' or 'previous'")

    accepted: list[tuple[Spline2D, PerturbationTrace, Verdict]] = []
    reference = base
    attempts = 0
    for attempt in range(max_attempts):
        attempts += 1
        rng = np.random.default_rng([seed, attempt])
        params = _draw_params(rng, ranges=sampling)
        variant, e1 = perturb_spline(base, params, samples, horizon)
        ptrace = build_trace(reference, variant, e1)
        verdict = monitor(spec, ptrace.as_trace())
        if verdict.satisfied:
            accepted.append((variant, ptrace, verdict))
            if d1_reference == "previous":
                reference = variant
            if len(accepted) == n:
                break
    if len(accepted) < n:
        raise BudgetExhausted(len(accepted), n, attempts)
    return VariantBatch(base=base, accepted=tuple(accepted),
                        rejected_count=attempts - len(accepted), seed=seed)


def write_batch(batch: VariantBatch, outdir, spec_text: str) -> Path:
    """Write variant spline JSON files plus a manifest; returns manifest path."""
    from .geometry import spline_to_json

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    for i, (variant, _, _) in enumerate(batch.accepted):
        name = f"variant_{i:03d}.json"
        atomic_write_text(outdir / name, spline_to_json(variant))
        files.append(name)
    attempts = len(batch.accepted) + batch.rejected_count
    manifest = {
        "seed": batch.seed,
        "spec": spec_text,
        "requested": len(batch.accepted),
        "accepted": len(batch.accepted),
        "rejected": batch.rejected_count,
        "acceptance_rate": len(batch.accepted) / attempts if attempts else 0.0,
        "robustness": [v.robustness for _, _, v in batch.accepted],
        "files": files,
    }
    manifest_path = outdir / "manifest.json"
    atomic_write_text(manifest_path, json.dumps(manifest, indent=2))
    return manifest_path
