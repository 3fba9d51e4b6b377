"""Information gain (bits) of problems and problem sets, and greedy selection.

A problem (or set of metric keys) acts as a noisy channel from "which
agent played" to "which agent we believe played".  Its value as a
benchmark is the mutual information of that channel under a uniform
prior: ``log2(n)`` minus the mean row entropy of the confusion matrix.
Greedy selection repeatedly adds the problem with the largest marginal
gain over the already-selected set.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .confusion import ROW_SUM_TOL, ConfusionMatrix, confusion
from .errors import CompletenessError
from .perf import Measure, MetricKey, PerformanceTable

EPS_GAIN = 1e-9

SELECTION_MODES = ("win", "score", "combined")


def row_entropies_bits(probs: np.ndarray) -> np.ndarray:
    """Shannon entropy of each row in bits, with the 0*log(0) = 0 convention."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0, probs * np.log2(np.where(probs > 0, probs, 1.0)), 0.0)
    return -terms.sum(axis=1)


def mutual_information(matrix: ConfusionMatrix | np.ndarray) -> float:
    """Bits of information one observation yields about the agent identity.

    Accepts a ConfusionMatrix or a raw row-stochastic array.  Equal to
    ``log2(n) - mean(row entropy)`` under the uniform agent prior.
    """
    probs = matrix.probs if isinstance(matrix, ConfusionMatrix) else np.asarray(matrix, dtype=float)
    if probs.ndim != 2 or probs.shape[0] != probs.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {probs.shape}")
    if np.any(probs < 0):
        raise ValueError("probabilities must be non-negative")
    sums = probs.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
        raise ValueError("rows must be stochastic (sum to 1)")
    n = probs.shape[0]
    return math.log2(n) - float(np.mean(row_entropies_bits(probs)))


def info_gain_set(
    table: PerformanceTable, keys: Sequence[MetricKey], noise: str = "sum"
) -> float:
    """Information gain in bits of observing all metric keys in the set."""
    return mutual_information(confusion(table, keys, noise))


def metric_keys_for(problem: str, mode: str) -> tuple[MetricKey, ...]:
    """The metric-key bundle one problem contributes under a selection mode."""
    if mode == "win":
        return (MetricKey(problem, Measure.WIN_RATE),)
    if mode == "score":
        return (MetricKey(problem, Measure.SCORE),)
    if mode == "combined":
        return (
            MetricKey(problem, Measure.WIN_RATE),
            MetricKey(problem, Measure.SCORE),
        )
    raise ValueError(f"unknown mode {mode!r}, expected one of {SELECTION_MODES}")


def info_gain_combined(
    table: PerformanceTable, problem: str, noise: str = "sum"
) -> float:
    """Gain of one problem using its win rate and score as two measurements."""
    keys = metric_keys_for(problem, "combined")
    for k in keys:
        if not table.has_key(k):
            raise CompletenessError(
                f"problem {problem!r} lacks a {k.measure.value} cell"
            )
    return info_gain_set(table, keys, noise)


@dataclass(frozen=True)
class SelectionStep:
    problem: str
    marginal_bits: float
    cumulative_bits: float


@dataclass(frozen=True)
class NegativeMarginal:
    """A candidate whose inclusion would have reduced the set's gain."""

    step: int
    problem: str
    marginal_bits: float


@dataclass(frozen=True)
class SelectionReport:
    """Ordered greedy picks with marginal and cumulative gain in bits.

    ``cumulative_bits`` of step t is the gain of the full selected set
    after t picks, so marginals always telescope exactly.  When no
    remaining candidate clears the gain threshold the report stops
    short of k and says why.
    """

    mode: str
    steps: tuple[SelectionStep, ...]
    stopped_early: bool = False
    stop_reason: str | None = None
    negative_marginals: tuple[NegativeMarginal, ...] = ()

    @property
    def selected(self) -> tuple[str, ...]:
        return tuple(s.problem for s in self.steps)

    @property
    def total_bits(self) -> float:
        return self.steps[-1].cumulative_bits if self.steps else 0.0


def _argmax_candidate(gains: dict[str, float], eps_gain: float) -> str:
    """Deterministic argmax: largest gain after rounding to the gain
    resolution, ties broken by lexicographically smallest identifier."""
    return min(gains, key=lambda c: (-round(gains[c] / eps_gain), c))


def _candidate_units(
    table: PerformanceTable, mode: str, per_key: bool
) -> dict[str, tuple[MetricKey, ...]]:
    units: dict[str, tuple[MetricKey, ...]] = {}
    for problem in table.problems:
        bundle = metric_keys_for(problem, mode)
        for k in bundle:
            if not table.has_key(k):
                raise CompletenessError(
                    f"problem {problem!r} lacks a {k.measure.value} cell "
                    f"required by mode {mode!r}"
                )
        if per_key:
            for k in bundle:
                units[f"{k.problem}:{k.measure.value}"] = (k,)
        else:
            units[problem] = bundle
    return units


def greedy_select(
    table: PerformanceTable,
    k: int,
    mode: str = "combined",
    *,
    noise: str = "sum",
    eps_gain: float = EPS_GAIN,
    per_key: bool = False,
    workers: int = 1,
) -> SelectionReport:
    """Greedily pick up to k problems maximizing joint information gain.

    Candidates whose marginal gain does not exceed ``eps_gain`` are
    never picked; if none remain the selection stops early.  With
    ``per_key`` each (problem, measure) cell is selected independently
    and identifiers read ``problem:measure``.  Candidate evaluation may
    be parallelized; the outcome is independent of evaluation order.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    units = _candidate_units(table, mode, per_key)
    if k > len(units):
        warnings.warn(
            f"k={k} exceeds the {len(units)} available candidates; selecting all",
            stacklevel=2,
        )
        k = len(units)

    selected_keys: list[MetricKey] = []
    remaining = sorted(units)
    steps: list[SelectionStep] = []
    negatives: list[NegativeMarginal] = []
    cumulative = 0.0
    stopped_early = False
    stop_reason = None

    def evaluate(candidate: str) -> tuple[str, float]:
        keys = selected_keys + list(units[candidate])
        return candidate, info_gain_set(table, keys, noise)

    for step in range(1, k + 1):
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                totals = dict(pool.map(evaluate, remaining))
        else:
            totals = dict(map(evaluate, remaining))
        gains = {c: totals[c] - cumulative for c in remaining}
        for c in sorted(gains):
            if gains[c] < -eps_gain:
                negatives.append(NegativeMarginal(step, c, gains[c]))
        best = _argmax_candidate(gains, eps_gain)
        if gains[best] <= eps_gain:
            stopped_early = True
            stop_reason = (
                f"stopped at step {step}: no remaining candidate adds more than "
                f"{eps_gain:g} bits (best was {best!r} at {gains[best]:.3g} bits)"
            )
            break
        selected_keys.extend(units[best])
        steps.append(SelectionStep(best, totals[best] - cumulative, totals[best]))
        cumulative = totals[best]
        remaining.remove(best)

    return SelectionReport(
        mode="per-key" if per_key else mode,
        steps=tuple(steps),
        stopped_early=stopped_early,
        stop_reason=stop_reason,
        negative_marginals=tuple(negatives),
    )


@dataclass(frozen=True)
class SubadditivityViolation:
    problem: str
    win_bits: float
    score_bits: float
    combined_bits: float

    @property
    def excess_bits(self) -> float:
        return self.combined_bits - (self.win_bits + self.score_bits)


def subadditivity_audit(
    table: PerformanceTable, noise: str = "sum", tol: float = EPS_GAIN
) -> list[SubadditivityViolation]:
    """Report problems whose combined gain exceeds the sum of the win-only
    and score-only gains.

    Combining two measurements of the same problem shares information,
    so the combined gain is expected not to exceed the sum; this is not
    guaranteed by the Gaussian belief model (weakly separated,
    correlated measures can sharpen each other), hence an audit rather
    than an assertion.
    """
    violations = []
    for problem in table.problems:
        win = info_gain_set(table, metric_keys_for(problem, "win"), noise)
        score = info_gain_set(table, metric_keys_for(problem, "score"), noise)
        combined = info_gain_set(table, metric_keys_for(problem, "combined"), noise)
        if combined - (win + score) > tol:
            violations.append(SubadditivityViolation(problem, win, score, combined))
    return violations
