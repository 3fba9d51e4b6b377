"""Synthetic corpora with known structure, plus the reference oracle.

The generator produces playthrough records from per-problem archetypes
(score noise is Gaussian, wins are Bernoulli), fully determined by the
seed; the random stream is numpy's seeded PCG64 (``default_rng``), so
fixtures reproduce across platforms.

``oracle_info_gain`` is the reference implementation used to validate
the main path: a deliberately naive direct evaluation with plain-float
products and quotients, no log-space rearrangement, sharing no
numerical code with the confusion or info-gain modules.  It refuses
inputs outside its safe range instead of silently losing precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .perf import (
    Measure,
    MetricKey,
    PerformanceStat,
    PerformanceTable,
    PlaythroughRecord,
    SIGMA_FLOOR_DEFAULT,
    aggregate,
)

ARCHETYPE_KINDS = ("identical", "linear", "two_cluster", "delayed", "duplicate")

ORACLE_MAX_AGENTS = 8
ORACLE_MAX_KEYS = 4


class OracleRangeError(ValueError):
    """The oracle refuses inputs outside its direct-evaluation range."""


@dataclass(frozen=True)
class Archetype:
    """Statistical character of one synthetic problem.

    identical    every agent shares the same score mean and win rate.
    linear       score means spread in equal steps of ``gap``; win rates
                 spread evenly across (0, 1).
    two_cluster  agents split into a weak and a strong half.
    delayed      score means anti-ordered against win rates, like
                 problems that only pay out score at the very end.
    duplicate    same distribution parameters as an earlier problem
                 (``source`` is its index).
    """

    kind: str
    gap: float = 10.0
    sigma: float = 1.0
    source: int | None = None

    def __post_init__(self):
        if self.kind not in ARCHETYPE_KINDS:
            raise ValueError(f"unknown archetype {self.kind!r}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if (self.kind == "duplicate") != (self.source is not None):
            raise ValueError("source must be given for duplicates and only for them")


@dataclass(frozen=True)
class SynthSpec:
    """Full description of a synthetic corpus; the seed pins everything."""

    agents: int
    archetypes: tuple[Archetype, ...]
    samples_per_cell: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.agents < 1:
            raise ValueError("need at least one agent")
        if not self.archetypes:
            raise ValueError("need at least one problem archetype")
        if self.samples_per_cell < 1:
            raise ValueError("need at least one sample per cell")
        for i, arch in enumerate(self.archetypes):
            if arch.kind == "duplicate" and not 0 <= arch.source < i:
                raise ValueError(
                    f"problem {i}: duplicate source {arch.source} must point to "
                    "an earlier problem"
                )

    @property
    def agent_names(self) -> tuple[str, ...]:
        return tuple(f"agent{i:02d}" for i in range(self.agents))

    @property
    def problem_names(self) -> tuple[str, ...]:
        return tuple(f"prob{i:02d}" for i in range(len(self.archetypes)))


def _archetype_params(spec: SynthSpec) -> list[tuple[np.ndarray, float, np.ndarray]]:
    """Per problem: (score means, score sigma, win probabilities), per agent."""
    n = spec.agents
    params: list[tuple[np.ndarray, float, np.ndarray]] = []
    for arch in spec.archetypes:
        if arch.kind == "duplicate":
            params.append(params[arch.source])
            continue
        if arch.kind == "identical":
            mu = np.full(n, 10.0)
            p = np.full(n, 0.5)
        elif arch.kind == "linear":
            mu = arch.gap * np.arange(n, dtype=float)
            p = np.linspace(0.1, 0.9, n) if n > 1 else np.array([0.5])
        elif arch.kind == "two_cluster":
            half = (n + 1) // 2
            mu = np.where(np.arange(n) < half, 0.0, arch.gap)
            p = np.where(np.arange(n) < half, 0.2, 0.8)
        elif arch.kind == "delayed":
            mu = arch.gap * np.arange(n - 1, -1, -1, dtype=float)
            p = np.linspace(0.1, 0.9, n) if n > 1 else np.array([0.5])
        else:  # pragma: no cover
            raise AssertionError(arch.kind)
        params.append((mu, arch.sigma, p))
    return params


def generate(spec: SynthSpec) -> list[PlaythroughRecord]:
    """Draw the full record list for a spec; byte-identical per seed.

    Draw order is fixed: problems outermost, then agents, and for each
    cell the win outcomes before the scores.
    """
    rng = np.random.default_rng(spec.seed)
    params = _archetype_params(spec)
    records: list[PlaythroughRecord] = []
    m = spec.samples_per_cell
    for problem, (mu, sigma, p) in zip(spec.problem_names, params):
        for a_idx, agent in enumerate(spec.agent_names):
            wins = rng.random(m) < p[a_idx]
            scores = rng.normal(mu[a_idx], sigma, m)
            records.extend(
                PlaythroughRecord(agent, problem, float(s), bool(w))
                for s, w in zip(scores, wins)
            )
    return records


def exact_table(
    spec: SynthSpec, sigma_floor: float = SIGMA_FLOOR_DEFAULT
) -> PerformanceTable:
    """The population-parameter table a spec converges to with infinite samples.

    Win-rate stddev is the Bernoulli population value sqrt(p(1-p)),
    floored.  Useful for tests that need exact structure with no
    sampling noise.
    """
    params = _archetype_params(spec)
    cells: dict[tuple[str, MetricKey], PerformanceStat] = {}
    for problem, (mu, sigma, p) in zip(spec.problem_names, params):
        for a_idx, agent in enumerate(spec.agent_names):
            cells[(agent, MetricKey(problem, Measure.SCORE))] = PerformanceStat(
                float(mu[a_idx]), float(sigma), spec.samples_per_cell
            )
            win_sd = math.sqrt(p[a_idx] * (1.0 - p[a_idx]))
            cells[(agent, MetricKey(problem, Measure.WIN_RATE))] = PerformanceStat(
                float(p[a_idx]), win_sd, spec.samples_per_cell
            )
    return PerformanceTable.from_stats(cells, sigma_floor)


def sampled_table(spec: SynthSpec) -> PerformanceTable:
    """Generate records for a spec and aggregate them."""
    return aggregate(generate(spec))


def fixture_suite() -> list[tuple[str, PerformanceTable]]:
    """The shipped fixture tables exercised by the audit-style tests.

    Every fixture keeps at least one strongly separated measure per
    problem: weakly separated correlated measures are exactly the
    regime where the combined-gain audit is expected to flag
    sharpening, and these fixtures are the baseline that must not.
    """
    specs = [
        (
            "identical-exact",
            SynthSpec(5, (Archetype("identical"),) * 3, seed=101),
        ),
        (
            "linear-strong",
            SynthSpec(5, (Archetype("linear", gap=12.0),) * 4, seed=102),
        ),
        (
            "two-cluster",
            SynthSpec(6, (Archetype("two_cluster", gap=15.0),) * 3, seed=103),
        ),
        (
            "delayed",
            SynthSpec(5, (Archetype("delayed", gap=14.0),) * 3, seed=104),
        ),
        (
            "mixed-with-duplicate",
            SynthSpec(
                5,
                (
                    Archetype("linear", gap=12.0),
                    Archetype("duplicate", source=0),
                    Archetype("two_cluster", gap=15.0),
                    Archetype("delayed", gap=14.0),
                ),
                seed=105,
            ),
        ),
    ]
    tables = [(name, exact_table(spec)) for name, spec in specs]
    tables += [
        (
            "linear-sampled",
            sampled_table(SynthSpec(5, (Archetype("linear", gap=12.0),) * 3,
                                    samples_per_cell=2000, seed=106)),
        ),
        (
            "delayed-sampled",
            sampled_table(SynthSpec(5, (Archetype("delayed", gap=14.0),) * 2,
                                    samples_per_cell=2000, seed=107)),
        ),
    ]
    return tables


# ---------------------------------------------------------------------------
# Reference oracle
# ---------------------------------------------------------------------------


def _oracle_scale(sd_obs: float, sd_cand: float, noise: str) -> float:
    if noise == "sum":
        return sd_obs + sd_cand
    if noise == "rss":
        return math.sqrt(sd_obs * sd_obs + sd_cand * sd_cand)
    raise ValueError(f"unknown noise combination {noise!r}")


def oracle_confusion_rows(
    table: PerformanceTable, keys: Sequence[MetricKey], noise: str = "sum"
) -> list[list[float]]:
    """Direct per-row evaluation of the belief probabilities."""
    agents = table.agents
    if len(agents) > ORACLE_MAX_AGENTS:
        raise OracleRangeError(
            f"oracle handles at most {ORACLE_MAX_AGENTS} agents, got {len(agents)}"
        )
    if len(keys) > ORACLE_MAX_KEYS:
        raise OracleRangeError(
            f"oracle handles at most {ORACLE_MAX_KEYS} metric keys, got {len(keys)}"
        )
    stats = {
        (a, k): table.stat(a, k) for a in agents for k in keys
    }
    rows: list[list[float]] = []
    for obs in agents:
        weights: list[float] = []
        for cand in agents:
            w = 1.0
            for k in keys:
                s_obs, s_cand = stats[(obs, k)], stats[(cand, k)]
                scale = _oracle_scale(s_obs.stddev, s_cand.stddev, noise)
                diff = s_obs.mean - s_cand.mean
                density = math.exp(-(diff * diff) / (2.0 * scale * scale))
                density /= math.sqrt(2.0 * math.pi * scale * scale)
                w *= density
            weights.append(w)
        total = math.fsum(weights)
        if total <= 0.0 or not math.isfinite(total):
            raise OracleRangeError(
                "direct evaluation left the representable range "
                f"(row weight sum {total!r}); narrow the inputs"
            )
        rows.append([w / total for w in weights])
    return rows


def oracle_info_gain(
    table: PerformanceTable, keys: Sequence[MetricKey], noise: str = "sum"
) -> float:
    """Reference information gain in bits by direct summation."""
    rows = oracle_confusion_rows(table, keys, noise)
    n = len(rows)
    entropy_sum = 0.0
    for row in rows:
        entropy_sum += math.fsum(-p * math.log2(p) for p in row if p > 0.0)
    return math.log2(n) - entropy_sum / n


def _oracle_keys_for(problem: str, mode: str) -> list[MetricKey]:
    keys = []
    if mode in ("win", "combined"):
        keys.append(MetricKey(problem, Measure.WIN_RATE))
    if mode in ("score", "combined"):
        keys.append(MetricKey(problem, Measure.SCORE))
    if not keys:
        raise ValueError(f"unknown mode {mode!r}")
    return keys


def oracle_greedy_select(
    table: PerformanceTable,
    k: int,
    mode: str = "combined",
    noise: str = "sum",
    eps_gain: float = 1e-9,
) -> list[str]:
    """Naive re-implementation of the greedy rule on top of the oracle."""
    problems = sorted(table.problems)
    selected: list[MetricKey] = []
    picked: list[str] = []
    cumulative = 0.0
    for _ in range(min(k, len(problems))):
        gains = {
            p: oracle_info_gain(table, selected + _oracle_keys_for(p, mode), noise)
            - cumulative
            for p in problems
            if p not in picked
        }
        best = min(gains, key=lambda p: (-round(gains[p] / eps_gain), p))
        if gains[best] <= eps_gain:
            break
        picked.append(best)
        selected.extend(_oracle_keys_for(best, mode))
        cumulative += gains[best]
    return picked


def oracle_best_subset(
    table: PerformanceTable, size: int, mode: str = "combined", noise: str = "sum"
) -> tuple[tuple[str, ...], float]:
    """Exhaustive search over problem subsets of the given size."""
    from itertools import combinations

    best: tuple[str, ...] = ()
    best_gain = -math.inf
    for combo in combinations(sorted(table.problems), size):
        keys: list[MetricKey] = []
        for p in combo:
            keys.extend(_oracle_keys_for(p, mode))
        gain = oracle_info_gain(table, keys, noise)
        if gain > best_gain:
            best, best_gain = combo, gain
    return best, best_gain
