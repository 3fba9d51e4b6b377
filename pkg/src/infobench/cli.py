"""Command-line front end: ingest logs, rank problems, select subsets,
correlate and cluster, and render heatmaps.

Every command is a batch operation: read files, write files, print a
short summary.  Exit codes are stable for scripting: 0 success, 1 the
requested quantity is undefined for the data (domain error), 2 bad
input or usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .cluster import CorrelationMatrix, cluster, correlation_matrix
from .confusion import NOISE_MODES, confusion
from .errors import DomainError, InputError
from .heatmap import render_heatmap
from .infogain import (
    SELECTION_MODES,
    greedy_select,
    info_gain_set,
    metric_keys_for,
)
from .perf import (
    Measure,
    MetricKey,
    PerformanceTable,
    SIGMA_FLOOR_DEFAULT,
    aggregate,
    dumps_canonical_json,
    load_stats,
    parse_records_path,
    stats_json_document,
    write_stats_csv,
)
from .synth import ARCHETYPE_KINDS, Archetype, SynthSpec, generate

ALL_FORMATS = ("csv", "json", "svg")

ARCHETYPE_CHOICES = ("identical", "linear", "two-cluster", "delayed", "mixed")

_MIXED_CYCLE = ("linear", "two_cluster", "delayed")


@dataclass
class RunConfig:
    """Resolved settings for one command run (flags > config file > defaults)."""

    input: str | None = None
    stats: str | None = None
    out: Path = Path(".")
    formats: tuple[str, ...] = ("csv", "json", "svg")
    metric: str = "combined"
    k: int = 10
    sigma_floor: float = SIGMA_FLOOR_DEFAULT
    eps_gain: float = 1e-9
    noise: str = "sum"
    threshold: float = 0.8
    allow_missing: bool = False
    per_key: bool = False
    problems_list: tuple[str, ...] = ()
    agents: int = 5
    problems: int = 10
    archetype: str = "mixed"
    gap: float = 10.0
    sigma: float = 1.0
    samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        for name in ("k", "agents", "problems", "samples"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be a positive integer")
        for name in ("sigma_floor", "eps_gain", "threshold", "gap", "sigma"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be strictly positive")
        if self.metric not in SELECTION_MODES:
            raise InputError(f"metric must be one of {SELECTION_MODES}")
        if self.noise not in NOISE_MODES:
            raise InputError(f"noise must be one of {NOISE_MODES}")
        bad = [f for f in self.formats if f not in ALL_FORMATS]
        if bad:
            raise InputError(f"unknown output format(s): {', '.join(bad)}")


def _read_config_file(path: str) -> dict[str, str]:
    """Parse a key=value config file; '#' starts a comment line."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config file: {exc}")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


_BOOL_TOKENS = {"1": True, "true": True, "yes": True, "0": False, "false": False, "no": False}


def _cast_bool(raw: str) -> bool:
    try:
        return _BOOL_TOKENS[raw.lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {raw!r}")


def _resolve(flag_value, config: dict[str, str], key: str, default, cast):
    if flag_value is not None:
        return flag_value
    if key in config:
        try:
            return cast(config[key])
        except ValueError as exc:
            raise InputError(f"config key {key!r}: {exc}")
    return default


def _formats_from(text: str) -> tuple[str, ...]:
    return tuple(f.strip() for f in text.split(",") if f.strip())


def build_config(args: argparse.Namespace) -> RunConfig:
    config = _read_config_file(args.config) if args.config else {}
    get = lambda name, default, cast: _resolve(
        getattr(args, name.replace("-", "_"), None), config, name, default, cast
    )
    return RunConfig(
        input=getattr(args, "input", None),
        stats=getattr(args, "stats", None),
        out=Path(get("out", ".", str)),
        formats=get("format", ALL_FORMATS, _formats_from),
        metric=get("metric", "combined", str),
        k=get("k", 10, int),
        sigma_floor=get("sigma-floor", SIGMA_FLOOR_DEFAULT, float),
        eps_gain=get("eps-gain", 1e-9, float),
        noise=get("noise", "sum", str),
        threshold=get("threshold", 0.8, float),
        allow_missing=get("allow-missing", False, _cast_bool),
        per_key=get("per-key", False, _cast_bool),
        problems_list=tuple(
            p.strip() for p in (getattr(args, "problems_list", None) or "").split(",") if p.strip()
        ),
        agents=get("agents", 5, int),
        problems=get("problems", 10, int),
        archetype=get("archetype", "mixed", str),
        gap=get("gap", 10.0, float),
        sigma=get("sigma", 1.0, float),
        samples=get("samples", 1000, int),
        seed=get("seed", 0, int),
    )


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _outdir(cfg: RunConfig) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path}")


def _load_table(cfg: RunConfig) -> PerformanceTable:
    if not cfg.stats:
        raise InputError("missing --stats FILE (aggregated stats from 'ingest')")
    return load_stats(cfg.stats)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_ingest(cfg: RunConfig) -> int:
    if not cfg.input:
        raise InputError("missing --input FILE (playthrough CSV)")
    records = parse_records_path(cfg.input)
    table = aggregate(records, cfg.sigma_floor, allow_missing=cfg.allow_missing)
    out = _outdir(cfg)
    if "csv" in cfg.formats:
        with open(out / "stats.csv", "w", newline="", encoding="utf-8") as f:
            write_stats_csv(table, f)
        print(f"wrote {out / 'stats.csv'}")
    if "json" in cfg.formats:
        _write_text(out / "stats.json", dumps_canonical_json(stats_json_document(table)))

    counts = np.asarray(table.counts)
    per_pair = counts[:, :: 2]  # one column per problem (win/score share the count)
    print(f"agents:   {len(table.agents)}")
    print(f"problems: {len(table.problems)}")
    print(f"records:  {len(records)}")
    print(
        "samples per agent-problem pair: "
        f"min {per_pair.min()} / avg {per_pair.mean():.1f} / max {per_pair.max()}"
    )
    for i, agent in enumerate(table.agents):
        print(f"  {agent}: avg {per_pair[i].mean():.1f} samples per problem")
    return 0


def _gain_rows(table: PerformanceTable, noise: str) -> list[dict]:
    rows = []
    for problem in table.problems:
        row = {"problem": problem}
        for mode in SELECTION_MODES:
            row[f"{mode}_bits"] = info_gain_set(table, metric_keys_for(problem, mode), noise)
        rows.append(row)
    rows.sort(key=lambda r: (-r["combined_bits"], r["problem"]))
    return rows


def cmd_info_gain(cfg: RunConfig) -> int:
    table = _load_table(cfg)
    rows = _gain_rows(table, cfg.noise)
    out = _outdir(cfg)
    if "csv" in cfg.formats:
        _write_csv(
            out / "info_gain.csv",
            ("problem", "win_bits", "score_bits", "combined_bits"),
            [
                (r["problem"], repr(r["win_bits"]), repr(r["score_bits"]), repr(r["combined_bits"]))
                for r in rows
            ],
        )
    if "json" in cfg.formats:
        doc = {
            "noise": cfg.noise,
            "gains": rows,
            "ranking_by": {
                mode: [
                    r["problem"]
                    for r in sorted(rows, key=lambda r: (-r[f"{mode}_bits"], r["problem"]))
                ]
                for mode in SELECTION_MODES
            },
        }
        _write_text(out / "info_gain.json", dumps_canonical_json(doc))
    top = rows[: min(5, len(rows))]
    print("top problems by combined gain:")
    for r in top:
        print(f"  {r['problem']}: {r['combined_bits']:.8f} bits")
    return 0


def _selection_text(report) -> str:
    lines = [f"{'rank':>4}  {'problem':<24} {'marginal_bits':>14} {'cumulative_bits':>16}"]
    for rank, step in enumerate(report.steps, start=1):
        lines.append(
            f"{rank:>4}  {step.problem:<24} {step.marginal_bits:>14.8f} "
            f"{step.cumulative_bits:>16.8f}"
        )
    if report.stopped_early:
        lines.append(f"(early stop: {report.stop_reason})")
    for neg in report.negative_marginals:
        lines.append(
            f"(step {neg.step}: skipped {neg.problem!r}, marginal "
            f"{neg.marginal_bits:.3g} bits < 0)"
        )
    return "\n".join(lines) + "\n"


def cmd_select(cfg: RunConfig) -> int:
    table = _load_table(cfg)
    report = greedy_select(
        table,
        cfg.k,
        cfg.metric,
        noise=cfg.noise,
        eps_gain=cfg.eps_gain,
        per_key=cfg.per_key,
    )
    out = _outdir(cfg)
    if "csv" in cfg.formats:
        _write_csv(
            out / "selection.csv",
            ("rank", "problem", "marginal_bits", "cumulative_bits"),
            [
                (rank, s.problem, repr(s.marginal_bits), repr(s.cumulative_bits))
                for rank, s in enumerate(report.steps, start=1)
            ],
        )
    if "json" in cfg.formats:
        doc = {
            "mode": report.mode,
            "noise": cfg.noise,
            "steps": [
                {
                    "rank": rank,
                    "problem": s.problem,
                    "marginal_bits": s.marginal_bits,
                    "cumulative_bits": s.cumulative_bits,
                }
                for rank, s in enumerate(report.steps, start=1)
            ],
            "stopped_early": report.stopped_early,
            "stop_reason": report.stop_reason,
            "negative_marginals": [
                {"step": n.step, "problem": n.problem, "marginal_bits": n.marginal_bits}
                for n in report.negative_marginals
            ],
        }
        _write_text(out / "selection.json", dumps_canonical_json(doc))
    text = _selection_text(report)
    _write_text(out / "selection.txt", text)
    print(text, end="")
    return 0


def _correlation_csv_rows(corr: CorrelationMatrix):
    for i, p in enumerate(corr.problems):
        row = [p]
        for v in corr.values[i]:
            row.append("" if np.isnan(v) else repr(float(v)))
        yield row


def cmd_correlate(cfg: RunConfig) -> int:
    table = _load_table(cfg)
    out = _outdir(cfg)
    for measure in (Measure.WIN_RATE, Measure.SCORE):
        name = measure.value
        corr = correlation_matrix(table, measure)
        clustering = cluster(corr, cfg.threshold)
        if "csv" in cfg.formats:
            _write_csv(
                out / f"correlation_{name}.csv",
                ["problem", *corr.problems],
                _correlation_csv_rows(corr),
            )
            _write_csv(
                out / f"clusters_{name}.csv",
                ("problem", "cluster_id"),
                [
                    (p, "" if cid is None else cid)
                    for p, cid in sorted(clustering.assignments().items())
                ],
            )
        if "json" in cfg.formats:
            doc = {
                "measure": name,
                "problems": list(corr.problems),
                "matrix": [
                    [None if np.isnan(v) else float(v) for v in row]
                    for row in corr.values
                ],
                "threshold": cfg.threshold,
                "clusters": [list(c) for c in clustering.clusters],
                "no_correlation_measure": list(clustering.excluded),
            }
            _write_text(out / f"correlation_{name}.json", dumps_canonical_json(doc))
        if "svg" in cfg.formats:
            svg = render_heatmap(corr, clustering, title=f"problem correlation ({name})")
            _write_text(out / f"heatmap_{name}.svg", svg)
        print(
            f"{name}: {len(clustering.clusters)} cluster(s), "
            f"{len(clustering.excluded)} problem(s) without a correlation measure"
        )
    return 0


def cmd_confusion(cfg: RunConfig) -> int:
    table = _load_table(cfg)
    if not cfg.problems_list:
        raise InputError("missing --problems LIST (comma-separated problem identifiers)")
    keys: list[MetricKey] = []
    for p in cfg.problems_list:
        keys.extend(metric_keys_for(p, cfg.metric))
    matrix = confusion(table, keys, cfg.noise)
    out = _outdir(cfg)
    if "csv" in cfg.formats:
        rows = [
            [agent, *(repr(float(v)) for v in matrix.probs[i])]
            for i, agent in enumerate(matrix.agents)
        ]
        _write_csv(out / "confusion.csv", ["agent", *matrix.agents], rows)
    if "json" in cfg.formats:
        doc = {
            "agents": list(matrix.agents),
            "metric": cfg.metric,
            "noise": cfg.noise,
            "problems": list(cfg.problems_list),
            "rows": [[float(v) for v in row] for row in matrix.probs],
        }
        _write_text(out / "confusion.json", dumps_canonical_json(doc))
    print(f"confusion matrix over {len(matrix.agents)} agents, {len(keys)} metric key(s)")
    return 0


def _synth_spec(cfg: RunConfig) -> SynthSpec:
    kinds: list[Archetype] = []
    for i in range(cfg.problems):
        name = cfg.archetype
        if name == "mixed":
            if i % 4 == 3:
                kinds.append(Archetype("duplicate", source=i - 3))
                continue
            name = _MIXED_CYCLE[i % 4]
        name = name.replace("-", "_")
        if name not in ARCHETYPE_KINDS:
            raise InputError(
                f"unknown archetype {cfg.archetype!r}, expected one of {ARCHETYPE_CHOICES}"
            )
        kinds.append(Archetype(name, gap=cfg.gap, sigma=cfg.sigma))
    return SynthSpec(cfg.agents, tuple(kinds), cfg.samples, cfg.seed)


def cmd_synth(cfg: RunConfig) -> int:
    spec = _synth_spec(cfg)
    records = generate(spec)
    out = _outdir(cfg)
    path = out / "playthroughs.csv"
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(("agent", "problem", "score", "win"))
        for r in records:
            w.writerow((r.agent, r.problem, repr(r.score), int(r.win)))
    print(f"wrote {path}")
    print(
        f"{len(records)} records: {spec.agents} agents x "
        f"{len(spec.archetypes)} problems x {spec.samples_per_cell} samples"
    )
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infobench",
        description=(
            "Rank and select the most discriminatory benchmark problems from "
            "noisy per-problem performance logs."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument(
        "--format",
        dest="format",
        type=_formats_from,
        help="comma-separated output formats: csv,json,svg (default: all applicable)",
    )
    common.add_argument("--config", help="key=value config file; flags take precedence")
    common.add_argument("--sigma-floor", type=float, help="lower bound on estimated stddevs")

    p = sub.add_parser("ingest", parents=[common], help="aggregate a playthrough CSV into stats files")
    p.add_argument("--input", required=True, help="playthrough CSV (agent,problem,score,win)")
    p.add_argument(
        "--allow-missing",
        action="store_true",
        default=None,
        help="drop agents lacking full problem coverage instead of failing",
    )

    p = sub.add_parser("info-gain", parents=[common], help="rank every problem by information gain")
    p.add_argument("--stats", required=True, help="aggregated stats file (.csv or .json)")
    p.add_argument("--noise", choices=NOISE_MODES, help="how per-agent noise scales combine")

    p = sub.add_parser("select", parents=[common], help="greedily select the top-k problem set")
    p.add_argument("--stats", required=True)
    p.add_argument("--metric", choices=SELECTION_MODES, help="performance signal(s) to use")
    p.add_argument("--k", type=int, help="number of problems to select (default 10)")
    p.add_argument("--noise", choices=NOISE_MODES)
    p.add_argument("--eps-gain", type=float, help="marginal gain resolution in bits")
    p.add_argument(
        "--per-key",
        action="store_true",
        default=None,
        help="select single (problem, measure) cells instead of whole problems",
    )

    p = sub.add_parser("correlate", parents=[common], help="correlation matrices, clusters, heatmaps")
    p.add_argument("--stats", required=True)
    p.add_argument("--threshold", type=float, help="dendrogram cut height (default 0.8)")

    p = sub.add_parser("confusion", parents=[common], help="dump the confusion matrix for a problem set")
    p.add_argument("--stats", required=True)
    p.add_argument(
        "--problems",
        dest="problems_list",
        required=True,
        help="comma-separated problem identifiers",
    )
    p.add_argument("--metric", choices=SELECTION_MODES)
    p.add_argument("--noise", choices=NOISE_MODES)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic playthrough CSV")
    p.add_argument("--agents", type=int, help="number of agents (default 5)")
    p.add_argument("--problems", type=int, help="number of problems (default 10)")
    p.add_argument(
        "--archetype",
        choices=ARCHETYPE_CHOICES,
        help="problem character; 'mixed' cycles archetypes and adds duplicates",
    )
    p.add_argument("--gap", type=float, help="mean separation between adjacent agents")
    p.add_argument("--sigma", type=float, help="score noise per agent")
    p.add_argument("--samples", type=int, help="playthroughs per agent-problem cell")
    p.add_argument("--seed", type=int, help="random seed (pins the whole stream)")

    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "info-gain": cmd_info_gain,
    "select": cmd_select,
    "correlate": cmd_correlate,
    "confusion": cmd_confusion,
    "synth": cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return _COMMANDS[args.command](cfg)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
