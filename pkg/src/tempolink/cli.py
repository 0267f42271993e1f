"""Command-line entry point for reproducible ingest/train/eval/ablate runs.

Commands:

* ``ingest``     parse a timestamped edge list, slice it into snapshots,
                 write a snapshot cache (.npz) plus a JSON stats sidecar.
* ``train-eval`` sliding-window protocol over an anchor range: per anchor,
                 train a fresh model on history and score snapshot t+1;
                 writes per-anchor reports, loss histories, checkpoints,
                 an aggregate CSV and a reproducibility manifest.
* ``ablate``     repeat train-eval across values of one axis (transform
                 subset or head counts) and tabulate the comparison.
* ``stats``      summary statistics of a dataset after slicing.

Runs are driven by a flat key/value JSON config file; ``dataset_preset``
selects per-network hyperparameter defaults which explicit keys override.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    DivergenceError,
    MetricUndefinedError,
    ParseError,
    ProtocolError,
    ResourceLimitError,
    SliceError,
    TempolinkError,
)
from .evaluation import EvalReport, evaluate_prediction
from .graphs import SnapshotSequence, make_windows, network_stats
from .ingest import SliceConfig, read_edge_file, slice_snapshots
from .model import ModelConfig, predict_scores, save_checkpoint
from .motifs import MotifTransform, parse_transforms
from .tensor import set_default_precision
from .training import EarlyStop, TrainRun, fit_timestep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3

VALID_HEAD_COUNTS = (1, 2, 4, 8, 16)

# Per-network hyperparameter defaults (node count always comes from the data).
PRESETS: dict[str, dict] = {
    "man": {
        "f_struct": 32, "h_rnn": 1024, "f_attn": 256, "k_node": 4, "k_time": 8,
        "h_dec": 128, "lr": 0.001, "l2": 0.0, "window": 8,
        "duration": 604800.0, "snapshot_count": 38,
    },
    "eec": {
        "f_struct": 64, "h_rnn": 4096, "f_attn": 1024, "k_node": 2, "k_time": 4,
        "h_dec": 512, "lr": 0.001, "l2": 1e-5, "window": 8,
        "duration": 604800.0, "snapshot_count": 64,
    },
    "uci": {
        "f_struct": 64, "h_rnn": 4096, "f_attn": 1024, "k_node": 2, "k_time": 4,
        "h_dec": 512, "lr": 0.001, "l2": 1e-5, "window": 5,
        "duration": 259200.0, "snapshot_count": 40,
    },
    "lem": {
        "f_struct": 32, "h_rnn": 2048, "f_attn": 512, "k_node": 4, "k_time": 8,
        "h_dec": 256, "lr": 0.005, "l2": 0.0, "window": 8,
        "duration": 15778800.0, "snapshot_count": 50,
    },
}

DEFAULTS = {
    "f_struct": 8, "h_rnn": 16, "f_attn": 8, "k_node": 2, "k_time": 2,
    "h_dec": 16, "lr": 0.001, "l2": 0.0, "window": 3,
    "penalty_beta": 5.0, "transforms": "two_hop,common_in,common_out,two_hop_rev",
    "epochs": 200, "early_stop": True, "early_stop_patience": 20,
    "early_stop_min_delta": 1e-5, "reps": 5, "seed": 0,
    "save_checkpoints": True,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with the documented usage exit code (1, not argparse's 2)."""

    def error(self, message):
        raise _UsageError(message)


@dataclass
class RunConfig:
    """Flat run settings merged from defaults, preset, file, and CLI flags."""

    values: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | None, overrides: dict) -> "RunConfig":
        merged = dict(DEFAULTS)
        file_values: dict = {}
        if path is not None:
            with open(path, "r", encoding="utf-8") as handle:
                file_values = json.load(handle)
            if not isinstance(file_values, dict):
                raise ValueError(f"config {path} must hold a flat JSON object")
        preset = file_values.get("dataset_preset", overrides.get("dataset_preset"))
        if preset is not None:
            key = str(preset).lower()
            if key not in PRESETS:
                raise ValueError(f"unknown dataset_preset {preset!r}; expected one of {sorted(PRESETS)}")
            merged.update(PRESETS[key])
        merged.update(file_values)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return cls(values=merged)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values or self.values[key] is None:
            raise ValueError(f"config key {key!r} is required for this command")
        return self.values[key]

    def model_config(self, n: int) -> ModelConfig:
        transforms = self.get("transforms", DEFAULTS["transforms"])
        if isinstance(transforms, str):
            transforms = parse_transforms(transforms)
        else:
            transforms = tuple(MotifTransform(v) for v in transforms)
        return ModelConfig(
            n=n,
            f_struct=int(self.get("f_struct")),
            h_rnn=int(self.get("h_rnn")),
            f_attn=int(self.get("f_attn")),
            k_node=int(self.get("k_node")),
            k_time=int(self.get("k_time")),
            h_dec=int(self.get("h_dec")),
            window=int(self.get("window")),
            transforms=transforms,
            lr=float(self.get("lr")),
            l2=float(self.get("l2")),
            penalty_beta=float(self.get("penalty_beta")),
        )

    def train_run(self, seed: int) -> TrainRun:
        early = None
        if self.get("early_stop", True):
            early = EarlyStop(
                patience=int(self.get("early_stop_patience")),
                min_delta=float(self.get("early_stop_min_delta")),
            )
        return TrainRun(epochs=int(self.get("epochs")), seed=seed, early_stop=early)

    def canonical_json(self) -> str:
        return json.dumps(self.values, sort_keys=True, default=str)


# snapshot cache --------------------------------------------------------------


def save_snapshot_cache(path, seq: SnapshotSequence, event_counts, dropped: int, labels) -> None:
    np.savez_compressed(
        path,
        adjacency=np.stack([s.adj for s in seq.snapshots]),
        event_counts=np.asarray(event_counts, dtype=np.int64),
        dropped=np.asarray(dropped, dtype=np.int64),
        labels=np.asarray(list(labels), dtype=str),
    )


def load_snapshot_cache(path) -> tuple[SnapshotSequence, int, int]:
    """Returns (sequence, retained event count, dropped count)."""
    with np.load(path, allow_pickle=False) as archive:
        seq = SnapshotSequence.from_matrices(list(archive["adjacency"]))
        retained = int(archive["event_counts"].sum())
        dropped = int(archive["dropped"])
    return seq, retained, dropped


# command implementations ------------------------------------------------------


def _ingest_dataset(cfg: RunConfig):
    dataset = Path(cfg.require("dataset"))
    if not dataset.exists():
        raise FileNotFoundError(f"dataset file not found: {dataset}")
    parsed = read_edge_file(dataset)
    origin = cfg.get("origin")
    count = cfg.get("snapshot_count")
    slice_cfg = SliceConfig(
        duration=float(cfg.require("duration")),
        origin=None if origin is None else float(origin),
        count=None if count is None else int(count),
    )
    result = slice_snapshots(parsed.edges, slice_cfg, n=parsed.n)
    stats = network_stats(result.sequence, result.retained_events)
    return parsed, result, stats


def cmd_ingest(cfg: RunConfig, out_dir: Path) -> int:
    parsed, result, stats = _ingest_dataset(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache_path = out_dir / "snapshots.npz"
    save_snapshot_cache(cache_path, result.sequence, result.event_counts, result.dropped, parsed.labels)
    stats_payload = stats.to_dict() | {"dropped_events": result.dropped}
    (out_dir / "stats.json").write_text(json.dumps(stats_payload, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {cache_path} ({len(result.sequence)} snapshots, n={result.sequence.n}, "
          f"{result.retained_events} events kept, {result.dropped} dropped)")
    print(json.dumps(stats_payload))
    return EXIT_OK


def cmd_stats(cfg: RunConfig, out_dir: Path) -> int:
    _, result, stats = _ingest_dataset(cfg)
    payload = stats.to_dict() | {"dropped_events": result.dropped}
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "stats.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(payload))
    return EXIT_OK


def _write_manifest(out_dir: Path, cfg: RunConfig, command: str, seed: int, deterministic: bool) -> None:
    manifest = {
        "command": command,
        "config_sha256": hashlib.sha256(cfg.canonical_json().encode("utf-8")).hexdigest(),
        "config": cfg.values,
        "seed": seed,
        "deterministic": deterministic,
        "tempolink_version": __version__,
        "numpy_version": np.__version__,
        "python_version": sys.version.split()[0],
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8"
    )


def _anchor_range(cfg: RunConfig, model_cfg: ModelConfig, length: int) -> list[int]:
    lo = int(cfg.get("anchor_start", model_cfg.window))
    hi = int(cfg.get("anchor_stop", length - 2))
    if lo < model_cfg.window or hi > length - 2 or lo > hi:
        raise ValueError(
            f"anchor range [{lo}, {hi}] must lie within [{model_cfg.window}, {length - 2}]"
        )
    return list(range(lo, hi + 1))


def _history_csv(path: Path, history: list[float]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["epoch", "loss"])
        for epoch, value in enumerate(history, start=1):
            writer.writerow([epoch, repr(value)])


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def _aggregate_csv(path: Path, rows: list[dict]) -> None:
    """One row per anchor (mean/std over repetitions) plus an overall row."""
    columns = ["anchor_t", "reps", "auc_mean", "auc_std", "prauc_mean", "prauc_std",
               "gmauc_mean", "gmauc_std"]
    by_anchor: dict[int, list[dict]] = {}
    for row in rows:
        by_anchor.setdefault(row["anchor_t"], []).append(row)

    def stats_cells(group: list[dict]) -> list[str]:
        cells = []
        for metric in ("auc", "prauc", "gmauc"):
            defined = [r[metric] for r in group if r.get(metric) is not None]
            if defined:
                mean, std = _mean_std(defined)
                cells.extend([repr(mean), repr(std)])
            else:
                cells.extend(["nan", "nan"])
        return cells

    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for anchor in sorted(by_anchor):
            group = by_anchor[anchor]
            writer.writerow([anchor, len(group)] + stats_cells(group))
        if rows:
            writer.writerow(["overall", len(rows)] + stats_cells(rows))


def _train_eval_core(cfg: RunConfig, out_dir: Path, seed: int) -> tuple[list[dict], list[str]]:
    """Runs the protocol; returns (successful metric rows, error notes)."""
    cache_path = Path(cfg.require("snapshots"))
    if not cache_path.exists():
        raise FileNotFoundError(
            f"snapshot cache not found: {cache_path} (run the ingest command first)"
        )
    seq, _, _ = load_snapshot_cache(cache_path)
    model_cfg = cfg.model_config(seq.n)
    anchors = _anchor_range(cfg, model_cfg, len(seq))
    reps = int(cfg.get("reps"))
    save_ckpt = bool(cfg.get("save_checkpoints"))

    reports_dir = out_dir / "reports"
    history_dir = out_dir / "history"
    ckpt_dir = out_dir / "checkpoints"
    for d in (reports_dir, history_dir) + ((ckpt_dir,) if save_ckpt else ()):
        d.mkdir(parents=True, exist_ok=True)

    rows: list[dict] = []
    errors: list[str] = []
    for rep in range(reps):
        rep_seed = seed + rep
        for anchor in anchors:
            tag = f"anchor{anchor:03d}_rep{rep}"
            try:
                fit = fit_timestep(seq, anchor, model_cfg, cfg.train_run(rep_seed))
                _history_csv(history_dir / f"{tag}.csv", fit.history)
                sample = next(
                    s for s in make_windows(seq, model_cfg.window) if s.anchor_t == anchor
                )
                scores = predict_scores(sample, fit.params, model_cfg)
                report = evaluate_prediction(scores, seq[anchor], seq[anchor + 1], anchor, seed=rep_seed)
                (reports_dir / f"{tag}.json").write_text(report.to_json() + "\n", encoding="utf-8")
                if save_ckpt:
                    save_checkpoint(ckpt_dir / f"{tag}.npz", fit.params, model_cfg)
                rows.append(
                    {"anchor_t": anchor, "rep": rep, "auc": report.auc,
                     "prauc": report.prauc, "gmauc": report.gmauc}
                )
            except (DivergenceError, MetricUndefinedError, ProtocolError) as err:
                note = f"{tag}: {type(err).__name__}: {err}"
                errors.append(note)
                (reports_dir / f"{tag}.json").write_text(
                    json.dumps({"anchor_t": anchor, "rep": rep, "error": str(err)}) + "\n",
                    encoding="utf-8",
                )
    return rows, errors


def cmd_train_eval(cfg: RunConfig, out_dir: Path, seed: int, deterministic: bool) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows, errors = _train_eval_core(cfg, out_dir, seed)
    _aggregate_csv(out_dir / "aggregate.csv", rows)
    _write_manifest(out_dir, cfg, "train-eval", seed, deterministic)
    for note in errors:
        print(f"warning: {note}", file=sys.stderr)
    print(f"wrote {out_dir / 'aggregate.csv'} ({len(rows)} runs, {len(errors)} failed)")
    if not rows:
        return EXIT_DIVERGED if any("DivergenceError" in e for e in errors) else EXIT_DATA
    return EXIT_OK


def _ablation_values(axis: str, raw_values: list[str]) -> list[tuple[str, dict]]:
    """Maps each raw value to (row label, config overrides)."""
    out = []
    if axis == "transforms":
        for raw in raw_values:
            kinds = parse_transforms(raw)
            label = "no_feature" if not kinds else "+".join(k.value for k in kinds)
            out.append((label, {"transforms": raw}))
    elif axis in ("node_heads", "time_heads"):
        key = "k_node" if axis == "node_heads" else "k_time"
        for raw in raw_values:
            heads = int(raw)
            if heads not in VALID_HEAD_COUNTS:
                raise ValueError(f"{axis} value {heads} not in {VALID_HEAD_COUNTS}")
            out.append((str(heads), {key: heads}))
    else:
        raise ValueError(f"unknown ablation axis {axis!r}")
    return out


def cmd_ablate(cfg: RunConfig, out_dir: Path, seed: int, deterministic: bool,
               axis: str, values: list[str]) -> int:
    variants = _ablation_values(axis, values)
    out_dir.mkdir(parents=True, exist_ok=True)
    table_rows = []
    for label, overrides in variants:
        sub_cfg = RunConfig(values=cfg.values | overrides)
        sub_dir = out_dir / axis / label
        sub_dir.mkdir(parents=True, exist_ok=True)
        rows, errors = _train_eval_core(sub_cfg, sub_dir, seed)
        _aggregate_csv(sub_dir / "aggregate.csv", rows)
        _write_manifest(sub_dir, sub_cfg, f"ablate:{axis}={label}", seed, deterministic)
        for note in errors:
            print(f"warning: [{label}] {note}", file=sys.stderr)
        cells = {"value": label, "runs": len(rows)}
        for metric in ("auc", "gmauc"):
            defined = [r[metric] for r in rows if r.get(metric) is not None]
            if defined:
                mean, std = _mean_std(defined)
                cells[f"{metric}_mean"], cells[f"{metric}_std"] = repr(mean), repr(std)
            else:
                cells[f"{metric}_mean"] = cells[f"{metric}_std"] = "nan"
        table_rows.append(cells)

    table_path = out_dir / f"ablation_{axis}.csv"
    with open(table_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(
            handle, fieldnames=["value", "runs", "auc_mean", "auc_std", "gmauc_mean", "gmauc_std"]
        )
        writer.writeheader()
        writer.writerows(table_rows)
    print(f"wrote {table_path} ({len(table_rows)} rows)")
    return EXIT_OK


# argument parsing --------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="tempolink", description="Temporal link prediction for directed networks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key/value JSON config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory (default: ./runs)")
        p.add_argument("--deterministic", action="store_true",
                       help="force single-threaded execution (recorded in the manifest)")
        p.add_argument("--precision", type=int, choices=(32, 64), default=64,
                       help="float width for all tensors (default 64)")

    common(sub.add_parser("ingest", help="slice a timestamped edge list into a snapshot cache"))
    common(sub.add_parser("train-eval", help="sliding-window training and evaluation"))
    ablate = sub.add_parser("ablate", help="compare settings along one axis")
    common(ablate)
    ablate.add_argument("--axis", required=True, choices=("transforms", "node_heads", "time_heads"))
    ablate.add_argument("--values", required=True, nargs="+",
                        help="axis values; transform subsets as comma lists ('' or 'none' for no feature)")
    common(sub.add_parser("stats", help="summary statistics of a sliced dataset"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE

    set_default_precision(args.precision)
    out_dir = Path(args.out) if args.out else Path("runs")
    try:
        cfg = RunConfig.load(args.config, {"seed": args.seed})
        seed = int(cfg.get("seed", 0))
        if args.command == "ingest":
            return cmd_ingest(cfg, out_dir)
        if args.command == "stats":
            return cmd_stats(cfg, out_dir)
        if args.command == "train-eval":
            return cmd_train_eval(cfg, out_dir, seed, args.deterministic)
        if args.command == "ablate":
            return cmd_ablate(cfg, out_dir, seed, args.deterministic, args.axis, args.values)
        raise _UsageError(f"unknown command {args.command!r}")
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as err:
        print(f"divergence: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    except (TempolinkError, OSError, ValueError, KeyError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA


def entrypoint() -> None:
    sys.exit(main())
