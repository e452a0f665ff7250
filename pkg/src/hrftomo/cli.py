"""Command line entry point: ``hrftomo {hrf,fqst,props,bounds,bench}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .experiments import RUNNERS, ConfigError, ExperimentConfig

log = logging.getLogger("hrftomo")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _to_builtin(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=_to_builtin)


def _flatten(row: dict, prefix: str = "") -> dict:
    flat = {}
    for key, val in row.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            flat.update(_flatten(val, name + "."))
        elif isinstance(val, (list, tuple)):
            continue
        else:
            flat[name] = val
    return flat


def rows_to_csv(rows: list[dict]) -> str:
    flat = [_flatten(r) for r in rows]
    fields = sorted({k for r in flat for k in r})
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(flat)
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hrftomo", description="Real-valued quantum state tomography experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in RUNNERS:
        p = sub.add_parser(mode)
        p.add_argument("--config", type=Path, help="JSON file mirroring ExperimentConfig")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path, help="per-row output; the summary goes to <out>.summary.json")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--no-mitigation", action="store_true")
        p.add_argument("--noise", help="none | table1 | table1-readout | <noise JSON file>")
        p.add_argument("--n-qubits", type=int)
        p.add_argument("--n-samp", type=int)
        p.add_argument("--n-tree", type=int)
        p.add_argument("--n-states", type=int)
        p.add_argument("--root", help="max | auto | <node index>")
        p.add_argument("--n-tree-sweep", type=lambda s: [int(x) for x in s.split(",")])
        p.add_argument("--bench-qubits", type=lambda s: [int(x) for x in s.split(",")])
        p.add_argument("--max-fqst-qubits", type=int)
    return parser


def resolve_config(args) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    config.mode = args.mode
    overrides = {
        "seed": args.seed,
        "noise": args.noise,
        "n_qubits": args.n_qubits,
        "n_samp": args.n_samp,
        "n_tree": args.n_tree,
        "n_states": args.n_states,
        "n_tree_sweep": args.n_tree_sweep,
        "bench_qubits": args.bench_qubits,
        "max_fqst_qubits": args.max_fqst_qubits,
    }
    for key, val in overrides.items():
        if val is not None:
            setattr(config, key, val)
    if args.root is not None:
        config.root = int(args.root) if args.root.lstrip("-").isdigit() else args.root
    if args.no_mitigation:
        config.mitigation = False
    return config.validate()


def emit(rows: list[dict], summary: dict, out: Path | None, fmt: str) -> None:
    body = rows_to_csv(rows) if fmt == "csv" else "".join(dumps(r) + "\n" for r in rows)
    if out is None:
        sys.stdout.write(body)
        sys.stdout.write(dumps(summary) + "\n")
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(body)
    out.with_name(out.name + ".summary.json").write_text(dumps(summary) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = resolve_config(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        rows, summary = RUNNERS[config.mode](config)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    emit(rows, summary, args.out, args.format)
    log.info("wrote %d rows", len(rows))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
