"""Command-line interface: validate, fit, generate, evaluate, benchmark."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .data import (
    CompositeDataset,
    Metadata,
    load_composite,
    load_dataset,
    load_layout,
    load_metadata,
    load_schema,
    validate,
    write_composite,
    write_dataset,
)
from .errors import ConfigError, DataError, TabSynthError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    default = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=default if suppress else 0, help="random seed (default 0)")
    p.add_argument("--workers", type=int, default=default if suppress else 1, help="parallel benchmark cells")
    p.add_argument("--format", choices=("json", "text"), default=default if suppress else "text")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(suppress=True)
    parser = _Parser(prog="tabsynth", description="Fit, sample and evaluate synthetic tabular data.",
                     parents=[_global_flags(suppress=False)])
    parser.add_argument("--version", action="version", version=f"tabsynth {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="check a data file against its schema")
    p.add_argument("data")
    p.add_argument("schema")
    p.add_argument("--layout")
    p.add_argument("--metadata")

    p = sub.add_parser("fit", parents=[common], help="fit a generator plugin and save the model")
    p.add_argument("plugin")
    p.add_argument("data", help="CSV file, or a composite manifest (.json) without a schema")
    p.add_argument("schema", nargs="?")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--config", help="plugin hyperparameters as JSON text or a JSON file")
    p.add_argument("--layout")
    p.add_argument("--metadata")

    p = sub.add_parser("generate", parents=[common], help="sample from a saved model")
    p.add_argument("model")
    p.add_argument("-n", "--count", type=int, required=True)
    p.add_argument("--condition", action="append", default=[], metavar="NAME=VALUE",
                   help="evidence; continuous features take NAME=LO:HI")
    p.add_argument("-o", "--output", required=True, help="CSV path (a directory for composite models)")

    p = sub.add_parser("evaluate", parents=[common], help="compare synthetic to real data")
    p.add_argument("real")
    p.add_argument("synth")
    p.add_argument("schema")
    p.add_argument("--metrics", nargs="+")
    p.add_argument("--metadata")
    p.add_argument("--layout")
    p.add_argument("--train", help="real training split; enables utility metrics with --task")
    p.add_argument("--task", metavar="OUTCOME:KIND")
    p.add_argument("-o", "--output")

    p = sub.add_parser("benchmark", parents=[common], help="run a benchmark grid from a JSON config")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="directory for report.json and report.csv")

    p = sub.add_parser("demo", parents=[common], help="write demo datasets and a benchmark config")
    p.add_argument("directory")
    p.add_argument("-n", "--rows", type=int, default=2000)

    sub.add_parser("plugins", parents=[common], help="list registered plugins")
    return parser


def _emit(text: str, output: str | None = None) -> None:
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _plugin_config(raw: str | None) -> dict:
    if not raw:
        return {}
    path = Path(raw)
    text = path.read_text(encoding="utf-8") if path.is_file() else raw
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--config is neither a JSON file nor JSON text: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("--config must be a JSON object")
    return cfg


def _load(data: str, schema: str | None, layout: str | None):
    if schema is None:
        if not data.endswith(".json"):
            raise UsageError("a schema is required unless DATA is a composite manifest (.json)")
        return load_composite(data)
    return load_dataset(data, load_schema(schema), load_layout(layout) if layout else None)


def cmd_validate(args) -> int:
    ds = load_dataset(args.data, load_schema(args.schema), load_layout(args.layout) if args.layout else None)
    md = load_metadata(args.metadata) if args.metadata else None
    report = validate(ds, md)
    if args.format == "json":
        print(json.dumps({"ok": report.ok, "violations": [{"kind": v.kind, "message": v.message}
                                                          for v in report.violations]}, indent=2))
    else:
        print("ok" if report.ok else "\n".join(f"{v.kind}: {v.message}" for v in report.violations))
    return EXIT_OK if report.ok else EXIT_DATA


def cmd_fit(args) -> int:
    from .plugins import fit, save_model

    data = _load(args.data, args.schema, args.layout)
    md = load_metadata(args.metadata) if args.metadata else None
    model = fit(args.plugin, data, md, _plugin_config(args.config), seed=args.seed)
    Path(args.output).write_bytes(save_model(model))
    print(f"saved {args.plugin} model to {args.output}", file=sys.stderr)
    return EXIT_OK


def cmd_generate(args) -> int:
    from .plugins import Condition, generate, get_plugin, load_model

    model = load_model(Path(args.model).read_bytes())
    condition = None
    if args.condition:
        schema = get_plugin(model.plugin).output_schema(model.state)
        condition = Condition.parse(args.condition, schema)
    out = generate(model, args.count, condition, seed=args.seed)
    if isinstance(out, CompositeDataset):
        write_composite(out, args.output)
    else:
        write_dataset(out, args.output)
    return EXIT_OK


def _parse_task(raw: str | None):
    from .metrics import TaskSpec

    if raw is None:
        return None
    outcome, sep, kind = raw.rpartition(":")
    if not sep:
        raise UsageError("--task takes OUTCOME:KIND")
    return TaskSpec(outcome, kind)


def cmd_evaluate(args) -> int:
    from .metrics import EvalConfig, evaluate

    schema = load_schema(args.schema)
    layout = load_layout(args.layout) if args.layout else None
    real = load_dataset(args.real, schema, layout)
    synth = load_dataset(args.synth, schema, layout)
    train = load_dataset(args.train, schema, layout) if args.train else None
    md = load_metadata(args.metadata) if args.metadata else Metadata()
    config = EvalConfig(metrics=tuple(args.metrics) if args.metrics else None, task=_parse_task(args.task),
                        seed=args.seed)
    report = evaluate(real, synth, config, md, real_train=train)
    _emit(report.to_json() if args.format == "json" else report.to_text(), args.output)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    from .benchmark import BenchmarkConfig, run_benchmark

    config = BenchmarkConfig.from_file(args.config)
    report = run_benchmark(config, workers=args.workers if args.workers > 1 else None)
    out = Path(args.output) if args.output else Path(args.config).parent / "benchmark_out"
    report.write(out)
    print(report.canonical_json() if args.format == "json" else report.to_text())
    print(f"reports written to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_demo(args) -> int:
    from .demo import write_demo

    path = write_demo(args.directory, n=args.rows, seed=args.seed)
    print(path)
    return EXIT_OK


def cmd_plugins(args) -> int:
    from .plugins import list_plugins

    rows = [{"name": d.name, "patterns": sorted(d.patterns), "conditional": d.conditional, "dp": d.dp,
             "debias": d.debias} for d in list_plugins()]
    if args.format == "json":
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            caps = [c for c in ("conditional", "dp", "debias") if r[c]]
            print(f"{r['name']:<18} {','.join(r['patterns']):<22} {','.join(caps)}")
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "fit": cmd_fit, "generate": cmd_generate, "evaluate": cmd_evaluate,
            "benchmark": cmd_benchmark, "demo": cmd_demo, "plugins": cmd_plugins}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help and --version
            return int(exc.code or 0)
        if args.command is None:
            raise UsageError(parser.format_usage())
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, TabSynthError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # anything else is a bug
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
