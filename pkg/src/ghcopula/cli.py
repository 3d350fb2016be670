"""``ghx`` command-line entry point."""

import argparse
import json
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from .errors import ConfigError, DataError, DomainError, ModelError, NumericalError
from .experiments import RUNNERS, resolve_paths

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4
MANIFEST = "manifest.json"


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    p = argparse.ArgumentParser(
        prog="ghx", description="GH copula fitting, simulation and tail dependence."
    )
    p.add_argument("command", choices=sorted(RUNNERS))
    p.add_argument("--config", required=True, type=Path,
                   help="experiment config JSON, or a manifest from an earlier run")
    p.add_argument("--seed", type=_u64,
                   help="master seed (taken from the manifest when re-running one)")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    return p


def versions():
    try:
        own = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"ghcopula": own, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def load_config(path):
    """Config dict and manifest seed (``None`` for a plain config)."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if "manifest_version" in doc:
        return doc["config"], doc.get("seed")
    return resolve_paths(doc, Path(path).resolve().parent), doc.get("seed")


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def _write_json(path, doc):
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_plain) + "\n")


def run(argv=None):
    args = build_parser().parse_args(argv)
    out = args.out
    try:
        cfg, cfg_seed = load_config(args.config)
        seed = args.seed if args.seed is not None else cfg_seed
        if seed is None:
            raise ConfigError("a seed is required (--seed or 'seed' in the config)")
        seed = _u64(str(seed))
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        out.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        summary = RUNNERS[args.command](cfg, seed, out, args.threads)
        wall = time.perf_counter() - start
    except (ConfigError, DomainError, ModelError, argparse.ArgumentTypeError) as exc:
        print(f"ghx: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"ghx: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        out.mkdir(parents=True, exist_ok=True)
        diag = {"command": args.command, "error": str(exc), "diagnostics": exc.diagnostics}
        _write_json(out / "diagnostics.json", diag)
        print(f"ghx: numerical failure: {exc} (see {out / 'diagnostics.json'})",
              file=sys.stderr)
        return EXIT_NUMERICAL
    manifest = {
        "manifest_version": 1,
        "command": args.command,
        "config": cfg,
        "seed": seed,
        "threads": args.threads,
        "versions": versions(),
        "wall_time_seconds": wall,
        "summary": summary,
    }
    _write_json(out / MANIFEST, manifest)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
