"""qlo command line: one subcommand per experiment plus artifact verification.

Exit codes: 0 all checks pass, 1 a check failed, 2 schema error, 3 enumeration cap exceeded, 4 parse error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from qlo.closure import ClosureTooLarge
from qlo.experiments import RUNNERS, ParseError, SchemaError, run, verify_artifact
from qlo.io import dumps
from qlo.poly import EnumerationCapError

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_CAP, EXIT_PARSE = 0, 1, 2, 3, 4

log = logging.getLogger("qlo")


def _parser():
    p = argparse.ArgumentParser(prog="qlo", description="Anti-concentration and robust-rank experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in list(RUNNERS):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out-dir", default=".")
        sp.add_argument("--cap", type=int, help="enumeration cap (overrides QLO_CAP)")
    for name in ("verify-witness", "verify-trace"):
        sp = sub.add_parser(name)
        sp.add_argument("file")
    return p


def _load_config(path):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise ParseError(f"{path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e}") from e


def _experiment(args):
    cfg = _load_config(args.config)
    if not isinstance(cfg, dict):
        raise SchemaError("config must be a JSON object")
    for key in ("seed", "workers", "cap"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    if cfg.get("cap") is None and os.environ.get("QLO_CAP"):
        cfg["cap"] = int(os.environ["QLO_CAP"])
    report, csv_text, artifacts = run(args.command, cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{args.command}.json").write_text(dumps(report, indent=2) + "\n")
    (out / f"{args.command}.csv").write_text(csv_text)
    for kind, obj in artifacts.items():
        (out / f"{args.command}.{kind}.json").write_text(dumps(obj, indent=1) + "\n")
    for c in report["checks"]:
        log.info("%s %s", "PASS" if c["passed"] else "FAIL", c["name"])
    print(f"{args.command}: {'PASS' if report['passed'] else 'FAIL'} -> {out / (args.command + '.json')}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


def _verify(args):
    try:
        obj = json.loads(Path(args.file).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"{args.file}: {e}") from e
    if args.command == "verify-trace" and (not isinstance(obj, dict) or obj.get("kind") != "pipeline-trace"):
        raise ParseError("not a pipeline trace")
    ok, fails = verify_artifact(obj)
    print("pass" if ok else "fail")
    for f in fails:
        print(f"  {f}")
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command.startswith("verify-"):
            return _verify(args)
        return _experiment(args)
    except SchemaError as e:
        print(f"schema error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except (EnumerationCapError, ClosureTooLarge) as e:
        print(f"cap exceeded: {e}", file=sys.stderr)
        return EXIT_CAP
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
