"""Command-line front end.

Usage: sigma-energy <command> [case] [--config FILE] [--out DIR]
                    [--seed N] [--set key=value ...] [--server URL]

Commands: analyze, energy, critical, minimize-profile, stability,
reproduce, serve.  Without --out the JSON report goes to stdout; with it
the run writes report.json plus tables/*.csv and plotdata/*.csv.  With
--server the computation is delegated to a running HTTP service.

Exit codes: 0 success, 1 usage or configuration error, 2 failed
reproduction assertion.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from .config import ConfigError, load_config
from .pipelines import COMMANDS, RunResult, Table, run_command, run_reproduce

USAGE_EXIT = 1
REPRODUCE_FAIL_EXIT = 2


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1; argparse uses 2, which is reserved for
    # failed reproduction assertions
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sigma-energy",
                description="Energies, criticality systems, and stability "
                            "checks for maps between model manifolds.")
    sub = p.add_subparsers(dest="command", required=True)
    names = list(COMMANDS) + ["serve"]
    for name in names:
        sp = sub.add_parser(name, parents=[], add_help=True)
        if name == "reproduce":
            sp.add_argument("case", nargs="?", default=None,
                            help="case name (default: config key 'case' "
                                 "or all)")
        if name == "serve":
            sp.add_argument("--host", default="127.0.0.1")
            sp.add_argument("--port", type=int, default=8000)
            continue
        sp.add_argument("--config", default=None, metavar="FILE",
                        help="key = value configuration file")
        sp.add_argument("--out", default=None, metavar="DIR",
                        help="write report.json, tables/, plotdata/ here")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the configured seed")
        sp.add_argument("--set", action="append", default=[],
                        metavar="KEY=VALUE", dest="sets",
                        help="override a single config key")
        sp.add_argument("--server", default=None, metavar="URL",
                        help="delegate to a running service")
    return p


def _effective_config(args):
    cfg = load_config(args.config)
    pairs = {}
    for item in args.sets:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, val = item.partition("=")
        pairs[key.strip()] = val.strip()
    if pairs:
        cfg = cfg.override_text(pairs)
    if args.seed is not None:
        cfg = cfg.override(seed=int(args.seed))
    return cfg


def _unique_name(name: str, used: set) -> str:
    base, n = name, 2
    while name in used:
        name = f"{base}-{n}"
        n += 1
    used.add(name)
    return name


def write_result(result: RunResult, out_dir: Optional[str]) -> None:
    text = json.dumps(result.report, sort_keys=True, indent=2) + "\n"
    if out_dir is None:
        sys.stdout.write(text)
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w",
              encoding="utf-8") as fh:
        fh.write(text)
    for subdir, items in (("tables", result.tables),
                          ("plotdata", result.plotdata)):
        if not items:
            continue
        d = os.path.join(out_dir, subdir)
        os.makedirs(d, exist_ok=True)
        used = set()
        for tab in items:
            name = _unique_name(tab.name, used)
            with open(os.path.join(d, name + ".csv"), "w",
                      encoding="utf-8") as fh:
                fh.write(tab.to_csv())


def _remote_result(server: str, command: str, cfg, case: Optional[str],
                   transport=None) -> RunResult:
    import httpx

    payload = {"command": command, "config_text": cfg.render()}
    if case is not None:
        payload["case"] = case
    with httpx.Client(base_url=server, transport=transport,
                      timeout=600.0) as client:
        resp = client.post("/run", json=payload)
        if resp.status_code != 200:
            raise RuntimeError(
                f"service error {resp.status_code}: {resp.text}")
        body = resp.json()
    return RunResult(
        command=body["command"], report=body["report"],
        tables=tuple(Table(t["name"], tuple(t["header"]),
                           tuple(tuple(r) for r in t["rows"]))
                     for t in body.get("tables", [])),
        plotdata=tuple(Table(t["name"], tuple(t["header"]),
                             tuple(tuple(r) for r in t["rows"]))
                       for t in body.get("plotdata", [])),
        exit_code=int(body.get("exit_code", 0)))


def main(argv=None, transport=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.command == "serve":
        import uvicorn

        from .service.app import create_app
        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    try:
        cfg = _effective_config(args)
    except (ConfigError, OSError) as exc:
        sys.stderr.write(f"sigma-energy: {exc}\n")
        return USAGE_EXIT

    case = getattr(args, "case", None)
    try:
        if args.server:
            result = _remote_result(args.server, args.command, cfg, case,
                                    transport=transport)
        elif args.command == "reproduce":
            result = run_reproduce(cfg, case=case)
        else:
            result = run_command(args.command, cfg)
    except (ConfigError, ValueError) as exc:
        sys.stderr.write(f"sigma-energy: {exc}\n")
        return USAGE_EXIT

    write_result(result, args.out)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
