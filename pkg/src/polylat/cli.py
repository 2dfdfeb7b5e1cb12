"""Command-line front end.

Every subcommand is a thin client of the HTTP service: flags become one
request, the response becomes files and stdout. By default the service runs
in-process; --server points the same client at a remote instance instead.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from typing import Optional

CSV_SCHEMA_INTEGRATE = "# polylat-integrate-csv v1"

EXIT_OK = 0
EXIT_USAGE = 2


class CommandError(Exception):
    """User-facing failure: message to stderr, exit code 2."""


class ServiceClient:
    """POSTs to the in-process app, or to --server when given."""

    def __init__(self, server: Optional[str] = None):
        if server is None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # test-client import chatter
                from fastapi.testclient import TestClient

                from .service import create_app

                self._client = TestClient(create_app())
        else:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)

    def post(self, path: str, payload: dict) -> dict:
        resp = self._client.post(path, json=payload)
        if resp.status_code != 200:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise CommandError(f"{path} failed ({resp.status_code}): {detail}")
        return resp.json()


def parse_weights_flag(spec: str, s: int) -> dict:
    """--weights value to a weights payload.

    product:g1,g2,...   explicit per-coordinate weights (one value broadcasts)
    product-decay:j^-2  power-law decay expanded over s coordinates
    general:FILE        JSON file with subset weights
    """
    kind, sep, rest = spec.partition(":")
    if not sep:
        raise CommandError(f"--weights must look like kind:value, got {spec!r}")
    if kind == "product":
        try:
            gammas = [float(v) for v in rest.split(",") if v != ""]
        except ValueError:
            raise CommandError(f"bad product weights {rest!r}")
        if len(gammas) == 1:
            gammas = gammas * s
        if len(gammas) != s:
            raise CommandError(f"expected 1 or {s} weights, got {len(gammas)}")
        return {"type": "product", "gammas": gammas}
    if kind == "product-decay":
        if not rest.startswith("j^"):
            raise CommandError(f"decay pattern must look like j^-2, got {rest!r}")
        try:
            expo = float(rest[2:])
        except ValueError:
            raise CommandError(f"bad decay exponent in {rest!r}")
        return {"type": "product", "gammas": [float(j) ** expo for j in range(1, s + 1)]}
    if kind == "general":
        try:
            with open(rest, encoding="utf-8") as f:
                data = json.load(f)
        except OSError as exc:
            raise CommandError(f"cannot read weights file {rest!r}: {exc}")
        except ValueError as exc:
            raise CommandError(f"weights file {rest!r} is not valid JSON: {exc}")
        if data.get("type") == "general":
            return data
        if "entries" in data:
            return {"type": "general", "s": data.get("s", s), "entries": data["entries"]}
        raise CommandError(f"weights file {rest!r} lacks an 'entries' list")
    raise CommandError(f"unknown weights kind {kind!r}")


def parse_param(text: str):
    """key=value integrand parameter; value may be a number, list, or text."""
    key, sep, val = text.partition("=")
    if not sep or not key:
        raise CommandError(f"--param must look like key=value, got {text!r}")
    if "," in val:
        try:
            return key, [float(v) for v in val.split(",")]
        except ValueError:
            raise CommandError(f"bad list value in {text!r}")
    for cast in (int, float):
        try:
            return key, cast(val)
        except ValueError:
            continue
    return key, val


def _load_rule(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except OSError as exc:
        raise CommandError(f"cannot read rule file {path!r}: {exc}")
    except ValueError as exc:
        raise CommandError(f"rule file {path!r} is not valid JSON: {exc}")


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)


def cmd_construct(args) -> int:
    client = ServiceClient(args.server)
    payload = {
        "b": args.b,
        "m": args.m,
        "s": args.s,
        "d": args.d,
        "alpha": args.alpha,
        "weights": parse_weights_flag(args.weights, args.s),
        "method": "naive" if args.naive else "fast",
    }
    out = client.post("/construct", payload)
    rule_text = json.dumps(out["rule"], indent=1) + "\n"
    _write_text(args.out, rule_text)
    print(f"criterion_value {out['criterion_value']!r}")
    return EXIT_OK


def cmd_points(args) -> int:
    client = ServiceClient(args.server)
    payload = {
        "rule": _load_rule(args.rule),
        "scrambled": not args.unscrambled,
        "seed": args.seed,
        "replication_id": args.replication,
    }
    if args.depth is not None:
        payload["depth"] = args.depth
    out = client.post("/points", payload)
    _write_text(args.out, out["text"])
    print(f"wrote {out['n_points']} points in dimension {out['dim']}", file=sys.stderr)
    return EXIT_OK


def cmd_bound(args) -> int:
    client = ServiceClient(args.server)
    payload = {
        "rule": _load_rule(args.rule),
        "grid_size": args.grid_size,
        "per_tau": args.per_tau,
    }
    out = client.post("/bound", payload)
    print(f"lambda_star {out['lambda_star']!r}")
    print(f"bound_star {out['bound_star']!r}")
    print(f"criterion_value {out['criterion_value']!r}")
    print(f"ratio {out['ratio']!r}")
    if args.per_tau:
        print("tau,lambda_star,bound_star")
        for row in out["per_tau"]:
            print(f"{row['tau']},{row['lambda_star']!r},{row['bound_star']!r}")
    return EXIT_OK


def cmd_integrate(args) -> int:
    client = ServiceClient(args.server)
    params = {}
    for p in args.param or []:
        key, value = parse_param(p)
        params[key] = value
    payload = {
        "rule": _load_rule(args.rule),
        "kind": args.integrand,
        "params": params,
        "replications": args.replications,
        "seed": args.seed,
        "threads": args.threads,
    }
    out = client.post("/integrate", payload)
    if args.out is not None:
        lines = [CSV_SCHEMA_INTEGRATE, "replication_id,estimate"]
        lines += [f"{i},{e!r}" for i, e in enumerate(out["estimates"])]
        _write_text(args.out, "\n".join(lines) + "\n")
    print(f"mean {out['mean']!r}")
    print(f"sample_variance {out['sample_variance']!r}")
    print(f"stderr {out['stderr']!r}")
    if out.get("exact_integral") is not None:
        print(f"exact_integral {out['exact_integral']!r}")
        print(f"abs_error {out['abs_error']!r}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    client = ServiceClient(args.server)
    payload = {
        "m_lo": args.m_lo,
        "m_hi": args.m_hi,
        "base": args.b,
        "method": "naive" if args.naive else "fast",
    }
    if args.preset is not None:
        payload["preset"] = args.preset
    else:
        settings = []
        for text in args.config or []:
            parts = text.split(",", 3)
            if len(parts) != 4:
                raise CommandError(
                    f"--config must look like alpha,d,s,weights, got {text!r}"
                )
            try:
                alpha, d, s = (int(v) for v in parts[:3])
            except ValueError:
                raise CommandError(f"bad integers in --config {text!r}")
            wtext = parts[3]
            try:
                weights = float(wtext)
            except ValueError:
                weights = wtext  # decay pattern like j^-2
            settings.append({"alpha": alpha, "d": d, "s": s, "weights": weights})
        payload["settings"] = settings
    out = client.post("/sweep", payload)
    _write_text(args.out, out["csv"])
    for row in out["slopes"]:
        print(f"slope {row['config_id']} [{row['label']}] {row['slope']:.4f}",
              file=sys.stderr)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="polylat",
        description="Construct, inspect, and integrate with interlaced "
        "scrambled polynomial lattice rules.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    def add_server(p):
        p.add_argument("--server", default=None,
                       help="base URL of a running service (default: in-process)")

    c = sub.add_parser("construct", help="build a rule and write its file")
    c.add_argument("--b", type=int, required=True, help="prime base")
    c.add_argument("--m", type=int, required=True, help="modulus degree, N = b^m")
    c.add_argument("--s", type=int, required=True, help="output dimension")
    c.add_argument("--d", type=int, required=True, help="interlacing factor")
    c.add_argument("--alpha", type=int, required=True, help="smoothness target")
    c.add_argument("--weights", required=True,
                   help="product:g1[,g2,...] | product-decay:j^-2 | general:FILE")
    group = c.add_mutually_exclusive_group()
    group.add_argument("--fast", action="store_true", help="fast search (default)")
    group.add_argument("--naive", action="store_true", help="exhaustive per-step search")
    c.add_argument("--out", default=None, help="rule file path (default: stdout)")
    add_server(c)
    c.set_defaults(func=cmd_construct)

    p = sub.add_parser("points", help="export a rule's point set as text")
    p.add_argument("--rule", required=True, help="rule file from construct")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--unscrambled", action="store_true",
                   help="raw underlying lattice set instead of the scrambled set")
    p.add_argument("--depth", type=int, default=None, help="digits per coordinate")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    add_server(p)
    p.set_defaults(func=cmd_points)

    b = sub.add_parser("bound", help="guaranteed criterion bound for a rule")
    b.add_argument("--rule", required=True)
    b.add_argument("--grid-size", type=int, default=33)
    b.add_argument("--per-tau", action="store_true",
                   help="also list the bound for every component prefix")
    add_server(b)
    b.set_defaults(func=cmd_bound)

    i = sub.add_parser("integrate", help="randomized integration over a rule")
    i.add_argument("--rule", required=True)
    i.add_argument("--integrand", required=True,
                   help="constant | product_quadratic | product_smooth | oscillatory")
    i.add_argument("--param", action="append", default=None,
                   help="integrand parameter key=value (repeatable)")
    i.add_argument("--R", "--replications", dest="replications", type=int, default=30)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--threads", type=int, default=1)
    i.add_argument("--out", default=None, help="per-replication CSV path")
    add_server(i)
    i.set_defaults(func=cmd_integrate)

    w = sub.add_parser("sweep", help="criterion decay study over a range of m")
    w.add_argument("--preset", choices=("fig1", "fig2", "fig3"), default=None)
    w.add_argument("--config", action="append", default=None,
                   help="custom curve alpha,d,s,weights (repeatable)")
    w.add_argument("--m-lo", type=int, default=4)
    w.add_argument("--m-hi", type=int, default=14)
    w.add_argument("--b", type=int, default=2)
    w.add_argument("--naive", action="store_true")
    w.add_argument("--out", default=None, help="CSV path (default: stdout)")
    add_server(w)
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("serve", help="run the HTTP service")
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--port", type=int, default=8000)
    v.set_defaults(func=cmd_serve)

    return top


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
