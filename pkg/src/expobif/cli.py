"""expobif command line.  Every subcommand is a request to the service (in-process unless --server)."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4

# options whose values may start with '-' (negative numbers, ranges)
_VALUE_FLAGS = {"--region", "--t", "--h", "--kappa", "--R", "--boundary-h"}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _normalize(argv):
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _floats(text: str, n: int, what: str):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{what} must be {n} comma-separated numbers") from None
    if len(vals) != n:
        raise argparse.ArgumentTypeError(f"{what} must be {n} comma-separated numbers")
    return vals


def region(text):
    return _floats(text, 4, "region")


def complex_pair(text):
    return _floats(text, 2, "kappa")


def size(text):
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError("size must look like 800x600") from None


def t_range(text):
    lo, sep, hi = text.partition("..")
    try:
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError("t range must look like a..b") from None


def int_list(text):
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers") from None


# -- transport ------------------------------------------------------------------------

def make_client(server=None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # starlette nags about its httpx transport
        from fastapi.testclient import TestClient

    from .api import app

    return TestClient(app, raise_server_exceptions=False)


def call(client, path, payload):
    r = client.post(path, json=payload)
    if r.status_code == 200:
        return r
    try:
        err = r.json()
        msg = f"{err['code']}: {err['message']}"
    except (ValueError, KeyError, TypeError):
        msg = f"HTTP {r.status_code}: {r.text[:200]}"
    raise CliError(EXIT_VALIDATION if 400 <= r.status_code < 500 else EXIT_SOLVER, msg)


# -- output ---------------------------------------------------------------------------

def _emit(data, out, binary=False):
    if out:
        with open(out, "wb" if binary else "w", newline=None if binary else "") as f:
            f.write(data)
    elif binary:
        sys.stdout.buffer.write(data)
    else:
        sys.stdout.write(data)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format(v, ".17g") for v in row])
    return buf.getvalue()


# -- subcommands ----------------------------------------------------------------------

def cmd_render(client, a):
    fmt = a.format or "ppm"
    if fmt not in ("ppm", "png"):
        raise CliError(EXIT_VALIDATION, "render writes ppm or png")
    w, h = a.size
    r = call(client, "/render", {"region": a.region, "width": w, "height": h, "max_iter": a.max_iter,
                                 "period_cap": a.period_cap, "palette": a.palette, "format": fmt})
    _emit(r.content, a.out, binary=True)


def cmd_trace(client, a):
    payload = {"t": list(a.t), "steps": a.steps}
    if a.kind == "dynamic":
        if a.kappa is None or a.address is None:
            raise CliError(EXIT_VALIDATION, "trace dynamic needs --kappa and --address")
        payload.update(kappa=a.kappa, address=a.address, seed_tol=a.seed_tol)
    elif a.kind == "parameter":
        if a.address is None:
            raise CliError(EXIT_VALIDATION, "trace parameter needs --address")
        payload.update(address=a.address)
    else:
        if a.h is None:
            raise CliError(EXIT_VALIDATION, "trace internal needs --h")
        payload.update(address=a.address, period=a.period, h=a.h, R=a.R)
    body = call(client, f"/trace/{a.kind}", payload).json()
    fmt = a.format or "csv"
    if fmt == "csv":
        _emit(to_csv(body["columns"], body["rows"]), a.out)
    elif fmt == "json":
        _emit(json.dumps(body, indent=2) + "\n", a.out)
    else:
        raise CliError(EXIT_VALIDATION, "trace writes csv or json")


def cmd_component(client, a):
    if (a.format or "json") != "json":
        raise CliError(EXIT_VALIDATION, "component writes json")
    points = a.boundary_points if a.boundary else 0
    body = call(client, "/component", {"address": a.address, "period": a.period, "R": a.R,
                                       "boundary_points": points, "boundary_h": list(a.boundary_h),
                                       "seed_tol": a.seed_tol}).json()
    rows = body.pop("boundary")
    if a.boundary:
        _emit(to_csv(["h", "re", "im"], rows), a.boundary)
        body["boundary"] = a.boundary
    _emit(json.dumps(body, indent=2) + "\n", a.out)


def cmd_comb(client, a):
    if a.query == "char":
        b = call(client, "/comb/char", {"address": a.address}).json()
        text = f"minus={b['minus']} plus={b['plus']}"
    elif a.query == "wake":
        b = call(client, "/comb/wake", {"address": a.address}).json()
        text = f"minus={b['minus']} plus={b['plus']} period={b['period']} kneading={b['forbidden_kneading']}"
    elif a.query == "knead":
        text = call(client, "/comb/knead", {"address": a.address}).json()["kneading"]
    else:
        b = call(client, "/comb/itin", {"r": a.r, "base": a.base, "wake": a.wake}).json()
        text = f"inside={'true' if b['inside'] else 'false'}" if a.wake else b["itinerary"]
    _emit(text + "\n", a.out)


def cmd_verify(client, a):
    body = call(client, "/verify", {"criteria": a.criteria}).json()
    if a.format == "json":
        _emit(json.dumps(body, indent=2) + "\n", a.out)
    else:
        lines = [r["line"] for r in body["results"]]
        n_ok = sum(r["passed"] for r in body["results"])
        lines.append(f"{n_ok}/{len(body['results'])} criteria passed")
        _emit("\n".join(lines) + "\n", a.out)
    if not body["passed"]:
        raise CliError(EXIT_VERIFY, "verification failed")


def cmd_serve(client, a):
    import uvicorn

    uvicorn.run("expobif.api:app", host=a.host, port=a.port)


# -- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="expobif", description="Exponential family combinatorics and numerics.")
    p.add_argument("--server", help="base URL of a running expobif service (default: in-process)")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=["ppm", "png", "csv", "json"])

    r = sub.add_parser("render", parents=[common], help="classify the parameter plane into an image")
    r.add_argument("--region", type=region, required=True, help="re_min,re_max,im_min,im_max")
    r.add_argument("--size", type=size, default=(800, 600), help="WxH pixels")
    r.add_argument("--max-iter", type=int, default=200)
    r.add_argument("--period-cap", type=int, default=8)
    r.add_argument("--palette", choices=["period", "gray"], default="period")
    r.set_defaults(func=cmd_render)

    t = sub.add_parser("trace", parents=[common], help="dynamic, parameter or internal ray as CSV")
    t.add_argument("kind", choices=["dynamic", "parameter", "internal"])
    t.add_argument("--address")
    t.add_argument("--kappa", type=complex_pair, help="re,im (dynamic rays)")
    t.add_argument("--period", type=int)
    t.add_argument("--h", type=float, help="internal ray height")
    t.add_argument("--R", type=float, default=10.0, help="re kappa used to locate the component")
    t.add_argument("--t", type=t_range, required=True, help="a..b")
    t.add_argument("--steps", type=int, default=100)
    t.add_argument("--seed-tol", type=float, default=1e-9, help="functional equation tolerance")
    t.set_defaults(func=cmd_trace)

    c = sub.add_parser("component", parents=[common], help="hyperbolic component record as JSON")
    c.add_argument("address", nargs="?")
    c.add_argument("--period", type=int)
    c.add_argument("--R", type=float, default=10.0)
    c.add_argument("--boundary", help="also write landing points of internal rays to this CSV")
    c.add_argument("--boundary-points", type=int, default=41)
    c.add_argument("--boundary-h", type=t_range, default=(-1.0, 1.0), help="internal ray heights a..b")
    c.add_argument("--seed-tol", type=float, default=1e-6, help="landing tolerance")
    c.set_defaults(func=cmd_component)

    cb = sub.add_parser("comb", help="combinatorics queries")
    csub = cb.add_subparsers(dest="query", required=True)
    for name, hlp in (("char", "characteristic addresses"), ("wake", "wake and forbidden kneading"),
                      ("knead", "kneading sequence")):
        q = csub.add_parser(name, help=hlp)
        q.add_argument("address")
        q.add_argument("--out")
    q = csub.add_parser("itin", help="itinerary of r, or whether r lies in a wake")
    q.add_argument("--r", required=True)
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--base")
    g.add_argument("--wake")
    q.add_argument("--out")
    cb.set_defaults(func=cmd_comb)

    v = sub.add_parser("verify", help="run the acceptance criteria")
    v.add_argument("--criteria", type=int_list, help="e.g. 1,2,5 (default all)")
    v.add_argument("--format", choices=["text", "json"], default="text")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(_normalize(sys.argv[1:] if argv is None else list(argv)))
    try:
        if args.command == "serve":
            args.func(None, args)
            return EXIT_OK
        with make_client(args.server) as client:
            args.func(client, args)
    except CliError as e:
        if e.code != EXIT_VERIFY:
            print(f"expobif: {e}", file=sys.stderr)
        return e.code
    except OSError as e:
        print(f"expobif: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
