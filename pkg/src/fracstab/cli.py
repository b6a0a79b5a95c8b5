"""Command-line front end: a thin client over the HTTP service.

By default requests are dispatched in-process through an ASGI transport,
so no server needs to run; --server (or FRACSTAB_SERVER) points the same
client at a remote instance instead.  Either way the service renders all
output bytes, and this layer only parses the config file, routes the
request, writes files, and maps outcomes to exit codes:

    0  success (simulate completed, verdict stable, sweep written)
    2  unreadable or invalid config, or a request the service rejected
    3  simulate hit the blowup guard (partial trajectory still written)
    4  stability verdict Unstable
    5  no equilibrium found from the provided seeds
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from pathlib import Path
from typing import Optional

import httpx

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_UNSTABLE = 4
EXIT_NO_EQUILIBRIUM = 5

_STABLE_VERDICTS = {"AsymptoticallyStable", "MarginallyStable"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracstab",
        description="Fractional-order system simulation, stability reports, and gain sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = [
        ("simulate", "integrate the configured system and write a trajectory CSV"),
        ("stability", "classify the configured equilibrium and write a report"),
        ("sweep", "classify a gain grid and write a sweep CSV"),
    ]
    for name, help_text in specs:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, metavar="PATH", help="JSON scenario config")
        p.add_argument("--out", default=".", metavar="DIR", help="output directory (default: .)")
        p.add_argument(
            "--server",
            default=None,
            metavar="URL",
            help="remote service URL (default: in-process; env FRACSTAB_SERVER)",
        )
    return parser


async def _post_async(server: Optional[str], path: str, payload: dict):
    if server:
        transport = None
        base_url = server.rstrip("/")
    else:
        from .service.app import app

        transport = httpx.ASGITransport(app=app)
        base_url = "http://fracstab.internal"
    async with httpx.AsyncClient(
        transport=transport, base_url=base_url, timeout=None
    ) as client:
        resp = await client.post(path, json=payload)
        try:
            body = resp.json()
        except ValueError:
            body = {"detail": resp.text}
        return resp.status_code, body


def _post(server: Optional[str], path: str, payload: dict):
    return asyncio.run(_post_async(server, path, payload))


def _format_detail(body) -> str:
    detail = body.get("detail", body) if isinstance(body, dict) else body
    if isinstance(detail, str):
        return detail
    if isinstance(detail, list):
        # request-validation shape: [{loc: [...], msg: ...}, ...]
        parts = []
        for item in detail:
            loc = [str(p) for p in item.get("loc", []) if p != "body"]
            msg = item.get("msg", "invalid value")
            parts.append((".".join(loc) + ": " if loc else "") + msg)
        return "; ".join(parts)
    return str(detail)


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / name
    target.write_text(text)
    return target


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    server = args.server or os.environ.get("FRACSTAB_SERVER") or None

    try:
        raw = Path(args.config).read_text()
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as e:
        print(f"error: config is not valid JSON: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if not isinstance(payload, dict):
        print("error: config must be a JSON object", file=sys.stderr)
        return EXIT_CONFIG

    try:
        status, body = _post(server, f"/{args.command}", payload)
    except httpx.HTTPError as e:
        print(f"error: cannot reach service: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if status == 409:
        print(f"error: {_format_detail(body)}", file=sys.stderr)
        return EXIT_NO_EQUILIBRIUM
    if status != 200:
        print(f"error: {_format_detail(body)}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(args.out)
    if args.command == "simulate":
        target = _write(out_dir, payload.get("trajectory_csv", "trajectory.csv"), body["csv"])
        diverged = body["status"] == "diverged"
        print(
            f"simulate: {body['status']}, {body['n_steps']} steps, "
            f"final t = {body['final_time']:g}, wrote {target}"
        )
        return EXIT_BLOWUP if diverged else EXIT_OK

    if args.command == "stability":
        report_text = body.pop("report_text")
        json_text = json.dumps(body, indent=2, sort_keys=True) + "\n"
        _write(out_dir, payload.get("report_json", "report.json"), json_text)
        target = _write(out_dir, payload.get("report_txt", "report.txt"), report_text)
        print(report_text, end="")
        print(f"wrote {target}")
        return EXIT_OK if body["verdict"] in _STABLE_VERDICTS else EXIT_UNSTABLE

    # sweep
    target = _write(out_dir, payload.get("sweep_csv", "sweep.csv"), body["csv"])
    print(
        f"sweep: {body['n_points']} points, {body['stabilizing_count']} stabilizing, "
        f"wrote {target}"
    )
    return EXIT_OK


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
