"""Operator CLI: a thin client over the HTTP API.

Every subcommand maps to one route, so the CLI exercises exactly the code
paths the web console uses.  The token comes from --token or $OPENPC_TOKEN;
the service address from --url or $OPENPC_URL.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from typing import Optional

import httpx

DEFAULT_URL = "http://127.0.0.1:8066"

_DURATION = re.compile(r"^(\d+(?:\.\d+)?)([smhd])$")
_UNIT_SECONDS = {"s": 1.0, "m": 60.0, "h": 3600.0, "d": 86400.0}


def parse_duration_arg(text: str) -> float:
    match = _DURATION.match(text)
    if not match:
        raise argparse.ArgumentTypeError(f"duration like 30s/15m/2h/7d expected, got {text!r}")
    return float(match.group(1)) * _UNIT_SECONDS[match.group(2)]


class Client:
    def __init__(self, url: str, token: Optional[str]):
        headers = {}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._http = httpx.Client(base_url=url, headers=headers, timeout=30.0)

    def call(self, method: str, path: str, body: Optional[dict] = None, params=None):
        response = self._http.request(method, path, json=body, params=params)
        content_type = response.headers.get("content-type", "")
        payload = response.json() if "json" in content_type else response.text
        if response.status_code >= 400:
            sys.stderr.write(f"error {response.status_code}: {payload}\n")
            raise SystemExit(1)
        return payload


def emit(payload) -> None:
    if isinstance(payload, str):
        sys.stdout.write(payload if payload.endswith("\n") or not payload else payload + "\n")
    else:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="openpc")
    parser.add_argument("--url", default=None, help="service base URL")
    parser.add_argument("--token", default=None, help="session token")
    sub = parser.add_subparsers(dest="topic", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", default=None)

    user = sub.add_parser("user").add_subparsers(dest="verb", required=True)
    p = user.add_parser("register")
    p.add_argument("username")
    p.add_argument("--display", default=None)
    p.add_argument("--password", required=True)
    p = user.add_parser("login")
    p.add_argument("username")
    p.add_argument("--password", required=True)
    p = user.add_parser("approve")
    p.add_argument("username")
    user.add_parser("list")
    user.add_parser("whoami")

    node = sub.add_parser("node").add_subparsers(dest="verb", required=True)
    node.add_parser("list")
    p = node.add_parser("power")
    p.add_argument("node_id")
    p.add_argument("action", choices=("on", "off"))
    p = node.add_parser("status")
    p.add_argument("node_id")

    block = sub.add_parser("block").add_subparsers(dest="verb", required=True)
    p = block.add_parser("request")
    p.add_argument("nodes", type=int)
    p.add_argument("--duration", type=parse_duration_arg, default=None)
    p.add_argument("--start", type=float, default=None)
    p.add_argument("--end", type=float, default=None)
    p.add_argument("--desc", default="")
    p = block.add_parser("requests")
    p.add_argument("--state", default=None)
    p = block.add_parser("review")
    p.add_argument("request_id")
    p.add_argument("decision", choices=("approve", "reject"))
    p.add_argument("--nodes", default=None, help="comma-separated explicit allocation")
    p.add_argument("--reason", default=None)
    for verb in ("activate", "deactivate", "show", "queue"):
        p = block.add_parser(verb)
        p.add_argument("block_id")
    p = block.add_parser("env")
    p.add_argument("block_id")
    p.add_argument("profile")
    block.add_parser("list")

    job = sub.add_parser("job").add_subparsers(dest="verb", required=True)
    p = job.add_parser("submit")
    p.add_argument("queue")
    p.add_argument("--nodes", type=int, default=1)
    p.add_argument("--cpu", type=float, default=1.0)
    p.add_argument("--payload", default=None)
    p.add_argument("--payload-bytes", type=int, default=0)
    p.add_argument("--env", dest="environment", default="openmpi")
    p.add_argument("--fail", action="store_true")
    p = job.add_parser("show")
    p.add_argument("job_id")
    p = job.add_parser("action")
    p.add_argument("job_id")
    p.add_argument("action", choices=("suspend", "resume", "stop", "delete", "reexecute"))
    p = job.add_parser("logs")
    p.add_argument("job_id")
    p = job.add_parser("list")
    p.add_argument("queue")

    bench = sub.add_parser("bench").add_subparsers(dest="verb", required=True)
    p = bench.add_parser("flood")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--require-nodes", action="store_true")
    p = bench.add_parser("csv")
    p.add_argument("run_id")
    p = bench.add_parser("raw")
    p.add_argument("run_id")

    command = sub.add_parser("command", help="send a raw command through the gateway")
    command.add_argument("block_id")
    command.add_argument("raw", nargs=argparse.REMAINDER)

    sub.add_parser("status")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    if args.topic == "serve":
        from .api import serve as run_service
        from .config import ServiceConfig

        run_service(ServiceConfig.load(args.config))
        return 0

    url = args.url or os.environ.get("OPENPC_URL") or DEFAULT_URL
    client = Client(url, args.token or os.environ.get("OPENPC_TOKEN"))

    if args.topic == "user":
        if args.verb == "register":
            emit(client.call("POST", "/users", {
                "username": args.username,
                "display_name": args.display or args.username,
                "password": args.password,
            }))
        elif args.verb == "login":
            emit(client.call("POST", "/sessions", {
                "username": args.username, "password": args.password,
            }))
        elif args.verb == "approve":
            emit(client.call("POST", f"/users/{args.username}/approve"))
        elif args.verb == "list":
            emit(client.call("GET", "/users"))
        else:
            emit(client.call("GET", "/users/me"))
    elif args.topic == "node":
        if args.verb == "list":
            emit(client.call("GET", "/nodes"))
        elif args.verb == "power":
            emit(client.call("POST", f"/nodes/{args.node_id}/power", {"action": args.action}))
        else:
            emit(client.call("GET", f"/nodes/{args.node_id}/status"))
    elif args.topic == "block":
        if args.verb == "request":
            body = {"nodes": args.nodes, "description": args.desc}
            if args.duration is not None:
                body["duration_s"] = args.duration
            else:
                body["start"] = args.start
                body["end"] = args.end
            emit(client.call("POST", "/blocks/requests", body))
        elif args.verb == "requests":
            params = {"state": args.state} if args.state else None
            emit(client.call("GET", "/blocks/requests", params=params))
        elif args.verb == "review":
            body = {"decision": args.decision, "reason": args.reason}
            if args.nodes:
                body["allocated"] = args.nodes.split(",")
            emit(client.call("POST", f"/blocks/requests/{args.request_id}/review", body))
        elif args.verb == "activate":
            emit(client.call("POST", f"/blocks/{args.block_id}/activate"))
        elif args.verb == "deactivate":
            emit(client.call("POST", f"/blocks/{args.block_id}/deactivate"))
        elif args.verb == "show":
            emit(client.call("GET", f"/blocks/{args.block_id}"))
        elif args.verb == "queue":
            emit(client.call("GET", f"/blocks/{args.block_id}/queue"))
        elif args.verb == "env":
            emit(client.call("POST", f"/blocks/{args.block_id}/environment",
                             {"profile": args.profile}))
        else:
            emit(client.call("GET", "/blocks"))
    elif args.topic == "job":
        if args.verb == "submit":
            emit(client.call("POST", f"/queues/{args.queue}/jobs", {
                "nodes_requested": args.nodes,
                "cpu_seconds_estimate": args.cpu,
                "payload_name": args.payload,
                "payload_bytes": args.payload_bytes,
                "environment_profile": args.environment,
                "fail": args.fail,
            }))
        elif args.verb == "show":
            emit(client.call("GET", f"/jobs/{args.job_id}"))
        elif args.verb == "action":
            emit(client.call("POST", f"/jobs/{args.job_id}/actions", {"action": args.action}))
        elif args.verb == "logs":
            emit(client.call("GET", f"/jobs/{args.job_id}/logs"))
        else:
            emit(client.call("GET", f"/queues/{args.queue}/jobs"))
    elif args.topic == "bench":
        if args.verb == "flood":
            config = {}
            for pair in args.set:
                key, sep, value = pair.partition("=")
                if not sep:
                    sys.stderr.write(f"--set wants KEY=VALUE, got {pair!r}\n")
                    return 1
                config[key.strip()] = value.strip()
            emit(client.call("POST", "/bench/flood", {
                "config": config, "require_nodes": args.require_nodes,
            }))
        elif args.verb == "csv":
            emit(client.call("GET", f"/bench/flood/{args.run_id}/csv"))
        else:
            emit(client.call("GET", f"/bench/flood/{args.run_id}/raw"))
    elif args.topic == "command":
        raw = " ".join(args.raw).strip()
        if not raw:
            sys.stderr.write("command text required\n")
            return 1
        emit(client.call("POST", "/gateway/commands", {"block_id": args.block_id, "command": raw}))
    elif args.topic == "status":
        emit(client.call("GET", "/status"))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
