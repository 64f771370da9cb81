"""Command line client for the analysis service.

Every subcommand is a thin HTTP client: it posts a request to the
service and renders the response. With USCKC_SERVICE_URL set, requests
go to that server; otherwise the service app is mounted in-process over
an ASGI transport, so no daemon is needed for local batch use. Output
files are always written client-side from response payloads.

Exit codes: 0 success, 1 validation failure, 2 enumeration cap exceeded,
3 asset-load failure (or service unreachable).
"""

from __future__ import annotations

import argparse
import asyncio
import os
import sys
from pathlib import Path

import httpx

from .errors import EXIT_ASSET_LOAD, EXIT_OK, EXIT_VALIDATION

SERVICE_URL_ENV = "USCKC_SERVICE_URL"

_EXIT_BY_CODE = {"validation": 1, "cap-exceeded": 2, "asset-load": 3}


def _error_line(code: str, message: str, incident_id: str | None = None) -> str:
    fields = [f"usckc-error", f"code={code}"]
    if incident_id:
        fields.append(f"incident={incident_id}")
    fields.append(f"msg={message}")
    return "\t".join(fields)


async def _post_async(path: str, payload: dict) -> httpx.Response:
    url = os.environ.get(SERVICE_URL_ENV)
    if url:
        async with httpx.AsyncClient(base_url=url, timeout=300.0) as client:
            return await client.post(path, json=payload)
    from .service.app import create_app

    transport = httpx.ASGITransport(app=create_app())
    async with httpx.AsyncClient(
        transport=transport, base_url="http://usckc.local", timeout=300.0
    ) as client:
        return await client.post(path, json=payload)


def _post(path: str, payload: dict) -> tuple[int, dict]:
    """POST to the service; returns (exit_code, body). Prints one
    machine-parseable error line to stderr on failure."""
    try:
        response = asyncio.run(_post_async(path, payload))
    except httpx.HTTPError as exc:
        print(_error_line("asset-load", f"service unreachable: {exc}"), file=sys.stderr)
        return EXIT_ASSET_LOAD, {}
    try:
        body = response.json()
    except ValueError:
        body = {}
    if response.status_code == 200:
        return EXIT_OK, body
    error = (body or {}).get("error")
    if error:
        print(
            _error_line(error.get("code", "validation"),
                        error.get("message", "request failed"),
                        error.get("incident_id")),
            file=sys.stderr,
        )
        return _EXIT_BY_CODE.get(error.get("code"), EXIT_VALIDATION), body
    print(
        _error_line("validation", f"service returned HTTP {response.status_code}: {body}"),
        file=sys.stderr,
    )
    return EXIT_VALIDATION, body


def _asset_payload(args) -> dict:
    keys = ("config", "catalog", "graph", "corpus", "rules", "scores", "manifest")
    return {key: getattr(args, key, None) for key in keys}


def _add_asset_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file naming all asset paths")
    parser.add_argument("--catalog", help="tactic/technique catalog file")
    parser.add_argument("--graph", help="infrastructure graph file")
    parser.add_argument("--corpus", help="incident corpus file (JSONL)")
    parser.add_argument("--rules", help="extrapolation rulebase file")
    parser.add_argument("--scores", help="score table file")
    parser.add_argument("--manifest", help="corpus manifest file")


def _cmd_ingest(args) -> int:
    code, body = _post("/ingest", _asset_payload(args))
    if code:
        return code
    print(f"records: {body['record_count']}")
    for key, count in sorted(body["by_type"].items()):
        if count:
            print(f"  {key}: {count}")
    return EXIT_OK


def _cmd_extrapolate(args) -> int:
    payload = _asset_payload(args)
    payload["record"] = args.record
    if args.cap is not None:
        payload["cap"] = args.cap
    code, body = _post("/extrapolate", payload)
    if code:
        return code
    print(
        f"{body['incident_id']}: observed={body['observed_count']} "
        f"steps={body['total_steps']} "
        f"branch_profile={body['branch_profile']} "
        f"chains={body['chain_count']} pruned={body['pruned_count']}"
    )
    if args.out:
        Path(args.out).write_text(
            "\n".join(body["export_lines"]) + ("\n" if body["export_lines"] else ""),
            encoding="utf-8",
        )
        print(f"wrote {len(body['export_lines'])} chains to {args.out}")
    return EXIT_OK


def _cmd_score(args) -> int:
    payload = _asset_payload(args)
    payload["chains"] = args.chains
    code, body = _post("/score", payload)
    if code:
        return code
    sys.stdout.write(body["text"])
    return EXIT_OK


def _cmd_summarize(args) -> int:
    code, body = _post("/summarize", _asset_payload(args))
    if code:
        return code
    print(f"records: {body['record_count']}")
    for key, count in sorted(body["by_type"].items()):
        print(f"  {key}: {count}")
    if body.get("manifest_total_chains") is not None:
        print(f"manifest total chains: {body['manifest_total_chains']}")
    for line in body.get("discrepancies", []):
        print(f"discrepancy: {line}")
    return EXIT_OK


def _cmd_export(args) -> int:
    payload = _asset_payload(args)
    if args.cap is not None:
        payload["cap"] = args.cap
    code, body = _post("/pipeline", payload)
    if code:
        return code
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "scorecards.tsv").write_text(body["scorecard_text"], encoding="utf-8")
    lines = body["chain_export_lines"]
    (out_dir / "chains.jsonl").write_text(
        "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
    )
    print(
        f"wrote {len(body['scorecards'])} scorecards and "
        f"{body['total_chains']} chains to {out_dir}"
    )
    return EXIT_OK


def _cmd_import_taxonomy(args) -> int:
    payload = {"stix": args.stix, "sparta": args.sparta, "version": args.version}
    code, body = _post("/import-taxonomy", payload)
    if code:
        return code
    Path(args.out).write_text(body["catalog_text"], encoding="utf-8")
    print(
        f"wrote catalog with {body['tactic_count']} tactics and "
        f"{body['technique_count']} techniques to {args.out}"
    )
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="usckc",
        description="Reconstruct, extrapolate, and score unified space cyber kill chains",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus and print a type summary")
    _add_asset_flags(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("extrapolate", help="extrapolate probable chains for one record")
    _add_asset_flags(p)
    p.add_argument("--record", required=True, help="incident_id to extrapolate")
    p.add_argument("--cap", type=int, help="enumeration cap (default 100000)")
    p.add_argument("--out", help="write the chain export (JSONL) here")
    p.set_defaults(func=_cmd_extrapolate)

    p = sub.add_parser("score", help="score an exported chain file")
    _add_asset_flags(p)
    p.add_argument("--chains", required=True, help="chain export file to score")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("summarize", help="summarize a corpus against its manifest")
    _add_asset_flags(p)
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("export", help="run the full pipeline and write outputs")
    _add_asset_flags(p)
    p.add_argument("--cap", type=int, help="enumeration cap (default 100000)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("import-taxonomy", help="convert upstream taxonomy exports")
    p.add_argument("--stix", help="ATT&CK STIX 2.1 bundle")
    p.add_argument("--sparta", help="SPARTA export document")
    p.add_argument("--version", help="version string for the converted catalog")
    p.add_argument("--out", required=True, help="catalog file to write")
    p.set_defaults(func=_cmd_import_taxonomy)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
