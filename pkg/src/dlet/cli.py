"""Command-line client for reproducible batch runs.

Commands cover the full pipeline: ``basis`` and ``decompose`` for the
wavelet side, ``solve`` and ``cache`` for the equation, ``reconstruct``
and ``variance``/``covariance`` for cached evaluation and uncertainty,
and ``validate`` for the built-in suites.  All computation runs through
the HTTP service; by default the app is mounted in-process, while
``--server URL`` targets a running instance.  Parameters resolve in
three layers: built-in defaults, then a ``key = value`` config file
(``--config``), then explicit flags.  Every JSON artifact embeds the
schema version, the fully-resolved config, and wall-clock timing; with
``--format csv`` the values additionally land in the documented CSV
tables.  Exit status is 0 only on full success.
"""

from __future__ import annotations

import argparse
import asyncio
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import httpx
import numpy as np

from . import __version__
from .errors import DletError
from .serialize import envelope, read_json, write_covariance_csv, \
    write_json, write_samples_csv, write_surface_csv, write_variance_csv


@dataclass(frozen=True)
class Param:
    """One resolvable command parameter."""

    key: str
    kind: str  # float | int | str | floats | pairs | ints
    default: object = None
    required: bool = False
    help: str = ""


_SCHEMAS = {
    "basis": [
        Param("order", "int", 4, help="Daubechies order p"),
        Param("resolution", "int", 11,
              help="dyadic sampling resolution of the tables"),
    ],
    "decompose": [
        Param("preset", "str", required=True,
              help="terminal condition, e.g. gaussian_bump, "
                   "call_payoff(1.0), indicator(2,5), csv:PATH"),
        Param("order", "int", 4),
        Param("levels", "int", 3, help="detail levels I"),
        Param("period", "int", 8, help="coarse period P"),
        Param("origin", "float", 0.0),
    ],
    "solve": [
        Param("lambda", "float", required=True,
              help="diffusion exponent in [0, 1]"),
        Param("sigma", "float", required=True),
        Param("preset", "str", required=True),
        Param("x_lo", "float", required=True),
        Param("x_hi", "float", required=True),
        Param("horizon", "float", required=True),
        Param("nx", "int", 513),
        Param("nt", "int", 128),
        Param("r", "float", 0.0, help="discount rate applied to rows"),
        Param("taus", "floats", None,
              help="output times, comma-separated (default: horizon)"),
    ],
    "cache": [
        Param("lambda", "float", required=True),
        Param("sigma", "float", required=True),
        Param("order", "int", 4),
        Param("tau_max", "float", required=True),
        Param("tau_min", "float", None),
        Param("dx", "float", 1.0 / 128.0),
        Param("n_substeps", "int", 32),
        Param("x_lo", "float", None),
        Param("x_hi", "float", None),
        Param("mode", "str", "fast", help="fast or exact"),
        Param("exact_levels", "ints", None),
        Param("exact_period", "int", None),
    ],
    "reconstruct": [
        Param("cache", "str", required=True, help="cache .npz path"),
        Param("expansion", "str", required=True,
              help="expansion JSON path (decompose output)"),
        Param("tau", "float", required=True),
        Param("x_lo", "float", required=True),
        Param("x_hi", "float", required=True),
        Param("nx", "int", 257),
        Param("epsilon", "float", None,
              help="essential-support threshold; enables truncation"),
    ],
    "variance": [
        Param("cache", "str", required=True),
        Param("expansion", "str", required=True),
        Param("taus", "floats", required=True),
        Param("x_lo", "float", required=True),
        Param("x_hi", "float", required=True),
        Param("nx", "int", 129),
        Param("gamma_c", "float", 1.0, help="weight level"),
        Param("gamma_eta", "float", 0.0, help="per-level weight decay"),
    ],
    "covariance": [
        Param("cache", "str", required=True),
        Param("expansion", "str", required=True),
        Param("pairs", "pairs", required=True,
              help="tau1,x1,tau2,x2 groups separated by semicolons"),
        Param("gamma_c", "float", 1.0),
        Param("gamma_eta", "float", 0.0),
    ],
    "validate": [
        Param("suite", "str", required=True,
              help="filters, heat_oracle, self_similarity, refinement, "
                   "translation, variance_mc, sharp, cir, cev"),
    ],
}

_HELP = {
    "basis": "tabulate a wavelet pair and its constraint residuals",
    "decompose": "expand a terminal condition in a wavelet basis",
    "solve": "solve the backward equation for a terminal condition",
    "cache": "build and save a diffusionlet cache",
    "reconstruct": "evaluate a cached solution for an expansion",
    "variance": "tabulate the solution-variance field",
    "covariance": "evaluate solution covariances at point pairs",
    "validate": "run a named validation suite",
}


def _coerce(param: Param, text: str):
    if text == "" or text.lower() == "none":
        return None
    try:
        if param.kind == "float":
            return float(text)
        if param.kind == "int":
            return int(text)
        if param.kind == "floats":
            return [float(tok) for tok in text.split(",") if tok.strip()]
        if param.kind == "ints":
            return [int(tok) for tok in text.split(",") if tok.strip()]
        if param.kind == "pairs":
            rows = []
            for group in text.split(";"):
                vals = [float(tok) for tok in group.split(",")]
                if len(vals) != 4:
                    raise ValueError("expected tau1,x1,tau2,x2")
                rows.append(vals)
            return rows
    except ValueError as exc:
        raise DletError(f"bad value for {param.key}: {text!r} ({exc})")
    return text


def _parse_config_file(path: str) -> dict:
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DletError(f"cannot read config {path}: {exc}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DletError(
                f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, text = line.split("=", 1)
        values[key.strip()] = text.strip()
    return values


def _resolve(command: str, args: argparse.Namespace) -> dict:
    params = {p.key: p for p in _SCHEMAS[command]}
    resolved = {p.key: p.default for p in params.values()}
    if args.config:
        for key, text in _parse_config_file(args.config).items():
            if key not in params:
                raise DletError(f"config key {key!r} not used by "
                                f"{command}")
            resolved[key] = _coerce(params[key], text)
    for key, param in params.items():
        flag_value = getattr(args, key.replace("-", "_"), None)
        if flag_value is not None:
            resolved[key] = _coerce(param, flag_value)
    missing = [k for k, p in params.items()
               if p.required and resolved[k] is None]
    if missing:
        raise DletError(f"{command}: missing required parameters: "
                        + ", ".join(f"--{k.replace('_', '-')}"
                                    for k in missing))
    resolved["command"] = command
    resolved["seed"] = args.seed
    resolved["format"] = args.format
    return resolved


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlet",
        description="wavelet decomposition, cached solving, and "
                    "uncertainty propagation for one-dimensional "
                    "parabolic equations")
    parser.add_argument("--version", action="version",
                        version=f"dlet {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name, params in _SCHEMAS.items():
        p = sub.add_parser(name, help=_HELP[name])
        for param in params:
            p.add_argument(f"--{param.key.replace('_', '-')}",
                           dest=param.key.replace("-", "_"),
                           default=None, metavar=param.kind.upper(),
                           help=param.help or None)
        p.add_argument("--config", default=None, metavar="PATH",
                       help="key = value parameter file; flags override")
        p.add_argument("--seed", type=int, default=0, metavar="N")
        p.add_argument("--out", default=".", metavar="DIR")
        p.add_argument("--format", choices=("csv", "json"),
                       default="json")
        p.add_argument("--server", default=None, metavar="URL",
                       help="remote service URL (default: in-process)")
    return parser


def _make_client(server: Optional[str]) -> httpx.AsyncClient:
    if server:
        return httpx.AsyncClient(base_url=server, timeout=600.0)
    from .service import create_app
    return httpx.AsyncClient(
        transport=httpx.ASGITransport(app=create_app()),
        base_url="http://dlet.internal", timeout=600.0)


async def _call(client: httpx.AsyncClient, method: str, url: str,
                **kwargs) -> httpx.Response:
    resp = await client.request(method, url, **kwargs)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("error") or resp.json()
        except ValueError:
            detail = resp.text
        raise DletError(f"{method} {url} failed ({resp.status_code}): "
                        f"{detail}")
    return resp


def _read_expansion_doc(path: str) -> dict:
    doc = read_json(path)
    return doc.get("expansion", doc)


async def _upload_cache(client, path: str) -> str:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise DletError(f"cannot read cache {path}: {exc}")
    resp = await _call(client, "POST", "/cache/import", content=blob)
    return resp.json()["cache_id"]


def _emit(out_dir: Path, name: str, kind: str, config: dict,
          payload: dict, started: float) -> Path:
    doc = envelope(kind, config, payload,
                   timing={"wall_s": round(time.perf_counter() - started,
                                           4)})
    path = out_dir / f"{name}.json"
    write_json(path, doc)
    return path


async def _cmd_basis(client, cfg, out_dir, started):
    resp = await _call(client, "POST", "/basis",
                       json={"order": cfg["order"],
                             "resolution": cfg["resolution"]})
    doc = resp.json()
    write_samples_csv(out_dir / "father.csv", doc["father"]["x"],
                      doc["father"]["values"])
    write_samples_csv(out_dir / "mother.csv", doc["mother"]["x"],
                      doc["mother"]["values"])
    _emit(out_dir, "filter_report", "basis", cfg,
          {"filter_report": doc["filter_report"]}, started)
    return 0


async def _cmd_decompose(client, cfg, out_dir, started):
    resp = await _call(client, "POST", "/decompose",
                       json={"preset": cfg["preset"],
                             "order": cfg["order"],
                             "levels": cfg["levels"],
                             "period": cfg["period"],
                             "origin": cfg["origin"]})
    doc = resp.json()
    _emit(out_dir, "expansion", "expansion", cfg,
          {"expansion": doc["expansion"], "preset": doc["preset"],
           "round_trip_error": doc["round_trip_error"]}, started)
    return 0


async def _cmd_solve(client, cfg, out_dir, started):
    body = {key: cfg[key] for key in ("lambda", "sigma", "preset", "x_lo",
                                      "x_hi", "horizon", "nx", "nt", "r")}
    if cfg["taus"] is not None:
        body["taus"] = cfg["taus"]
    resp = await _call(client, "POST", "/solve", json=body)
    doc = resp.json()
    payload = {"taus": doc["taus"], "x_grid": doc["x_grid"],
               "rows": doc["rows"]}
    if cfg["format"] == "csv":
        write_surface_csv(out_dir / "solution.csv", doc["taus"],
                          doc["x_grid"], doc["rows"])
        payload = {"taus": doc["taus"], "artifact": "solution.csv"}
    _emit(out_dir, "solution", "solution", cfg, payload, started)
    return 0


async def _cmd_cache(client, cfg, out_dir, started):
    body = {key: cfg[key] for key in ("lambda", "sigma", "order",
                                      "tau_max", "tau_min", "dx",
                                      "n_substeps", "x_lo", "x_hi",
                                      "mode", "exact_levels",
                                      "exact_period")}
    resp = await _call(client, "POST", "/cache", json=body)
    meta = resp.json()
    blob = await _call(client, "GET",
                       f"/cache/{meta['cache_id']}/export")
    (out_dir / "cache.npz").write_bytes(blob.content)
    _emit(out_dir, "cache", "cache", cfg,
          {"meta": meta, "artifact": "cache.npz"}, started)
    return 0


async def _cmd_reconstruct(client, cfg, out_dir, started):
    cache_id = await _upload_cache(client, cfg["cache"])
    x = np.linspace(cfg["x_lo"], cfg["x_hi"], cfg["nx"]).tolist()
    body = {"cache_id": cache_id,
            "expansion": _read_expansion_doc(cfg["expansion"]),
            "tau": cfg["tau"], "x": x, "epsilon": cfg["epsilon"]}
    resp = await _call(client, "POST", "/reconstruct", json=body)
    doc = resp.json()
    payload = {"tau": doc["tau"], "x": doc["x"],
               "values": doc["values"], "terms_used": doc["terms_used"],
               "epsilon": doc["epsilon"]}
    if cfg["format"] == "csv":
        write_samples_csv(out_dir / "reconstruction.csv", doc["x"],
                          doc["values"])
        payload = {"tau": doc["tau"], "terms_used": doc["terms_used"],
                   "epsilon": doc["epsilon"],
                   "artifact": "reconstruction.csv"}
    _emit(out_dir, "reconstruction", "reconstruction", cfg, payload,
          started)
    return 0


async def _cmd_variance(client, cfg, out_dir, started):
    cache_id = await _upload_cache(client, cfg["cache"])
    x = np.linspace(cfg["x_lo"], cfg["x_hi"], cfg["nx"]).tolist()
    body = {"cache_id": cache_id,
            "expansion": _read_expansion_doc(cfg["expansion"]),
            "taus": cfg["taus"], "x": x,
            "gamma": {"c": cfg["gamma_c"], "eta": cfg["gamma_eta"]}}
    resp = await _call(client, "POST", "/variance", json=body)
    doc = resp.json()
    payload = {"taus": doc["taus"], "x_grid": doc["x_grid"],
               "values": doc["values"], "gamma": doc["gamma"]}
    if cfg["format"] == "csv":
        write_variance_csv(out_dir / "variance.csv", doc["taus"],
                           doc["x_grid"], doc["values"])
        payload = {"taus": doc["taus"], "gamma": doc["gamma"],
                   "artifact": "variance.csv"}
    _emit(out_dir, "variance", "variance", cfg, payload, started)
    return 0


async def _cmd_covariance(client, cfg, out_dir, started):
    cache_id = await _upload_cache(client, cfg["cache"])
    body = {"cache_id": cache_id,
            "expansion": _read_expansion_doc(cfg["expansion"]),
            "pairs": cfg["pairs"],
            "gamma": {"c": cfg["gamma_c"], "eta": cfg["gamma_eta"]}}
    resp = await _call(client, "POST", "/covariance", json=body)
    doc = resp.json()
    payload = {"rows": doc["rows"], "gamma": doc["gamma"]}
    if cfg["format"] == "csv":
        write_covariance_csv(out_dir / "covariance.csv", doc["rows"])
        payload = {"gamma": doc["gamma"], "artifact": "covariance.csv"}
    _emit(out_dir, "covariance", "covariance", cfg, payload, started)
    return 0


async def _cmd_validate(client, cfg, out_dir, started):
    resp = await _call(client, "POST", "/validate",
                       json={"suite": cfg["suite"], "seed": cfg["seed"]})
    report = resp.json()
    _emit(out_dir, "validation", "validation", cfg,
          {"report": report}, started)
    for check in report["checks"]:
        print(f"[{check['status']:>13s}] {report['suite']}: "
              f"{check['name']} = {check['value']:.6g}")
    print(f"suite {report['suite']}: {report['status']}")
    return 0 if report["status"] == "pass" else 1


_RUNNERS = {
    "basis": _cmd_basis,
    "decompose": _cmd_decompose,
    "solve": _cmd_solve,
    "cache": _cmd_cache,
    "reconstruct": _cmd_reconstruct,
    "variance": _cmd_variance,
    "covariance": _cmd_covariance,
    "validate": _cmd_validate,
}


async def _run(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    cfg = _resolve(args.command, args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    async with _make_client(args.server) as client:
        return await _RUNNERS[args.command](client, cfg, out_dir, started)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 2
    try:
        return asyncio.run(_run(args))
    except DletError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
