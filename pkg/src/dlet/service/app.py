"""HTTP service exposing decomposition, solving, caches, and variance.

All numerical work happens server-side; clients exchange JSON plus one
binary format (the cache bundle).  Built caches are held in an
in-process registry keyed by a content hash of their build parameters,
so identical build requests are answered by the stored instance; the
export/import pair moves bundles across processes.
"""

from __future__ import annotations

import hashlib
import json
import tempfile
import threading
from collections import OrderedDict
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .. import __version__
from ..diffusionlets import build_cache, load_cache, reconstruct, \
    save_cache, truncated_reconstruct
from ..errors import DletError
from ..error_structure import covariance_solution, proportional_weights, \
    variance_field
from ..pde import solve_discounted, undiscount
from ..presets import parse_preset
from ..validation import run_suite
from ..wavelets import filter_report, fwt_decompose, fwt_reconstruct, \
    make_basis
from .models import BasisRequest, CacheBuildRequest, CovarianceRequest, \
    DecomposeRequest, HealthResponse, ReconstructRequest, SolveRequest, \
    ValidateRequest, VarianceRequest

REGISTRY_LIMIT = 32


def _cache_key(params: dict) -> str:
    blob = json.dumps(params, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _cache_meta(cache_id: str, cache) -> dict:
    return {
        "cache_id": cache_id,
        "mode": cache.mode,
        "tau_max": cache.tau_max,
        "n_snapshots": int(cache.tau_snapshots.size),
        "x_extent": [float(cache.x_extent[0]), float(cache.x_extent[1])],
        "build_params": cache.build_params,
    }


def create_app() -> FastAPI:
    app = FastAPI(title="dlet", version=__version__)
    app.state.caches = OrderedDict()
    app.state.lock = threading.Lock()

    def _store(cache_id: str, cache) -> None:
        with app.state.lock:
            app.state.caches[cache_id] = cache
            app.state.caches.move_to_end(cache_id)
            while len(app.state.caches) > REGISTRY_LIMIT:
                app.state.caches.popitem(last=False)

    def _fetch(cache_id: str):
        with app.state.lock:
            cache = app.state.caches.get(cache_id)
        if cache is None:
            raise DletError(f"unknown cache_id {cache_id!r}; build or "
                            "import a cache first")
        return cache

    @app.exception_handler(DletError)
    def _dlet_error(request: Request, exc: DletError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    def _value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/basis")
    def basis(req: BasisRequest):
        b = make_basis(req.order, resolution=req.resolution)
        return {
            "order": req.order,
            "resolution": req.resolution,
            "filter_report": filter_report(b.filters),
            "father": {"x": b.father.grid().tolist(),
                       "values": b.father.values.tolist()},
            "mother": {"x": b.mother.grid().tolist(),
                       "values": b.mother.values.tolist()},
        }

    @app.post("/decompose")
    def decompose(req: DecomposeRequest):
        preset = parse_preset(req.preset)
        basis = make_basis(req.order)
        samples = preset.sample(req.origin, req.period, req.levels)
        expansion = fwt_decompose(samples, basis.filters, req.levels,
                                  origin=req.origin)
        back = fwt_reconstruct(expansion, basis.filters)
        scale = float(np.max(np.abs(samples))) or 1.0
        return {
            "expansion": expansion.to_dict(),
            "preset": {"name": preset.name, "params": preset.params},
            "round_trip_error": float(np.max(np.abs(back - samples))
                                      / scale),
        }

    @app.post("/solve")
    def solve(req: SolveRequest):
        preset = parse_preset(req.preset)
        sol = solve_discounted(req.lam, req.sigma, preset, req.x_lo,
                               req.x_hi, req.horizon, req.nx, req.nt)
        if req.r != 0.0:
            sol = undiscount(sol, req.r)
        taus = req.taus if req.taus is not None else [req.horizon]
        rows = [sol.row(t).tolist() for t in taus]
        return {"taus": taus, "x_grid": sol.x_grid.tolist(), "rows": rows,
                "discount_rate": req.r}

    @app.post("/cache")
    def cache_build(req: CacheBuildRequest):
        params = req.model_dump(by_alias=True)
        cache_id = _cache_key(params)
        with app.state.lock:
            existing = app.state.caches.get(cache_id)
        if existing is None:
            basis = make_basis(req.order)
            existing = build_cache(
                req.lam, req.sigma, basis, req.tau_max,
                tau_min=req.tau_min, dx=req.dx,
                n_substeps=req.n_substeps, x_lo=req.x_lo, x_hi=req.x_hi,
                mode=req.mode,
                exact_levels=req.exact_levels,
                exact_period=req.exact_period)
            _store(cache_id, existing)
        return _cache_meta(cache_id, existing)

    @app.get("/cache/{cache_id}")
    def cache_meta(cache_id: str):
        return _cache_meta(cache_id, _fetch(cache_id))

    @app.get("/cache/{cache_id}/export")
    def cache_export(cache_id: str):
        cache = _fetch(cache_id)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "cache.npz"
            save_cache(cache, str(path))
            blob = path.read_bytes()
        return Response(content=blob,
                        media_type="application/octet-stream")

    @app.post("/cache/import")
    async def cache_import(request: Request):
        blob = await request.body()
        if not blob:
            raise DletError("empty cache upload")
        cache_id = hashlib.sha256(blob).hexdigest()[:16]
        with app.state.lock:
            cached = cache_id in app.state.caches
        if not cached:
            with tempfile.TemporaryDirectory() as tmp:
                path = Path(tmp) / "cache.npz"
                path.write_bytes(blob)
                cache = load_cache(str(path))
            _store(cache_id, cache)
        return _cache_meta(cache_id, _fetch(cache_id))

    @app.post("/reconstruct")
    def reconstruct_endpoint(req: ReconstructRequest):
        cache = _fetch(req.cache_id)
        expansion = req.expansion.to_expansion()
        x = np.asarray(req.x, dtype=float)
        if req.epsilon is None:
            values = reconstruct(cache, expansion, req.tau, x)
            terms = expansion.coefficient_count()
        else:
            values, terms = truncated_reconstruct(cache, expansion,
                                                  req.epsilon, req.tau, x)
        return {"tau": req.tau, "x": req.x,
                "values": np.asarray(values, dtype=float).tolist(),
                "terms_used": int(terms),
                "epsilon": req.epsilon}

    @app.post("/variance")
    def variance(req: VarianceRequest):
        cache = _fetch(req.cache_id)
        expansion = req.expansion.to_expansion()
        weights = proportional_weights(c=req.gamma.c, eta=req.gamma.eta)
        field = variance_field(cache, expansion, weights, req.taus, req.x)
        return {"taus": req.taus, "x_grid": req.x,
                "values": field.values.tolist(),
                "gamma": {"c": req.gamma.c, "eta": req.gamma.eta}}

    @app.post("/covariance")
    def covariance(req: CovarianceRequest):
        cache = _fetch(req.cache_id)
        expansion = req.expansion.to_expansion()
        weights = proportional_weights(c=req.gamma.c, eta=req.gamma.eta)
        rows = []
        for t1, x1, t2, x2 in req.pairs:
            c = covariance_solution(cache, expansion, weights, (t1, x1),
                                    (t2, x2))
            rows.append([t1, x1, t2, x2, c])
        return {"rows": rows,
                "gamma": {"c": req.gamma.c, "eta": req.gamma.eta}}

    @app.post("/validate")
    def validate(req: ValidateRequest):
        return run_suite(req.suite, seed=req.seed)

    return app
