import asyncio
import logging
import os
from typing import Optional

import numpy as np
import uvicorn
from dotenv import load_dotenv
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

load_dotenv()
from complex_ext import uc_probe
from diagnostics import vanishing_order_fit
from limits import deep_water_study_async, shallow_water_study_async
from models import EquationSpec, linear_symbol
from run_config import build_grid, build_initial_field, build_integrator, build_spec, parse_config
from spectral_core import make_grid
from timestep import run

logger = logging.getLogger(__name__)

API_HOST = os.getenv("BOLAB_API_HOST", "127.0.0.1")
API_PORT = int(os.getenv("BOLAB_API_PORT", 8000))

app = FastAPI(title="Benjamin-Ono Lab API", version="1.0.0")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)


class ConfigRequest(BaseModel):
    """Run configuration text in the flat key = value format"""
    config: str


def _spec_for(model: str, delta: Optional[float], k: Optional[int]) -> EquationSpec:
    if model == "bo":
        return EquationSpec.bo()
    if model == "gbo":
        return EquationSpec.gbo(k if k is not None else 2)
    if model == "bh":
        return EquationSpec.bh()
    if model == "ilw":
        if delta is None:
            raise ValueError("ilw requires delta")
        return EquationSpec.ilw(delta)
    if model == "kdv":
        return EquationSpec.kdv(k if k is not None else 2)
    raise ValueError(f"no constant symbol for model '{model}'")


@app.get("/")
async def root():
    return {"message": "Benjamin-Ono Lab API", "status": "running"}


@app.get("/api/symbols/{model}")
async def symbols_api(model: str, n: int = 64, length: float = 6.283185307179586,
                      delta: Optional[float] = None, k: Optional[int] = None):
    """Linear symbol Lambda(xi) of a model on a grid, ascending wavenumbers"""
    try:
        grid = make_grid(n, length)
        xi = grid.sorted_wavenumbers()
        values = linear_symbol(_spec_for(model, delta, k))(xi)
        return JSONResponse({
            "success": True,
            "model": model,
            "xi": xi.tolist(),
            "real": np.real(values).tolist(),
            "imag": np.imag(values).tolist(),
        })
    except Exception as e:
        return JSONResponse({"success": False, "error": str(e)})


@app.post("/api/simulate")
async def simulate_api(request: ConfigRequest):
    """Integrate a run configuration and return its diagnostics records"""
    try:
        cfg = parse_config(request.config)
        grid = build_grid(cfg)
        spec = build_spec(cfg)
        trajectory = await asyncio.to_thread(run, build_initial_field(cfg, grid), spec, build_integrator(cfg))
        logger.info(f"✅ [API] simulate {spec.label()}: {len(trajectory)} snapshots")
        return JSONResponse({
            "success": True,
            "model": spec.label(),
            "blowup": trajectory.blowup,
            "blowup_time": trajectory.blowup_time,
            "warnings": trajectory.warnings,
            "records": [record.to_dict() for record in trajectory.records],
        })
    except Exception as e:
        return JSONResponse({"success": False, "error": str(e)})


@app.post("/api/probe/uc")
async def probe_uc_api(request: ConfigRequest):
    """Unique-continuation probe (and vanishing-order fit when probe.radii is set) of the initial datum"""
    try:
        cfg = parse_config(request.config)
        if not cfg.probe_interval:
            raise ValueError("probe.interval is required")
        f = build_initial_field(cfg)
        report = uc_probe(f, tuple(cfg.probe_interval), cfg.probe_partner,
                          delta=cfg.delta, tol_zero=cfg.probe_tol_zero)
        response = {"success": True, "uc_probe": report.to_dict()}
        if cfg.probe_radii:
            response["vanishing_order"] = vanishing_order_fit(f, cfg.probe_x0, cfg.probe_radii).to_dict()
        return JSONResponse(response)
    except Exception as e:
        return JSONResponse({"success": False, "error": str(e)})


@app.post("/api/limits/{kind}")
async def limits_api(kind: str, request: ConfigRequest):
    """Deep- or shallow-water limit study over limits.deltas"""
    try:
        if kind not in ("deep", "shallow"):
            raise ValueError(f"kind must be 'deep' or 'shallow', got '{kind}'")
        cfg = parse_config(request.config)
        if not cfg.limits_deltas:
            raise ValueError("limits.deltas is required")
        u0 = build_initial_field(cfg)
        study = deep_water_study_async if kind == "deep" else shallow_water_study_async
        report = await study(u0, cfg.limits_deltas, cfg.time_t_final, build_integrator(cfg))
        return JSONResponse({"success": True, "report": report.to_dict()})
    except Exception as e:
        return JSONResponse({"success": False, "error": str(e)})


if __name__ == "__main__":
    logging.basicConfig(level=os.getenv("BOLAB_LOG_LEVEL", "INFO").upper())
    uvicorn.run(app, host=API_HOST, port=API_PORT)
