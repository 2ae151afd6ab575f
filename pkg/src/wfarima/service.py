"""Stateless HTTP fitting service.

``POST /v1/fit`` takes a JSON series and returns the calibration;
``GET /v1/health`` reports liveness.  Nothing is stored between requests.
Concurrency is capped by a semaphore: a request arriving while every slot
is busy gets 503 instead of queueing.

Configuration (flags of ``wfarima serve`` or environment):
``FARIMA_MAX_WORKERS`` (default: CPU count) and ``FARIMA_MAX_POINTS``
(default 1e6).
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
import uuid
from typing import List, Literal, Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from starlette.concurrency import run_in_threadpool
from scipy import linalg

from . import __version__
from .errors import FarimaError
from .pipeline import fit_series

log = logging.getLogger(__name__)

DEFAULT_MAX_POINTS = 1_000_000


class FitRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    series: List[float]
    p: int = Field(ge=0, le=20)
    q: int = Field(ge=0, le=20)
    method: Literal["lse", "onestep"] = "onestep"
    delta: float = Field(0.9, gt=0.5, le=1.0)
    curvature_mode: Literal["full_hessian", "outer_product", "closed_form"] = "outer_product"
    transform: Literal["none", "returns_squared_centered"] = "none"


class FitResponse(BaseModel):
    theta: List[float]
    std_errors: List[float]
    sigma2: float
    omega: List[List[float]]
    m_used: int
    runtime_ms: float
    warnings: List[str]


def _error(status: int, detail, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": detail, **extra})


def create_app(max_workers: Optional[int] = None, max_points: Optional[int] = None) -> FastAPI:
    if max_workers is None:
        max_workers = int(os.environ.get("FARIMA_MAX_WORKERS", os.cpu_count() or 1))
    if max_points is None:
        max_points = int(os.environ.get("FARIMA_MAX_POINTS", DEFAULT_MAX_POINTS))
    slots = threading.BoundedSemaphore(max(1, max_workers))
    # a JSON float rarely needs more than 32 bytes
    max_body = 64 * max_points + 4096

    app = FastAPI(title="wfarima", version=__version__)
    app.state.max_workers = max_workers
    app.state.max_points = max_points
    app.state.requests = 0
    counter_lock = threading.Lock()

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/fit")
    async def fit(request: Request):
        with counter_lock:
            app.state.requests += 1
        length = request.headers.get("content-length")
        if length is not None and length.isdigit() and int(length) > max_body:
            return _error(413, f"request body exceeds the limit for {max_points} points")
        body = await request.body()
        try:
            payload = json.loads(body)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            return _error(400, f"malformed JSON: {exc}")
        if isinstance(payload, dict) and isinstance(payload.get("series"), list):
            if len(payload["series"]) > max_points:
                return _error(413, f"series has {len(payload['series'])} points; limit is {max_points}")
        try:
            req = FitRequest.model_validate(payload)
        except ValidationError as exc:
            return _error(400, json.loads(exc.json(include_url=False, include_context=False)))
        if not np.all(np.isfinite(req.series)):
            return _error(400, "series contains non-finite values")

        if not slots.acquire(blocking=False):
            return _error(503, "all fit workers are busy; retry later")
        try:
            t0 = time.perf_counter()
            result = await run_in_threadpool(
                fit_series, req.series, req.p, req.q, req.method, req.delta, req.curvature_mode, req.transform
            )
            runtime_ms = 1000.0 * (time.perf_counter() - t0)
        except (FarimaError, linalg.LinAlgError, ValueError) as exc:
            return _error(422, str(exc), error=type(exc).__name__)
        except Exception:
            incident = uuid.uuid4().hex
            log.exception("internal error %s", incident)
            return _error(500, "internal error", id=incident)
        finally:
            slots.release()
        return FitResponse(
            theta=result.theta_hat.flat.tolist(),
            std_errors=result.std_errors.tolist(),
            sigma2=result.sigma2_hat,
            omega=result.omega_hat.tolist(),
            m_used=result.m_used,
            runtime_ms=runtime_ms,
            warnings=result.warnings,
        ).model_dump()

    return app

