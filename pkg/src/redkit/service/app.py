"""FastAPI application wrapping the core package."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import ComputationError, InputError
from . import handlers, schemas

app = FastAPI(
    title="redkit",
    description="Compression-based novelty and adaptation-difficulty metrics",
)


@app.exception_handler(InputError)
async def _input_error(request: Request, exc: InputError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(ComputationError)
async def _computation_error(request: Request, exc: ComputationError):
    return JSONResponse(status_code=500, content={"detail": str(exc)})


@app.get("/health", response_model=schemas.HealthResponse)
def health():
    return handlers.health()


@app.post("/compress/length", response_model=schemas.LengthResponse)
def compress_length(req: schemas.CompressRequest):
    return handlers.compress_length(req)


@app.post("/distance/pair", response_model=schemas.ValueResponse)
def pair_distance(req: schemas.PairRequest):
    return handlers.pair_distance(req)


@app.post("/distance/matrix", response_model=schemas.MatrixResponse)
def matrix(req: schemas.MatrixRequest):
    return handlers.matrix(req)


@app.post("/distance/nwd", response_model=schemas.ValueResponse)
def nwd_distance(req: schemas.NwdRequest):
    return handlers.nwd_distance(req)


@app.post("/kg/encode", response_model=schemas.KgEncodeResponse)
def kg_encode_text(req: schemas.KgEncodeRequest):
    return handlers.kg_encode_text(req)


@app.post("/regression/fit", response_model=schemas.FitResponse)
def fit(req: schemas.FitRequest):
    return handlers.fit(req)


@app.post("/regression/detect", response_model=schemas.DetectResponse)
def detect_batch(req: schemas.DetectRequest):
    return handlers.detect_batch(req)


@app.post("/metrics/red", response_model=schemas.RedResponse)
def red_metrics(req: schemas.RedRequest):
    return handlers.red_metrics(req)


@app.post("/experiment/run", response_model=schemas.ExperimentResponse)
def experiment(req: schemas.ExperimentRequest):
    return handlers.experiment(req)


@app.post("/experiment/battery", response_model=schemas.BatteryResponse)
def battery(req: schemas.BatteryRequest):
    return handlers.battery(req)
