"""Service operations: plain functions from request models to response
models. The FastAPI endpoints and the CLI's local mode both delegate here,
so the two surfaces cannot drift apart."""

from __future__ import annotations

import csv
import io

from .. import __version__
from ..compressor import compress_len, resolve_backend
from ..errors import InputError
from ..harness import detect, run_battery, run_experiment
from ..infodist import (
    CorpusFrequencyProvider,
    aid_approx,
    cond_len,
    distance_matrix,
    ncd,
    nid_approx,
    nwd,
)
from ..kg import encode as kg_encode
from ..kg import kg_from_text
from ..mdl import Dataset, Family, fit_best, fit_family, hypothesis_from_record
from ..metrics import AgentSnapshots, priors_pd, red_estimates
from . import schemas


def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(version=__version__)


def compress_length(req: schemas.CompressRequest) -> schemas.LengthResponse:
    data = schemas.decode_b64(req.data_b64, "data_b64")
    return schemas.LengthResponse(bits=compress_len(data, resolve_backend(req.backend)))


_PAIR_METRICS = {"ncd": ncd, "nid": nid_approx, "aid": aid_approx, "cond": cond_len}


def pair_distance(req: schemas.PairRequest) -> schemas.ValueResponse:
    if req.metric not in _PAIR_METRICS:
        raise InputError(f"unknown pair metric {req.metric!r}")
    x = schemas.decode_b64(req.x_b64, "x_b64")
    y = schemas.decode_b64(req.y_b64, "y_b64")
    backend = resolve_backend(req.backend)
    return schemas.ValueResponse(value=_PAIR_METRICS[req.metric](x, y, backend))


def matrix(req: schemas.MatrixRequest) -> schemas.MatrixResponse:
    items = [schemas.decode_b64(item.data_b64, f"items[{i}]") for i, item in enumerate(req.items)]
    ids = [item.id for item in req.items]
    result = distance_matrix(
        items, resolve_backend(req.backend), req.metric, ids, req.max_workers
    )
    return schemas.MatrixResponse(
        items=list(result.items),
        values=[list(row) for row in result.values],
        csv=result.to_csv(),
    )


def nwd_distance(req: schemas.NwdRequest) -> schemas.ValueResponse:
    provider = CorpusFrequencyProvider(req.corpus_text)
    return schemas.ValueResponse(value=nwd(req.term_a, req.term_b, provider))


def kg_encode_text(req: schemas.KgEncodeRequest) -> schemas.KgEncodeResponse:
    graph = kg_from_text(req.text)
    data = kg_encode(graph)
    return schemas.KgEncodeResponse(
        data_b64=schemas.encode_b64(data),
        byte_count=len(data),
        entity_count=len(graph.entities),
        relation_count=len(graph.relations),
        triple_count=len(graph.triples),
    )


def parse_dataset_csv(text: str, epsilon: float) -> Dataset:
    """Strict `x,y` CSV with a header row."""
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if not rows or [cell.strip() for cell in rows[0]] != ["x", "y"]:
        raise InputError("dataset CSV must start with the header 'x,y'")
    points = []
    for line_no, row in enumerate(rows[1:], 2):
        if len(row) != 2:
            raise InputError(f"dataset CSV line {line_no}: expected two columns")
        try:
            points.append((float(row[0]), float(row[1])))
        except ValueError:
            raise InputError(f"dataset CSV line {line_no}: non-numeric value") from None
    if not points:
        raise InputError("dataset CSV has no data rows")
    return Dataset(tuple(points), epsilon)


def fit(req: schemas.FitRequest) -> schemas.FitResponse:
    dataset = parse_dataset_csv(req.csv_text, req.epsilon)
    if req.family == "best":
        report = fit_best(dataset, req.max_terms)
    else:
        try:
            family = Family(req.family)
        except ValueError:
            raise InputError(
                f"unknown family {req.family!r} (expected polynomial, fourier, or best)"
            ) from None
        report = fit_family(dataset, family, req.max_terms)
    return schemas.FitResponse(record=report.to_record())


def detect_batch(req: schemas.DetectRequest) -> schemas.DetectResponse:
    hypothesis = hypothesis_from_record(req.model)
    batch = parse_dataset_csv(req.batch_csv, req.epsilon)
    if req.train_csv is not None:
        train_ds = parse_dataset_csv(req.train_csv, req.epsilon)
        from ..mdl import data_codelength

        baseline = data_codelength(hypothesis, train_ds) / len(train_ds.points)
        xs = [x for x, _ in train_ds.points]
        x_range = (min(xs), max(xs))
    else:
        if req.baseline is None or req.x_low is None or req.x_high is None:
            raise InputError("detect needs either train_csv or baseline with x_low/x_high")
        baseline = req.baseline
        x_range = (req.x_low, req.x_high)
    report = detect(hypothesis, baseline, batch, req.tau, x_range, req.margin)
    return schemas.DetectResponse(report=report.to_dict())


def red_metrics(req: schemas.RedRequest) -> schemas.RedResponse:
    snapshots = AgentSnapshots(
        schemas.decode_b64(req.pre_b64, "pre_b64"),
        schemas.decode_b64(req.pretr_b64, "pretr_b64"),
        schemas.decode_b64(req.post_b64, "post_b64"),
    )
    backend = resolve_backend(req.backend)
    estimates = red_estimates(snapshots, backend)
    return schemas.RedResponse(
        red=estimates["red"],
        red_estimators={
            "conditional": estimates["conditional"],
            "edit_script": estimates["edit_script"],
        },
        pd=priors_pd(snapshots, backend),
    )


def experiment(req: schemas.ExperimentRequest) -> schemas.ExperimentResponse:
    return schemas.ExperimentResponse(report=run_experiment(req.config))


def battery(req: schemas.BatteryRequest) -> schemas.BatteryResponse:
    return schemas.BatteryResponse(result=run_battery(req.config, req.seeds))
