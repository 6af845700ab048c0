"""Command-line interface: a thin client over the service layer.

Every subcommand builds a request model and dispatches it either in-process
(default) or to a running service instance when ``--server`` or the
``RED_KIT_SERVER`` environment variable is set. No metric logic lives here.

Exit codes: 0 success, 1 validation error, 2 computation error.
"""

from __future__ import annotations

import json
import os
import sys
import tempfile
from pathlib import Path

import click
from pydantic import BaseModel, ValidationError

from .config import ExperimentConfig
from .errors import ComputationError, InputError
from .harness import report_to_json
from .service import handlers, schemas

ENV_SERVER = "RED_KIT_SERVER"

_ROUTES = {
    "/compress/length": (handlers.compress_length, schemas.LengthResponse),
    "/distance/pair": (handlers.pair_distance, schemas.ValueResponse),
    "/distance/matrix": (handlers.matrix, schemas.MatrixResponse),
    "/distance/nwd": (handlers.nwd_distance, schemas.ValueResponse),
    "/kg/encode": (handlers.kg_encode_text, schemas.KgEncodeResponse),
    "/regression/fit": (handlers.fit, schemas.FitResponse),
    "/regression/detect": (handlers.detect_batch, schemas.DetectResponse),
    "/metrics/red": (handlers.red_metrics, schemas.RedResponse),
    "/experiment/run": (handlers.experiment, schemas.ExperimentResponse),
    "/experiment/battery": (handlers.battery, schemas.BatteryResponse),
}


class LocalClient:
    def call(self, path: str, payload: BaseModel):
        handler, _ = _ROUTES[path]
        return handler(payload)


class HttpClient:
    def __init__(self, base_url: str):
        self.base_url = base_url.rstrip("/")

    def call(self, path: str, payload: BaseModel):
        import httpx

        _, response_cls = _ROUTES[path]
        try:
            resp = httpx.post(
                self.base_url + path, json=payload.model_dump(mode="json"), timeout=600.0
            )
        except httpx.HTTPError as exc:
            raise ComputationError(f"service request failed: {exc}") from exc
        if resp.status_code == 422:
            raise InputError(_detail(resp))
        if resp.status_code >= 400:
            raise ComputationError(_detail(resp))
        return response_cls(**resp.json())


def _detail(resp) -> str:
    try:
        return str(resp.json().get("detail"))
    except Exception:
        return resp.text[:500]


def get_client(server: str | None):
    server = server or os.environ.get(ENV_SERVER)
    return HttpClient(server) if server else LocalClient()


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _write_atomic(path: str, data: bytes) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(target.parent) or ".", prefix=target.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, output: str | None) -> None:
    if output:
        _write_atomic(output, text.encode("utf-8"))
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


_server_option = click.option("--server", default=None, help="Service URL; default is in-process.")
_backend_option = click.option(
    "--backend", default="lz", show_default=True, help="Compressor backend: store, rle, lz, external."
)


@click.group()
def cli():
    """Compression-based novelty and adaptation-difficulty metrics."""


@cli.command("ncd")
@click.argument("file_a")
@click.argument("file_b")
@_backend_option
@_server_option
def ncd_cmd(file_a, file_b, backend, server):
    """Normalized compression distance between two files."""
    req = schemas.PairRequest(
        x_b64=schemas.encode_b64(_read_bytes(file_a)),
        y_b64=schemas.encode_b64(_read_bytes(file_b)),
        backend=backend,
        metric="ncd",
    )
    resp = get_client(server).call("/distance/pair", req)
    click.echo(f"{resp.value:.6f}")


@cli.command("matrix")
@click.argument("directory")
@click.option("--metric", default="ncd", show_default=True, type=click.Choice(["ncd", "nid"]))
@_backend_option
@click.option("--workers", default=None, type=int, help="Thread-pool size for pair evaluation.")
@click.option("--output", "-o", default=None, help="Write the CSV here instead of stdout.")
@_server_option
def matrix_cmd(directory, metric, backend, workers, output, server):
    """Pairwise distance matrix over the files in DIRECTORY, as CSV."""
    root = Path(directory)
    if not root.is_dir():
        raise InputError(f"{directory} is not a directory")
    files = sorted(p for p in root.iterdir() if p.is_file())
    if not files:
        raise InputError(f"{directory} contains no files")
    req = schemas.MatrixRequest(
        items=[
            schemas.MatrixItem(id=p.name, data_b64=schemas.encode_b64(p.read_bytes()))
            for p in files
        ],
        backend=backend,
        metric=metric,
        max_workers=workers,
    )
    resp = get_client(server).call("/distance/matrix", req)
    _emit(resp.csv, output)


@cli.command("nwd")
@click.argument("term_a")
@click.argument("term_b")
@click.option("--corpus", required=True, help="Corpus file, one document per line.")
@_server_option
def nwd_cmd(term_a, term_b, corpus, server):
    """Corpus-frequency distance between two terms."""
    req = schemas.NwdRequest(term_a=term_a, term_b=term_b, corpus_text=_read_text(corpus))
    resp = get_client(server).call("/distance/nwd", req)
    click.echo(f"{resp.value:.6f}")


@cli.command("kg-encode")
@click.argument("triples_file")
@click.option("--output", "-o", default=None, help="Write the encoding here instead of stdout.")
@_server_option
def kg_encode_cmd(triples_file, output, server):
    """Encode a head<TAB>relation<TAB>tail triple file to the binary format."""
    req = schemas.KgEncodeRequest(text=_read_text(triples_file))
    resp = get_client(server).call("/kg/encode", req)
    data = schemas.decode_b64(resp.data_b64, "data_b64")
    if output:
        _write_atomic(output, data)
        click.echo(
            f"wrote {resp.byte_count} bytes ({resp.entity_count} entities, "
            f"{resp.relation_count} relations, {resp.triple_count} triples)",
            err=True,
        )
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()


@cli.command("fit")
@click.argument("data_file")
@click.option("--family", default="best", show_default=True, type=click.Choice(["polynomial", "fourier", "best"]))
@click.option("--max-terms", default=8, show_default=True, type=int)
@click.option("--epsilon", default=2.0**-8, show_default=True, type=float)
@click.option("--output", "-o", default=None)
@_server_option
def fit_cmd(data_file, family, max_terms, epsilon, output, server):
    """Select and fit a model for an x,y CSV; prints the fit record as JSON."""
    req = schemas.FitRequest(
        csv_text=_read_text(data_file), family=family, max_terms=max_terms, epsilon=epsilon
    )
    resp = get_client(server).call("/regression/fit", req)
    _emit(_json_dump(resp.record) + "\n", output)


@cli.command("detect")
@click.argument("model_file")
@click.argument("batch_file")
@click.option("--tau", default=3.0, show_default=True, type=float, help="Flagging threshold, bits/point.")
@click.option("--train", default=None, help="Training CSV for baseline and x range.")
@click.option("--baseline", default=None, type=float, help="Baseline bits/point (with --x-low/--x-high).")
@click.option("--x-low", default=None, type=float)
@click.option("--x-high", default=None, type=float)
@click.option("--margin", default=0.1, show_default=True, type=float)
@click.option("--epsilon", default=2.0**-8, show_default=True, type=float)
@_server_option
def detect_cmd(model_file, batch_file, tau, train, baseline, x_low, x_high, margin, epsilon, server):
    """Score a batch against a fitted model and flag prediction mismatch."""
    try:
        model = json.loads(_read_text(model_file))
    except json.JSONDecodeError as exc:
        raise InputError(f"model file is not valid JSON: {exc}") from None
    req = schemas.DetectRequest(
        model=model,
        batch_csv=_read_text(batch_file),
        tau=tau,
        train_csv=_read_text(train) if train else None,
        baseline=baseline,
        x_low=x_low,
        x_high=x_high,
        margin=margin,
        epsilon=epsilon,
    )
    resp = get_client(server).call("/regression/detect", req)
    click.echo(_json_dump(resp.report))


@cli.command("red")
@click.option("--pre", "pre_file", required=True)
@click.option("--pretr", "pretr_file", required=True)
@click.option("--post", "post_file", required=True)
@_backend_option
@_server_option
def red_cmd(pre_file, pretr_file, post_file, backend, server):
    """Representation edit distance and priors from three snapshot files."""
    req = schemas.RedRequest(
        pre_b64=schemas.encode_b64(_read_bytes(pre_file)),
        pretr_b64=schemas.encode_b64(_read_bytes(pretr_file)),
        post_b64=schemas.encode_b64(_read_bytes(post_file)),
        backend=backend,
    )
    resp = get_client(server).call("/metrics/red", req)
    click.echo(_json_dump({"red": resp.red, "red_estimators": resp.red_estimators, "pd": resp.pd}))


def _load_config(path: str) -> ExperimentConfig:
    try:
        raw = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"config is not valid JSON: {exc}") from None
    return ExperimentConfig.model_validate(raw)


@cli.command("experiment")
@click.argument("config_file")
@click.option("--output", "-o", default=None, help="Write the report here (atomic).")
@_server_option
def experiment_cmd(config_file, output, server):
    """Run one end-to-end experiment from a JSON config."""
    req = schemas.ExperimentRequest(config=_load_config(config_file))
    resp = get_client(server).call("/experiment/run", req)
    _emit(report_to_json(resp.report), output)


@cli.command("battery")
@click.argument("config_file")
@click.option("--seeds", required=True, type=int, help="Number of consecutive seeds to run.")
@click.option("--output", "-o", default=None)
@_server_option
def battery_cmd(config_file, seeds, output, server):
    """Run the experiment across consecutive seeds and summarize."""
    req = schemas.BatteryRequest(config=_load_config(config_file), seeds=seeds)
    resp = get_client(server).call("/experiment/battery", req)
    _emit(_json_dump(resp.result) + "\n", output)


@cli.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve_cmd(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except (InputError, ValidationError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except ComputationError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
