"""Synthetic novelty generators, the prediction-mismatch detector, and the
end-to-end experiment runner.

Everything here is a pure function of its seed and parameters: generators
draw from explicitly seeded RNGs, the runner derives per-task and
per-curriculum sub-seeds arithmetically, and reports serialize to canonical
JSON so a fixed config reproduces a byte-identical report body.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass

import numpy as np

from .compressor import Backend
from .config import ExperimentConfig
from .errors import DivergenceError, InputError
from .kg import KnowledgeGraph, NovelMarks, encode, strip_novel
from .mdl import (
    Dataset,
    PointHypothesis,
    data_codelength,
    encode_hypothesis,
    fit_best,
    fit_point_hypothesis,
)
from .metrics import (
    AgentSnapshots,
    Curriculum,
    TaskSpec,
    adaptability_aeff,
    aggregate,
    experience_eff,
    fold_bytes,
    fold_kg,
    priors_pd,
    red_estimates,
)
from .net import DenseNetwork, encode_net, mse_loss, quantize, train

QUAD_COEFFICIENTS = (2.0, 7.0, 3.0)  # constant, linear, quadratic
SINE_FREQUENCY = 4.0
TRAINED_MSE_LIMIT = 0.05


# ---------------------------------------------------------------------------
# Generators


def gen_kg_novelty(
    seed: int, base_triples: int, novel_triples: int
) -> tuple[KnowledgeGraph, KnowledgeGraph, NovelMarks, list[bytes]]:
    """Random base graph plus injected novel triples, each introducing a new
    entity. Returns (pre, post, marks, curriculum step encodings); stripping
    the marks from post reproduces pre exactly."""
    if base_triples < 1:
        raise InputError("base_triples must be at least 1")
    if novel_triples < 0:
        raise InputError("novel_triples must be non-negative")
    rng = random.Random(int(seed))
    entity_pool = [f"ent_{i:04d}" for i in range(max(4, base_triples // 2))]
    relation_pool = [f"rel_{i:02d}" for i in range(max(2, base_triples // 10))]
    triples = set()
    while len(triples) < base_triples:
        head = rng.choice(entity_pool)
        tail = rng.choice(entity_pool)
        if head == tail:
            continue
        triples.add((head, rng.choice(relation_pool), tail))
    pre = KnowledgeGraph.from_triples(triples)

    existing = list(pre.sorted_entities)
    injected = []
    for j in range(novel_triples):
        new_entity = f"novel_{j:04d}"
        injected.append((rng.choice(existing), rng.choice(relation_pool), new_entity))
    post = KnowledgeGraph.from_triples(set(triples) | set(injected))
    marks = NovelMarks(
        entities=frozenset(t[2] for t in injected),
        triples=frozenset(injected),
    )
    steps = [encode(KnowledgeGraph.from_triples([t])) for t in injected]
    rng.shuffle(steps)
    return pre, post, marks, steps


def _quadratic(xs: np.ndarray) -> np.ndarray:
    c0, c1, c2 = QUAD_COEFFICIENTS
    return c2 * xs**2 + c1 * xs + c0


def gen_regression_novelty(
    seed: int,
    n_train: int = 200,
    n_test: int = 100,
    switch: str = "POLY_TO_SINE",
    noise_sigma: float = 0.1,
    epsilon: float = 2.0**-8,
) -> tuple[Dataset, Dataset, Dataset]:
    """Quadratic train/test batches and a sine-regime test batch on the same
    x range, all deterministic in the seed."""
    if switch != "POLY_TO_SINE":
        raise InputError(f"unknown regime switch {switch!r}")
    if n_train < 20:
        raise InputError("n_train must be at least 20")
    rng = np.random.default_rng(int(seed))

    def sample(n, fn):
        xs = rng.uniform(-1.0, 1.0, n)
        ys = fn(xs) + rng.normal(0.0, noise_sigma, n)
        return Dataset(tuple(zip(xs.tolist(), ys.tolist())), epsilon)

    train_ds = sample(n_train, _quadratic)
    test_same = sample(n_test, _quadratic)
    test_novel = sample(n_test, lambda xs: np.sin(SINE_FREQUENCY * xs))
    return train_ds, test_same, test_novel


def xor_task() -> list[tuple[list[float], list[float]]]:
    return [
        ([0.0, 0.0], [0.0]),
        ([0.0, 1.0], [1.0]),
        ([1.0, 0.0], [1.0]),
        ([1.0, 1.0], [0.0]),
    ]


def parity3_task() -> list[tuple[list[float], list[float]]]:
    rows = []
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                rows.append(([float(a), float(b), float(c)], [float(a ^ b ^ c)]))
    return rows


_NET_TASKS = {
    "xor2": (xor_task, 5000, 0.5),
    "parity3": (parity3_task, 15000, 0.3),
}


def net_from_json(text: str) -> tuple[str, DenseNetwork]:
    """Builds and trains a network from a JSON task spec:
    {"layer_sizes": [...], "seed": int, "task": "xor2" | "parity3"},
    optionally overriding "epochs" and "rate"."""
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"network spec is not valid JSON: {exc}") from None
    for key in ("layer_sizes", "seed", "task"):
        if key not in spec:
            raise InputError(f"network spec is missing {key!r}")
    task = spec["task"]
    if task not in _NET_TASKS:
        raise InputError(f"unknown network task {task!r} (expected one of {sorted(_NET_TASKS)})")
    data_fn, epochs, rate = _NET_TASKS[task]
    data = data_fn()
    sizes = tuple(spec["layer_sizes"])
    if not sizes or sizes[0] != len(data[0][0]) or sizes[-1] != len(data[0][1]):
        raise InputError(f"layer_sizes {sizes} do not fit task {task!r}")
    net = DenseNetwork.initialize(sizes, int(spec["seed"]))
    return task, train(net, data, int(spec.get("epochs", epochs)), float(spec.get("rate", rate)))


def gen_net_novelty(
    seed: int,
    xor_epochs: int = 5000,
    xor_rate: float = 0.5,
    parity_epochs: int = 15000,
    parity_rate: float = 0.3,
) -> tuple[str, str, DenseNetwork, DenseNetwork]:
    """A 2-4-1 net trained on XOR and a 3-4-1 net trained on 3-bit parity
    (structure change at the input layer), both to MSE below 0.05."""
    pre_data = xor_task()
    post_data = parity3_task()
    pre_net = train(DenseNetwork.initialize((2, 4, 1), seed), pre_data, xor_epochs, xor_rate)
    post_net = train(
        DenseNetwork.initialize((3, 4, 1), int(seed) + 1_000_003), post_data, parity_epochs, parity_rate
    )
    for name, net, data in (("xor2", pre_net, pre_data), ("parity3", post_net, post_data)):
        final = mse_loss(net, data)
        if final >= TRAINED_MSE_LIMIT:
            raise DivergenceError(
                f"{name} training stalled at MSE {final:.4f} (re-seed manually)"
            )
    return "xor2", "parity3", pre_net, post_net


# ---------------------------------------------------------------------------
# Mismatch detector


@dataclass(frozen=True)
class MismatchReport:
    """Bits-per-point comparison of a batch against the model's baseline."""

    baseline_bits_per_point: float
    batch_bits_per_point: float
    flagged: bool
    classification: str  # INHERENT | CONTEXTUAL | NONE

    def to_dict(self) -> dict:
        return {
            "baseline_bits_per_point": self.baseline_bits_per_point,
            "batch_bits_per_point": self.batch_bits_per_point,
            "flagged": self.flagged,
            "classification": self.classification,
        }


def detect(
    hypothesis: PointHypothesis,
    baseline: float,
    batch: Dataset,
    tau: float,
    train_x_range: tuple[float, float],
    margin: float = 0.1,
) -> MismatchReport:
    """Flags the batch when its mean residual bits exceed the baseline by tau.

    A flagged batch whose x values all lie within the (margin-widened)
    training support is classified CONTEXTUAL -- familiar ground, unexpected
    observations; flagged batches outside the support are INHERENT. Support
    membership is a testable proxy for the introspective familiar/unfamiliar
    distinction.
    """
    if tau <= 0:
        raise InputError("tau must be positive")
    if not batch.points:
        raise InputError("batch is empty")
    score = data_codelength(hypothesis, batch) / len(batch.points)
    flagged = (score - baseline) > tau
    low, high = train_x_range
    in_support = all(low - margin <= x <= high + margin for x, _ in batch.points)
    if not flagged:
        classification = "NONE"
    elif in_support:
        classification = "CONTEXTUAL"
    else:
        classification = "INHERENT"
    return MismatchReport(float(baseline), float(score), bool(flagged), classification)


# ---------------------------------------------------------------------------
# Experiment runner


def _dataset_csv_bytes(points) -> bytes:
    lines = ["x,y"]
    for x, y in points:
        lines.append(f"{x!r},{y!r}")
    return "\n".join(lines).encode("utf-8")


def _chunks(seq, n):
    n = max(1, min(n, len(seq)))
    size = math.ceil(len(seq) / n)
    return [seq[i : i + size] for i in range(0, len(seq), size)]


def _kg_task(cfg: ExperimentConfig, task_seed: int):
    pre, post, marks, steps = gen_kg_novelty(task_seed, cfg.base_triples, cfg.novel_triples)
    pretr = strip_novel(post, marks)
    snapshots = AgentSnapshots(encode(pre), encode(pretr), encode(post))
    extra = {
        "base_triples": cfg.base_triples,
        "novel_triples": cfg.novel_triples,
        "post_triple_count": len(post.triples),
    }
    return snapshots, steps, fold_kg, extra


def _regression_task(cfg: ExperimentConfig, task_seed: int):
    train_ds, test_same, test_novel = gen_regression_novelty(
        task_seed, cfg.n_train, cfg.n_test, noise_sigma=cfg.noise_sigma, epsilon=cfg.epsilon
    )
    pre_fit = fit_best(train_ds, cfg.max_terms)
    post_fit = fit_best(test_novel, cfg.max_terms)
    # training-time solution: the post model's structure with parameters fit
    # on the pre-novelty training data
    pretr_h = fit_point_hypothesis(
        train_ds, post_fit.hypothesis.family, post_fit.hypothesis.term_count
    )
    snapshots = AgentSnapshots(
        encode_hypothesis(pre_fit.hypothesis),
        encode_hypothesis(pretr_h),
        encode_hypothesis(post_fit.hypothesis),
    )
    xs = [x for x, _ in train_ds.points]
    baseline = pre_fit.l_data / len(train_ds.points)
    x_range = (min(xs), max(xs))
    det_same = detect(pre_fit.hypothesis, baseline, test_same, cfg.tau, x_range, cfg.margin)
    det_novel = detect(pre_fit.hypothesis, baseline, test_novel, cfg.tau, x_range, cfg.margin)
    steps = [_dataset_csv_bytes(chunk) for chunk in _chunks(test_novel.points, cfg.curriculum_chunks)]
    extra = {
        "fit_pre": pre_fit.to_record(),
        "fit_post": post_fit.to_record(),
        "detector": {"same_regime": det_same.to_dict(), "novel_regime": det_novel.to_dict()},
    }
    return snapshots, steps, fold_bytes, extra


def _network_task(cfg: ExperimentConfig, task_seed: int):
    pre_name, post_name, pre_net, post_net = gen_net_novelty(task_seed)
    pre_enc = encode_net(quantize(pre_net, cfg.quant_bits))
    post_enc = encode_net(quantize(post_net, cfg.quant_bits))
    # no defined transfer of a trained structure across differing input
    # layers, so the training-time snapshot is the pre-novelty network
    snapshots = AgentSnapshots(pre_enc, pre_enc, post_enc)
    steps = [
        _dataset_csv_bytes([(sum(x * 2**i for i, x in enumerate(inp)), out[0])])
        for inp, out in parity3_task()
    ]
    steps = [b"\n".join(chunk) for chunk in _chunks(steps, cfg.curriculum_chunks)]
    extra = {
        "pre_task": pre_name,
        "post_task": post_name,
        "pre_mse": mse_loss(pre_net, xor_task()),
        "post_mse": mse_loss(post_net, parity3_task()),
        "pre_layer_sizes": list(pre_net.layer_sizes),
        "post_layer_sizes": list(post_net.layer_sizes),
    }
    return snapshots, steps, fold_bytes, extra


_SCENARIOS = {"KG": _kg_task, "REGRESSION": _regression_task, "NETWORK": _network_task}


def _jsonable(value: float):
    return "inf" if math.isinf(value) else value


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Generates the scenario, computes the full metric stack per task and
    curriculum, and returns the report dictionary (canonical-JSON ready)."""
    backend = Backend(cfg.backend)
    build_task = _SCENARIOS[cfg.scenario]
    rows = []
    agg_inputs = []
    scenario_extras = {}
    for t_i, task_cfg in enumerate(cfg.tasks):
        task_seed = int(cfg.seed) + 7919 * t_i
        task = TaskSpec(task_cfg.id, task_cfg.theta, task_cfg.omega)
        snapshots, step_pool, fold, extra = build_task(cfg, task_seed)
        scenario_extras[task.id] = extra

        estimates = red_estimates(snapshots, backend)
        red_value = estimates["red"]
        pd_value = priors_pd(snapshots, backend)
        start = snapshots.pre if cfg.experience_start == "pre" else b""

        flags: set[str] = set()
        per_curriculum = []
        eeff_expected = 0.0
        aeff_expected = 0.0
        first_gains: list[float] = []
        for c_i, cur_cfg in enumerate(cfg.curricula):
            order = list(step_pool)
            random.Random(task_seed * 1009 + c_i).shuffle(order)
            curriculum = Curriculum(tuple(order), cur_cfg.pb)
            if curriculum.steps:
                eeff_value, gains = experience_eff(
                    snapshots.post, curriculum, backend, fold, start
                )
            else:
                eeff_value, gains = 0.0, []
            result = adaptability_aeff(red_value, pd_value, eeff_value)
            flags.update(result.flags)
            per_curriculum.append((curriculum, result.value))
            eeff_expected += cur_cfg.pb * eeff_value
            aeff_expected += cur_cfg.pb * result.value
            if c_i == 0:
                first_gains = gains
        agg_inputs.append((task, per_curriculum))
        rows.append(
            {
                "id": task.id,
                "theta": task.theta,
                "omega": task.omega,
                "red": red_value,
                "red_estimators": {
                    "conditional": estimates["conditional"],
                    "edit_script": estimates["edit_script"],
                },
                "pd": pd_value,
                "eeff": eeff_expected,
                "steps": first_gains,
                "aeff": _jsonable(aeff_expected),
                "flags": sorted(flags),
            }
        )
    total = aggregate(agg_inputs)
    return {
        "backend": backend.value,
        "tasks": rows,
        "aggregate": _jsonable(total),
        "scenario": {"kind": cfg.scenario, "tasks": scenario_extras},
        "config_hash": cfg.config_hash(),
    }


def report_to_json(report: dict) -> str:
    """Canonical report serialization: sorted keys, fixed layout, newline end."""
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def run_battery(cfg: ExperimentConfig, seeds: int) -> dict:
    """Runs the experiment across consecutive seeds and summarizes."""
    if seeds < 1:
        raise InputError("seeds must be at least 1")
    runs = []
    for offset in range(seeds):
        sub = cfg.model_copy(update={"seed": cfg.seed + offset})
        report = run_experiment(sub)
        entry = {
            "seed": sub.seed,
            "aggregate": report["aggregate"],
            "tasks": [
                {"id": r["id"], "red": r["red"], "pd": r["pd"], "eeff": r["eeff"], "aeff": r["aeff"]}
                for r in report["tasks"]
            ],
        }
        if cfg.scenario == "REGRESSION":
            entry["detector"] = {
                task_id: extra["detector"]
                for task_id, extra in report["scenario"]["tasks"].items()
            }
        runs.append(entry)

    def _finite(values):
        return [v for v in values if isinstance(v, (int, float)) and math.isfinite(v)]

    reds = _finite([t["red"] for run in runs for t in run["tasks"]])
    aeffs = _finite([t["aeff"] for run in runs for t in run["tasks"]])
    summary = {
        "mean_red": sum(reds) / len(reds) if reds else None,
        "mean_aeff": sum(aeffs) / len(aeffs) if aeffs else None,
    }
    if cfg.scenario == "REGRESSION":
        novel_flags = sum(
            1
            for run in runs
            for det in run["detector"].values()
            if det["novel_regime"]["flagged"]
        )
        same_flags = sum(
            1
            for run in runs
            for det in run["detector"].values()
            if det["same_regime"]["flagged"]
        )
        summary["novel_flagged"] = novel_flags
        summary["same_flagged"] = same_flags
    return {
        "scenario": cfg.scenario,
        "base_seed": cfg.seed,
        "seeds": seeds,
        "runs": runs,
        "summary": summary,
    }
