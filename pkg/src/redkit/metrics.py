"""The difficulty-of-adaptation metric stack over byte encodings.

All quantities are ratios of code lengths from the compressor backends:

* ``red`` -- normalized cost of turning the training-time representation
  into the post-novelty one. Conditional code length is the default
  estimator; when both encodings decode as knowledge graphs, an edit-script
  estimator is computed too and the minimum is reported (both retained).
* ``pd`` -- fraction of the post representation already explained by the
  initial (pre) representation.
* ``eeff`` -- accumulated per-step drops in conditional code length as a
  curriculum folds into the agent state, normalized by the post length.
* ``aeff`` -- red over (pd + eeff), with degenerate denominators flagged
  rather than raised.

red and pd are clamped into [0, 1]; per-step experience gains are clamped
at 0 (compressor noise can produce tiny negative deltas, the ideal
quantities cannot).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

from . import kg
from .compressor import SEPARATOR, compress_len
from .errors import InputError, KgParseError
from .infodist import cond_len

DEGENERATE_EPS = 1e-9

FLAG_DEGENERATE = "degenerate"
FLAG_INFINITE = "infinite_adaptability"

StateFold = Callable[[bytes, bytes], bytes]


@dataclass(frozen=True)
class TaskSpec:
    """Task identity with its skill threshold and subjective value."""

    id: str
    theta: float
    omega: float

    def __post_init__(self):
        if not 0 < self.theta <= 1:
            raise InputError(f"theta must be in (0, 1], got {self.theta}")
        if not (self.omega >= 0 and math.isfinite(self.omega)):
            raise InputError(f"omega must be finite and non-negative, got {self.omega}")


@dataclass(frozen=True)
class Curriculum:
    """Ordered training data items with this curriculum's probability."""

    steps: tuple[bytes, ...]
    pb: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(bytes(s) for s in self.steps))
        if not 0 < self.pb <= 1:
            raise InputError(f"curriculum probability must be in (0, 1], got {self.pb}")


@dataclass(frozen=True)
class AgentSnapshots:
    """Encodings of the initial agent, the training-time solution structure,
    and the post-novelty solution. ``pre`` may be empty (prior-free agent)."""

    pre: bytes
    pretr: bytes
    post: bytes

    def __post_init__(self):
        object.__setattr__(self, "pre", bytes(self.pre))
        object.__setattr__(self, "pretr", bytes(self.pretr))
        object.__setattr__(self, "post", bytes(self.post))
        if not self.post:
            raise InputError("post snapshot must be non-empty")


def _clamp01(value: float) -> float:
    return min(1.0, max(0.0, value))


def red_estimates(snapshots: AgentSnapshots, backend) -> dict:
    """All edit-distance estimators plus the reported minimum.

    Returns {"conditional", "edit_script" (None unless both pretr and post
    decode as knowledge graphs), "red"}.
    """
    post_bits = compress_len(snapshots.post, backend)
    conditional = _clamp01(cond_len(snapshots.post, snapshots.pretr, backend) / post_bits)
    script_estimate = None
    try:
        pretr_graph = kg.decode(snapshots.pretr)
        post_graph = kg.decode(snapshots.post)
        script = kg.edit_script(pretr_graph, post_graph)
    except (KgParseError, InputError):
        pass
    else:
        script_estimate = _clamp01(kg.script_codelength(script) / post_bits)
    reported = conditional if script_estimate is None else min(conditional, script_estimate)
    return {"conditional": conditional, "edit_script": script_estimate, "red": reported}


def red(snapshots: AgentSnapshots, backend) -> float:
    """Normalized representation edit distance, in [0, 1]."""
    return red_estimates(snapshots, backend)["red"]


def priors_pd(snapshots: AgentSnapshots, backend) -> float:
    """Share of the post representation already carried by the pre snapshot."""
    post_bits = compress_len(snapshots.post, backend)
    return _clamp01(1.0 - cond_len(snapshots.post, snapshots.pre, backend) / post_bits)


def fold_bytes(state: bytes, data: bytes) -> bytes:
    """Byte-append accumulation with the standard separator."""
    if not state:
        return bytes(data)
    return bytes(state) + SEPARATOR + bytes(data)


def fold_kg(state: bytes, data: bytes) -> bytes:
    """Graph-union accumulation over encoded knowledge graphs."""
    if not state:
        return bytes(data)
    return kg.encode(kg.union(kg.decode(state), kg.decode(data)))


def experience_eff(
    post: bytes,
    curriculum: Curriculum,
    backend,
    state_fold: StateFold = fold_bytes,
    start_state: bytes = b"",
) -> tuple[float, list[float]]:
    """Accumulated experience over the curriculum, plus per-step gains.

    Each step's gain is the drop in conditional code length of the post
    representation when the state absorbs that step's data, clamped at 0.
    """
    if not curriculum.steps:
        raise InputError("curriculum has no steps")
    post_bits = compress_len(post, backend)
    state = bytes(start_state)
    gains = []
    before = cond_len(post, state, backend)
    for step in curriculum.steps:
        state = state_fold(state, step)
        after = cond_len(post, state, backend)
        gains.append(max(0.0, before - after))
        before = after
    return sum(gains) / post_bits, gains


class AdaptabilityResult(NamedTuple):
    value: float
    flags: tuple[str, ...]


def adaptability_aeff(red_value: float, pd_value: float, eeff_value: float) -> AdaptabilityResult:
    """red / (pd + eeff); degenerate denominators are flagged, never raised.

    A positive red over a ~zero information exposure yields an infinity
    sentinel; ~zero over ~zero yields 0 with a degeneracy flag.
    """
    for name, value in (("red", red_value), ("pd", pd_value), ("eeff", eeff_value)):
        if value < 0 or not math.isfinite(value):
            raise InputError(f"{name} must be finite and non-negative, got {value}")
    denominator = pd_value + eeff_value
    if denominator < DEGENERATE_EPS:
        if red_value < DEGENERATE_EPS:
            return AdaptabilityResult(0.0, (FLAG_DEGENERATE,))
        return AdaptabilityResult(math.inf, (FLAG_INFINITE,))
    return AdaptabilityResult(red_value / denominator, ())


def aggregate(results: list[tuple[TaskSpec, list[tuple[Curriculum, float]]]]) -> float:
    """Mean over tasks of omega * sum over curricula of pb * aeff.

    Zero-value tasks contribute exactly 0 regardless of their adaptability.
    """
    if not results:
        raise InputError("aggregate needs at least one task")
    total = 0.0
    for task, curricula in results:
        if not curricula:
            raise InputError(f"task {task.id!r} has no curricula")
        pb_sum = sum(c.pb for c, _ in curricula)
        if pb_sum > 1.0 + 1e-9:
            raise InputError(
                f"task {task.id!r}: curriculum probabilities sum to {pb_sum}, exceeding 1"
            )
        if task.omega == 0:
            continue
        total += task.omega * sum(c.pb * aeff for c, aeff in curricula)
    return total / len(results)
