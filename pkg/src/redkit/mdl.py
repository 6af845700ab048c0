"""Two-part code-length regression: fit a function family, quantize the
point hypothesis, and charge model bits plus discretized-Gaussian residual
bits so that model selection is an explicit minimization.

Model bits are a fixed layout (family tag, term count, fixed-point
coefficients and noise scale), so they grow linearly in the term count and
comparisons across families are uniform. Residual bits integrate a Gaussian
over one data-precision interval per point, computed in log space with a
per-point cap so extreme outliers keep totals finite while still screaming.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import log_ndtr

from .bitio import BitReader, BitWriter
from .errors import FitError, InputError

GRID = 2.0**-10           # quantization step for coefficients and sigma
COEF_MAG_BITS = 25        # 15 integer + 10 fraction bits
COEF_BITS = 1 + COEF_MAG_BITS
MAX_QUANTIZED = (2**COEF_MAG_BITS - 1) * GRID
DEFAULT_EPSILON = 2.0**-8
POINT_CAP_BITS = 1024.0
_LN2 = math.log(2.0)


class Family(str, Enum):
    POLYNOMIAL = "polynomial"
    FOURIER = "fourier"


_FAMILY_TAGS = {Family.POLYNOMIAL: 0, Family.FOURIER: 1}
_TAG_FAMILIES = {v: k for k, v in _FAMILY_TAGS.items()}


def quantize_value(value: float) -> float:
    """Snaps to the coefficient grid, clamping to the fixed-point range."""
    if not math.isfinite(value):
        raise InputError(f"cannot quantize non-finite value {value!r}")
    snapped = round(value / GRID) * GRID
    snapped = max(-MAX_QUANTIZED, min(MAX_QUANTIZED, snapped))
    return snapped + 0.0  # normalize -0.0


@dataclass(frozen=True)
class Dataset:
    """Observed (x, y) points with the data precision used for residual bits."""

    points: tuple[tuple[float, float], ...]
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        object.__setattr__(self, "points", tuple((float(x), float(y)) for x, y in self.points))
        if not self.epsilon > 0:
            raise InputError("epsilon must be positive")
        for x, y in self.points:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InputError(f"non-finite data point ({x}, {y})")

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.points:
            return np.empty(0), np.empty(0)
        arr = np.asarray(self.points, dtype=float)
        return arr[:, 0], arr[:, 1]


@dataclass(frozen=True)
class PointHypothesis:
    """A fitted, quantized model instance: family, coefficients, noise scale."""

    family: Family
    coefficients: tuple[float, ...]
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        object.__setattr__(self, "sigma", float(self.sigma))
        k = len(self.coefficients)
        if not 1 <= k <= 255:
            raise InputError(f"term count must be in 1..255, got {k}")
        for c in self.coefficients:
            if abs(c - quantize_value(c)) > 1e-12:
                raise InputError(f"coefficient {c!r} is off the quantization grid")
        if self.sigma < GRID or abs(self.sigma - quantize_value(self.sigma)) > 1e-12:
            raise InputError(f"sigma {self.sigma!r} must be on the grid and >= {GRID}")

    @property
    def term_count(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True)
class FitReport:
    hypothesis: PointHypothesis
    l_hypothesis: float
    l_data: float
    total: float
    per_term_totals: tuple[float, ...]

    def to_record(self) -> dict:
        h = self.hypothesis
        return {
            "family": h.family.value,
            "k": h.term_count,
            "coefficients": list(h.coefficients),
            "sigma": h.sigma,
            "L_H": self.l_hypothesis,
            "L_D": self.l_data,
            "total": self.total,
            "per_k_totals": list(self.per_term_totals),
        }


def basis_matrix(family: Family, k: int, xs: np.ndarray) -> np.ndarray:
    """Design matrix: 1, x, x^2, ... or 1, sin x, cos x, sin 2x, ..."""
    xs = np.asarray(xs, dtype=float)
    cols = [np.ones_like(xs)]
    if Family(family) is Family.POLYNOMIAL:
        for j in range(1, k):
            cols.append(xs**j)
    else:
        j = 1
        while len(cols) < k:
            cols.append(np.sin(j * xs))
            if len(cols) < k:
                cols.append(np.cos(j * xs))
            j += 1
    return np.column_stack(cols[:k])


def predict_many(h: PointHypothesis, xs: np.ndarray) -> np.ndarray:
    return basis_matrix(h.family, h.term_count, xs) @ np.asarray(h.coefficients)


def predict(h: PointHypothesis, x: float) -> float:
    """Basis expansion at x dotted with the dequantized coefficients."""
    return float(predict_many(h, np.asarray([float(x)]))[0])


def hypothesis_codelength(h: PointHypothesis) -> float:
    """8 family bits + 8 term-count bits + 26 bits per coefficient + 26 for sigma."""
    return float(8 + 8 + COEF_BITS * h.term_count + COEF_BITS)


def data_codelength(h: PointHypothesis, dataset: Dataset) -> float:
    """Residual bits: per point, the negative log2 probability mass of a
    Gaussian(0, sigma) over the epsilon-wide interval around the residual,
    capped at POINT_CAP_BITS."""
    xs, ys = dataset.arrays()
    if xs.size == 0:
        return 0.0
    r = np.abs(ys - predict_many(h, xs))
    half = dataset.epsilon / 2.0
    a = (r - half) / h.sigma
    b = (r + half) / h.sigma
    # mass = Phi(b) - Phi(a) = Phi(-a) - Phi(-b), evaluated in log space so
    # far-tail residuals do not underflow before the cap applies
    log_hi = log_ndtr(-a)
    log_lo = log_ndtr(-b)
    with np.errstate(divide="ignore", invalid="ignore"):
        diff = np.minimum(log_lo - log_hi, 0.0)
        log_mass = log_hi + np.log1p(-np.exp(diff))
    bits = np.where(np.isfinite(log_mass), -log_mass / _LN2, POINT_CAP_BITS)
    return float(np.sum(np.minimum(bits, POINT_CAP_BITS)))


def fit_point_hypothesis(dataset: Dataset, family: Family, k: int) -> PointHypothesis:
    """Least-squares fit of one term count, quantized onto the grid; sigma is
    the quantized RMS residual of the quantized fit, floored at the grid step."""
    xs, ys = dataset.arrays()
    if xs.size < k:
        raise FitError(f"term count {k} needs at least {k} points, have {xs.size}")
    if np.unique(xs).size < k:
        raise FitError(
            f"degenerate design matrix for term count {k}: "
            f"only {np.unique(xs).size} distinct x values"
        )
    matrix = basis_matrix(family, k, xs)
    coefs, *_ = np.linalg.lstsq(matrix, ys, rcond=None)
    quantized = tuple(quantize_value(float(c)) for c in coefs)
    residuals = ys - matrix @ np.asarray(quantized)
    rms = float(np.sqrt(np.mean(residuals**2)))
    sigma = max(GRID, quantize_value(rms))
    return PointHypothesis(Family(family), quantized, sigma)


def fit_family(dataset: Dataset, family: Family, max_terms: int) -> FitReport:
    """Fits every term count 1..max_terms and returns the total-bit minimizer,
    ties broken toward fewer terms."""
    family = Family(family)
    if max_terms < 1:
        raise InputError("max_terms must be at least 1")
    if len(dataset.points) < max_terms + 1:
        raise InputError(
            f"need at least {max_terms + 1} points for max_terms={max_terms}, "
            f"have {len(dataset.points)}"
        )
    totals = []
    best = None
    for k in range(1, max_terms + 1):
        h = fit_point_hypothesis(dataset, family, k)
        l_h = hypothesis_codelength(h)
        l_d = data_codelength(h, dataset)
        total = l_h + l_d
        totals.append(total)
        if best is None or total < best[0]:
            best = (total, h, l_h, l_d)
    total, h, l_h, l_d = best
    return FitReport(h, l_h, l_d, total, tuple(totals))


def fit_best(dataset: Dataset, max_terms: int) -> FitReport:
    """Minimum-total fit across both families; polynomial wins exact ties."""
    poly = fit_family(dataset, Family.POLYNOMIAL, max_terms)
    fourier = fit_family(dataset, Family.FOURIER, max_terms)
    return poly if poly.total <= fourier.total else fourier


# ---------------------------------------------------------------------------
# Hypothesis byte encoding


def _write_quantized(writer: BitWriter, value: float) -> None:
    magnitude = int(round(abs(value) / GRID))
    if magnitude >= 1 << COEF_MAG_BITS:
        raise InputError(f"value {value!r} exceeds the fixed-point range")
    sign = 1 if (value < 0 and magnitude) else 0
    writer.write(sign, 1)
    writer.write(magnitude, COEF_MAG_BITS)


def _read_quantized(reader: BitReader) -> float:
    sign = reader.read(1)
    magnitude = reader.read(COEF_MAG_BITS)
    value = magnitude * GRID
    return -value if sign else value


def encode_hypothesis(h: PointHypothesis) -> bytes:
    """Exact bit layout of hypothesis_codelength, zero-padded to bytes.

    Distinct hypotheses yield distinct bytes (sign of a zero magnitude is
    normalized to 0).
    """
    writer = BitWriter()
    writer.write(_FAMILY_TAGS[h.family], 8)
    writer.write(h.term_count, 8)
    for c in h.coefficients:
        _write_quantized(writer, c)
    _write_quantized(writer, h.sigma)
    writer.pad_to_byte()
    return writer.getvalue()


def decode_hypothesis(data: bytes) -> PointHypothesis:
    """Internal roundtrip check for the hypothesis encoding."""
    reader = BitReader(data)
    try:
        tag = reader.read(8)
        if tag not in _TAG_FAMILIES:
            raise InputError(f"unknown family tag {tag}")
        k = reader.read(8)
        coefficients = tuple(_read_quantized(reader) for _ in range(k))
        sigma = _read_quantized(reader)
    except ValueError as exc:
        raise InputError(f"truncated hypothesis encoding: {exc}") from None
    return PointHypothesis(_TAG_FAMILIES[tag], coefficients, sigma)


def hypothesis_from_record(record: dict) -> PointHypothesis:
    """Rebuilds a hypothesis from a fit-report record (family, coefficients, sigma)."""
    try:
        return PointHypothesis(
            Family(record["family"]),
            tuple(record["coefficients"]),
            float(record["sigma"]),
        )
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed hypothesis record: {exc}") from None
