"""redkit: compression-based novelty and adaptation-difficulty metrics.

Code lengths from deterministic lossless compressors stand in for
algorithmic information content; on top of them the package computes
information distances, representation edit distances, priors, experience,
and adaptability over knowledge graphs, regression hypotheses, and
quantized neural networks.
"""

from .compressor import Backend, compress_len, concat_len
from .config import CurriculumConfig, ExperimentConfig, TaskConfig
from .errors import (
    BackendError,
    ComputationError,
    DivergenceError,
    EditApplyError,
    FitError,
    InputError,
    KgParseError,
    RedkitError,
    UndefinedDistanceError,
)
from .infodist import (
    CorpusFrequencyProvider,
    DistanceMatrix,
    aid_approx,
    cond_len,
    distance_matrix,
    ncd,
    nid_approx,
    nwd,
)
from .kg import (
    EditScript,
    KnowledgeGraph,
    NovelMarks,
    apply_script,
    canonicalize,
    edit_script,
    kg_from_text,
    script_codelength,
    strip_novel,
)
from .kg import decode as kg_decode
from .kg import encode as kg_encode
from .mdl import (
    Dataset,
    Family,
    FitReport,
    PointHypothesis,
    data_codelength,
    encode_hypothesis,
    fit_best,
    fit_family,
    hypothesis_codelength,
    predict,
)
from .metrics import (
    AgentSnapshots,
    Curriculum,
    TaskSpec,
    adaptability_aeff,
    aggregate,
    experience_eff,
    priors_pd,
    red,
    red_estimates,
)
from .net import DenseNetwork, QuantizedNetwork, dequantize, encode_net, forward, quantize, train
from .harness import (
    MismatchReport,
    detect,
    gen_kg_novelty,
    gen_net_novelty,
    gen_regression_novelty,
    net_from_json,
    run_battery,
    run_experiment,
)

__version__ = "0.1.0"
