"""Temporal link prediction for directed networks.

Snapshot ingestion, motif-count features, an attention/GRU encoder with a
dense decoder, penalized-Frobenius training, and rank-based evaluation
(AUC / PRAUC / GMAUC), all on a small numpy autodiff substrate.
"""

from .errors import (
    DegenerateInputError,
    DivergenceError,
    EmptySupportError,
    MetricUndefinedError,
    NonFiniteError,
    ParseError,
    ProtocolError,
    ResourceLimitError,
    ShapeError,
    SliceError,
    TempolinkError,
)
from .evaluation import (
    CandidateSplit,
    EvalReport,
    auc,
    evaluate_prediction,
    gmauc,
    prauc,
    split_candidates,
)
from .graphs import (
    DirectedSnapshot,
    NetworkStats,
    SnapshotSequence,
    WindowSample,
    build_adjacency,
    make_windows,
    network_stats,
)
from .ingest import (
    ParsedEdges,
    SliceConfig,
    SliceResult,
    TemporalEdge,
    parse_edge_list,
    read_edge_file,
    slice_snapshots,
)
from .model import (
    ModelConfig,
    ModelParams,
    decode,
    encode_window,
    forward,
    fuse,
    gat_forward,
    gcl_forward,
    gru_step,
    identity_features,
    init_params,
    load_checkpoint,
    predict_scores,
    prepare_sequence_inputs,
    save_checkpoint,
    temporal_attention,
)
from .motifs import (
    ALL_TRANSFORMS,
    MotifTransform,
    TransformedMatrix,
    motif_count_oracle,
    parse_transforms,
    transform,
)
from .tensor import (
    Tensor,
    layer_norm,
    set_debug_checks,
    set_default_precision,
    softmax_masked,
)
from .training import (
    Adam,
    EarlyStop,
    FitResult,
    LossConfig,
    TrainRun,
    fit_timestep,
    loss,
    penalty_matrix,
    train_step,
)

__version__ = "0.1.0"
