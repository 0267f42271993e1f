"""Attention/GRU encoder and dense decoder for next-snapshot prediction.

Per input snapshot, node features pass through a multi-head graph
attention layer (masked to first-order incoming neighbors) and one graph
convolutional layer per active motif transform; the outputs fuse by
element-wise addition, row-wise layer normalization and row-major
flattening. The flattened sequence runs through a GRU, then a causally
masked multi-head scaled-dot-product attention over time, and the last
position decodes through a two-layer ReLU network into an N x N score
matrix for the following snapshot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import tensor as tl
from .errors import ResourceLimitError, ShapeError
from .graphs import DirectedSnapshot, WindowSample
from .motifs import ALL_TRANSFORMS, MotifTransform, TransformedMatrix, transform
from .tensor import Tensor

# Dense decoder weights scale as h_dec * n^2; beyond this the desk-scale
# dense design stops being sensible.
MAX_NODES = 1200

LEAKY_RELU_SLOPE = 0.2
LAYER_NORM_EPS = 1e-5


@dataclass(frozen=True)
class ModelConfig:
    """All structural hyperparameters of one model instance.

    ``f_in`` of None means one-hot node-identity features (f_in == n).
    """

    n: int
    f_struct: int
    h_rnn: int
    f_attn: int
    k_node: int
    k_time: int
    h_dec: int
    window: int
    f_in: int | None = None
    transforms: tuple[MotifTransform, ...] = ALL_TRANSFORMS
    lr: float = 0.001
    l2: float = 0.0
    penalty_beta: float = 5.0

    def __post_init__(self):
        dims = {
            "n": self.n,
            "f_struct": self.f_struct,
            "h_rnn": self.h_rnn,
            "f_attn": self.f_attn,
            "k_node": self.k_node,
            "k_time": self.k_time,
            "h_dec": self.h_dec,
            "window": self.window,
        }
        for name, value in dims.items():
            if value < 1:
                raise ValueError(f"{name} must be >= 1, got {value}")
        if self.n > MAX_NODES:
            raise ResourceLimitError(
                f"n={self.n} exceeds the dense decoder budget (max {MAX_NODES} nodes); "
                "the output head alone would need h_dec * n^2 weights"
            )
        if self.f_in is not None and self.f_in < 1:
            raise ValueError(f"f_in must be >= 1, got {self.f_in}")
        if self.penalty_beta < 1:
            raise ValueError(f"penalty_beta must be >= 1, got {self.penalty_beta}")
        if self.l2 < 0:
            raise ValueError(f"l2 must be >= 0, got {self.l2}")
        object.__setattr__(self, "transforms", tuple(self.transforms))

    @property
    def feature_dim(self) -> int:
        return self.n if self.f_in is None else self.f_in

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "f_struct": self.f_struct,
            "h_rnn": self.h_rnn,
            "f_attn": self.f_attn,
            "k_node": self.k_node,
            "k_time": self.k_time,
            "h_dec": self.h_dec,
            "window": self.window,
            "f_in": self.f_in,
            "transforms": [k.value for k in self.transforms],
            "lr": self.lr,
            "l2": self.l2,
            "penalty_beta": self.penalty_beta,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ModelConfig":
        data = dict(payload)
        data["transforms"] = tuple(MotifTransform(v) for v in data.get("transforms", []))
        return cls(**data)


@dataclass
class GatParams:
    """Per head: a shared linear map (f_struct x f_in) and an attention vector (2*f_struct)."""

    weights: list[Tensor]
    attn_vectors: list[Tensor]


@dataclass
class GclParams:
    """One propagation weight (f_in x f_struct) per active motif transform."""

    weights: dict[MotifTransform, Tensor]


@dataclass
class GruParams:
    """Update/reset/candidate gates; input maps are h_rnn x (n*f_struct)."""

    w_update: Tensor
    u_update: Tensor
    b_update: Tensor
    w_reset: Tensor
    u_reset: Tensor
    b_reset: Tensor
    w_cand: Tensor
    u_cand: Tensor
    b_cand: Tensor


@dataclass
class TemporalAttnParams:
    """Per head: query/key/value maps, each h_rnn x f_attn."""

    w_query: list[Tensor]
    w_key: list[Tensor]
    w_value: list[Tensor]


@dataclass
class DecoderParams:
    """Hidden layer (k_time*f_attn -> h_dec) and output layer (h_dec -> n*n)."""

    w_hidden: Tensor
    b_hidden: Tensor
    w_out: Tensor
    b_out: Tensor


@dataclass
class ModelParams:
    """Every trainable tensor, grouped per layer."""

    gat: GatParams
    gcl: GclParams
    gru: GruParams
    attn: TemporalAttnParams
    dec: DecoderParams

    def named_tensors(self) -> list[tuple[str, Tensor]]:
        named: list[tuple[str, Tensor]] = []
        for k, (w, a) in enumerate(zip(self.gat.weights, self.gat.attn_vectors)):
            named.append((f"gat.h{k}.weight", w))
            named.append((f"gat.h{k}.attn", a))
        for kind, w in self.gcl.weights.items():
            named.append((f"gcl.{kind.value}.weight", w))
        named.extend(
            [
                ("gru.update.w", self.gru.w_update),
                ("gru.update.u", self.gru.u_update),
                ("gru.update.b", self.gru.b_update),
                ("gru.reset.w", self.gru.w_reset),
                ("gru.reset.u", self.gru.u_reset),
                ("gru.reset.b", self.gru.b_reset),
                ("gru.cand.w", self.gru.w_cand),
                ("gru.cand.u", self.gru.u_cand),
                ("gru.cand.b", self.gru.b_cand),
            ]
        )
        for l in range(len(self.attn.w_query)):
            named.append((f"attn.h{l}.query", self.attn.w_query[l]))
            named.append((f"attn.h{l}.key", self.attn.w_key[l]))
            named.append((f"attn.h{l}.value", self.attn.w_value[l]))
        named.extend(
            [
                ("dec.hidden.weight", self.dec.w_hidden),
                ("dec.hidden.bias", self.dec.b_hidden),
                ("dec.out.weight", self.dec.w_out),
                ("dec.out.bias", self.dec.b_out),
            ]
        )
        return named

    def tensors(self) -> list[Tensor]:
        return [t for _, t in self.named_tensors()]

    def zero_grad(self) -> None:
        for t in self.tensors():
            t.zero_grad()


def _glorot(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    data = rng.uniform(-limit, limit, size=shape).astype(tl.default_dtype())
    return Tensor(data, requires_grad=True)


def _zeros(shape: tuple[int, ...]) -> Tensor:
    return Tensor(np.zeros(shape, dtype=tl.default_dtype()), requires_grad=True)


def init_params(cfg: ModelConfig, seed: int | np.random.Generator = 0) -> ModelParams:
    """Fresh parameters: Glorot-uniform weights, zero biases.

    Initialization order is fixed, so a given seed always produces the
    same tensors.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    f_in, f_s = cfg.feature_dim, cfg.f_struct
    gat = GatParams(
        weights=[_glorot(rng, (f_s, f_in), f_in, f_s) for _ in range(cfg.k_node)],
        attn_vectors=[_glorot(rng, (2 * f_s,), 2 * f_s, 1) for _ in range(cfg.k_node)],
    )
    gcl = GclParams(
        weights={kind: _glorot(rng, (f_in, f_s), f_in, f_s) for kind in cfg.transforms}
    )
    flat = cfg.n * f_s
    h = cfg.h_rnn
    gru = GruParams(
        w_update=_glorot(rng, (h, flat), flat, h),
        u_update=_glorot(rng, (h, h), h, h),
        b_update=_zeros((h,)),
        w_reset=_glorot(rng, (h, flat), flat, h),
        u_reset=_glorot(rng, (h, h), h, h),
        b_reset=_zeros((h,)),
        w_cand=_glorot(rng, (h, flat), flat, h),
        u_cand=_glorot(rng, (h, h), h, h),
        b_cand=_zeros((h,)),
    )
    attn = TemporalAttnParams(
        w_query=[_glorot(rng, (h, cfg.f_attn), h, cfg.f_attn) for _ in range(cfg.k_time)],
        w_key=[_glorot(rng, (h, cfg.f_attn), h, cfg.f_attn) for _ in range(cfg.k_time)],
        w_value=[_glorot(rng, (h, cfg.f_attn), h, cfg.f_attn) for _ in range(cfg.k_time)],
    )
    concat_dim = cfg.k_time * cfg.f_attn
    out_dim = cfg.n * cfg.n
    dec = DecoderParams(
        w_hidden=_glorot(rng, (concat_dim, cfg.h_dec), concat_dim, cfg.h_dec),
        b_hidden=_zeros((cfg.h_dec,)),
        w_out=_glorot(rng, (cfg.h_dec, out_dim), cfg.h_dec, out_dim),
        b_out=_zeros((out_dim,)),
    )
    return ModelParams(gat=gat, gcl=gcl, gru=gru, attn=attn, dec=dec)


def identity_features(n: int) -> np.ndarray:
    """Default node features: one-hot identities (feature dim == n)."""
    return np.eye(n, dtype=tl.default_dtype())


# precomputed per-snapshot constants ----------------------------------------


def gat_allowed_mask(snapshot: DirectedSnapshot) -> np.ndarray:
    """Attention support per node: row i marks i's incoming neighbors.

    Nodes with no incoming neighbor fall back to attending to themselves
    alone (an attention-only self edge; the adjacency itself is untouched).
    """
    allowed = snapshot.adj.T == 1
    isolated = ~allowed.any(axis=1)
    if isolated.any():
        allowed = allowed.copy()
        idx = np.where(isolated)[0]
        allowed[idx, idx] = True
    return allowed


def gcl_propagation(transformed: TransformedMatrix) -> np.ndarray:
    """Symmetrically normalized propagation matrix with self-loops added.

    With C the motif-count matrix: C_hat = C + I, D_hat its diagonal row
    sums, result D_hat^-1/2 @ C_hat @ D_hat^-1/2. Row sums are >= 1, so
    the normalization never divides by zero.
    """
    c_hat = transformed.values.astype(tl.default_dtype()) + np.eye(
        transformed.values.shape[0], dtype=tl.default_dtype()
    )
    d_inv_sqrt = 1.0 / np.sqrt(c_hat.sum(axis=1))
    return d_inv_sqrt[:, None] * c_hat * d_inv_sqrt[None, :]


@dataclass(frozen=True)
class SnapshotEncoderInputs:
    """Constants one snapshot contributes to the encoder."""

    gat_allowed: np.ndarray
    propagation: dict[MotifTransform, np.ndarray]


def prepare_snapshot_inputs(
    snapshot: DirectedSnapshot, transforms: Sequence[MotifTransform]
) -> SnapshotEncoderInputs:
    return SnapshotEncoderInputs(
        gat_allowed=gat_allowed_mask(snapshot),
        propagation={kind: gcl_propagation(transform(snapshot, kind)) for kind in transforms},
    )


def prepare_sequence_inputs(
    snapshots: Sequence[DirectedSnapshot], transforms: Sequence[MotifTransform]
) -> dict[int, SnapshotEncoderInputs]:
    """Cache of per-snapshot constants keyed by time index (reused across epochs)."""
    return {s.time_index: prepare_snapshot_inputs(s, transforms) for s in snapshots}


# layers ---------------------------------------------------------------------


def gat_forward(
    x: Tensor,
    snapshot: DirectedSnapshot,
    params: GatParams,
    allowed: np.ndarray | None = None,
    return_attention: bool = False,
):
    """Multi-head graph attention over incoming neighbors.

    Per head: transformed features h_j = W x_j; pair logits
    LeakyReLU(a . [h_i || h_j]) masked to j in the in-neighborhood of i
    and softmax-normalized; node i aggregates sum_j alpha_ij h_j. Head
    outputs are averaged and passed through ELU, keeping width f_struct.

    With ``return_attention`` the per-head coefficient matrices are
    returned alongside the output (for inspection and tests).
    """
    if allowed is None:
        allowed = gat_allowed_mask(snapshot)
    n = snapshot.n
    heads = len(params.weights)
    total: Tensor | None = None
    attention: list[np.ndarray] = []
    for w, a in zip(params.weights, params.attn_vectors):
        h = tl.matmul(x, tl.transpose(w))  # N x f_struct
        f_s = w.shape[0]
        score_self = tl.matmul(h, a[:f_s])  # contribution of h_i
        score_peer = tl.matmul(h, a[f_s:])  # contribution of h_j
        logits = tl.leaky_relu(
            tl.reshape(score_self, (n, 1)) + tl.reshape(score_peer, (1, n)),
            alpha=LEAKY_RELU_SLOPE,
        )
        alpha = tl.softmax_masked(logits, allowed)
        if return_attention:
            attention.append(alpha.data)
        aggregated = tl.matmul(alpha, h)
        total = aggregated if total is None else total + aggregated
    out = tl.elu(total * (1.0 / heads))
    return (out, attention) if return_attention else out


def gcl_forward(
    x: Tensor,
    transformed: TransformedMatrix | None,
    weight: Tensor,
    propagation: np.ndarray | None = None,
) -> Tensor:
    """Graph convolution over one motif-count matrix: ELU(norm @ X @ W).

    Pass ``propagation`` to reuse a precomputed normalized matrix;
    otherwise it is derived from ``transformed``.
    """
    if propagation is None:
        if transformed is None:
            raise ValueError("gcl_forward needs a transformed matrix or a propagation matrix")
        propagation = gcl_propagation(transformed)
    return tl.elu(tl.matmul(tl.matmul(Tensor(propagation), x), weight))


def fuse(gat_out: Tensor, gcl_outs: Sequence[Tensor]) -> Tensor:
    """Element-wise sum, per-node-row layer normalization, row-major flatten."""
    total = gat_out
    for extra in gcl_outs:
        if extra.shape != gat_out.shape:
            raise ShapeError(
                f"fused features must share shape {gat_out.shape}, got {extra.shape}"
            )
        total = total + extra
    normed = tl.layer_norm(total, eps=LAYER_NORM_EPS)
    return tl.reshape(normed, (total.shape[0] * total.shape[1],))


def gru_step(y: Tensor, h_prev: Tensor, params: GruParams) -> Tensor:
    """Standard GRU cell over the flattened snapshot embedding."""
    update = tl.sigmoid(tl.matmul(params.w_update, y) + tl.matmul(params.u_update, h_prev) + params.b_update)
    reset = tl.sigmoid(tl.matmul(params.w_reset, y) + tl.matmul(params.u_reset, h_prev) + params.b_reset)
    candidate = tl.tanh(
        tl.matmul(params.w_cand, y) + reset * tl.matmul(params.u_cand, h_prev) + params.b_cand
    )
    return (1.0 - update) * h_prev + update * candidate


def causal_mask(length: int) -> np.ndarray:
    """Attention support over time: position i may see positions j <= i only."""
    return np.tril(np.ones((length, length), dtype=bool))


def temporal_attention(
    h_seq: Tensor, params: TemporalAttnParams, return_attention: bool = False
):
    """Causally masked multi-head scaled dot-product attention over time.

    ``h_seq`` is T x h_rnn; each head computes softmax(QK^T / sqrt(f_attn))
    restricted to non-future positions, applies it to V, and the heads'
    outputs concatenate to T x (k_time * f_attn). With
    ``return_attention`` the per-head weight matrices come back too.
    """
    length = h_seq.shape[0]
    allowed = causal_mask(length)
    outputs = []
    attention: list[np.ndarray] = []
    for w_q, w_k, w_v in zip(params.w_query, params.w_key, params.w_value):
        f_attn = w_q.shape[1]
        q = tl.matmul(h_seq, w_q)
        k = tl.matmul(h_seq, w_k)
        v = tl.matmul(h_seq, w_v)
        logits = tl.matmul(q, tl.transpose(k)) * (1.0 / np.sqrt(f_attn))
        weights = tl.softmax_masked(logits, allowed)
        if return_attention:
            attention.append(weights.data)
        outputs.append(tl.matmul(weights, v))
    out = tl.concat(outputs, axis=1)
    return (out, attention) if return_attention else out


def decode(z_last: Tensor, params: DecoderParams, n: int) -> Tensor:
    """Two ReLU layers mapping the final time embedding to N x N link scores."""
    hidden = tl.relu(tl.matmul(z_last, params.w_hidden) + params.b_hidden)
    flat = tl.relu(tl.matmul(hidden, params.w_out) + params.b_out)
    return tl.reshape(flat, (n, n))


def encode_window(
    snapshots: Sequence[DirectedSnapshot],
    params: ModelParams,
    cfg: ModelConfig,
    features: np.ndarray | None = None,
    cache: dict[int, SnapshotEncoderInputs] | None = None,
) -> Tensor:
    """Temporal embedding of every window position, shape T x (k_time * f_attn).

    Each snapshot runs through attention + per-transform convolutions +
    fusion; the fused sequence runs through the GRU (initial state zero)
    and then the causal temporal attention.
    """
    if not snapshots:
        raise ShapeError("encode_window needs at least one snapshot")
    if features is None:
        features = identity_features(cfg.n)
    features = np.asarray(features, dtype=tl.default_dtype())
    if features.shape != (cfg.n, cfg.feature_dim):
        raise ShapeError(
            f"features shape {features.shape} does not match (n, f_in)=({cfg.n}, {cfg.feature_dim})"
        )
    x = Tensor(features)

    hidden = Tensor(np.zeros(cfg.h_rnn, dtype=tl.default_dtype()))
    states = []
    for snapshot in snapshots:
        enc = cache.get(snapshot.time_index) if cache else None
        if enc is None:
            enc = prepare_snapshot_inputs(snapshot, cfg.transforms)
        gat_out = gat_forward(x, snapshot, params.gat, allowed=enc.gat_allowed)
        gcl_outs = [
            gcl_forward(x, None, params.gcl.weights[kind], propagation=enc.propagation[kind])
            for kind in cfg.transforms
        ]
        fused = fuse(gat_out, gcl_outs)
        hidden = gru_step(fused, hidden, params.gru)
        states.append(hidden)
    return temporal_attention(tl.stack(states), params.attn)


def forward(
    sample: WindowSample,
    params: ModelParams,
    cfg: ModelConfig,
    features: np.ndarray | None = None,
    cache: dict[int, SnapshotEncoderInputs] | None = None,
) -> Tensor:
    """Score matrix for the snapshot following ``sample``'s window.

    ``cache`` may hold precomputed per-snapshot constants from
    :func:`prepare_sequence_inputs`; anything missing is computed on the
    fly. Scores are nonnegative ranking scores (ReLU output), not
    probabilities.
    """
    if sample.window != cfg.window:
        raise ShapeError(
            f"sample window {sample.window} does not match configured window {cfg.window}"
        )
    z_seq = encode_window(sample.inputs, params, cfg, features=features, cache=cache)
    return decode(z_seq[sample.window - 1], params.dec, cfg.n)


def predict_scores(
    sample: WindowSample,
    params: ModelParams,
    cfg: ModelConfig,
    features: np.ndarray | None = None,
    cache: dict[int, SnapshotEncoderInputs] | None = None,
) -> np.ndarray:
    """Like :func:`forward`, returning a plain numpy score matrix."""
    return forward(sample, params, cfg, features=features, cache=cache).data


# checkpoints ----------------------------------------------------------------


def save_checkpoint(path, params: ModelParams, cfg: ModelConfig) -> None:
    """Write config plus all named parameter tensors; bit-exact round trip."""
    arrays = {f"param/{name}": t.data for name, t in params.named_tensors()}
    arrays["config_json"] = np.frombuffer(
        json.dumps(cfg.to_dict(), sort_keys=True).encode("utf-8"), dtype=np.uint8
    )
    np.savez(path, **arrays)


def load_checkpoint(path) -> tuple[ModelParams, ModelConfig]:
    with np.load(path) as archive:
        cfg = ModelConfig.from_dict(json.loads(bytes(archive["config_json"]).decode("utf-8")))
        params = init_params(cfg, seed=0)
        stored = {name: archive[f"param/{name}"] for name, _ in params.named_tensors()}
    for name, t in params.named_tensors():
        data = stored[name]
        if data.shape != t.data.shape:
            raise ShapeError(f"checkpoint tensor {name} has shape {data.shape}, expected {t.data.shape}")
        t.data = np.ascontiguousarray(data)
    return params, cfg
