"""Penalized-Frobenius loss, Adam optimizer, and the per-timestep protocol.

The loss is || (S - A) . B ||_F^2 + (lambda / 2) * ||theta||_2^2 where B
up-weights entries that hold an observed link by a factor beta >= 1, so
missing a real link costs beta^2 times more than hallucinating one by the
same margin. Training follows the sliding-window protocol: a fresh model
per anchor t, fitted on every window whose target is at or before t.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import tensor as tl
from .errors import DivergenceError, ProtocolError
from .graphs import DirectedSnapshot, SnapshotSequence, WindowSample, make_windows
from .model import (
    ModelConfig,
    ModelParams,
    SnapshotEncoderInputs,
    forward,
    init_params,
    prepare_sequence_inputs,
)
from .tensor import Tensor


@dataclass(frozen=True)
class LossConfig:
    """Penalty factor for observed links and L2 regularization weight."""

    penalty_beta: float = 5.0
    l2_lambda: float = 0.0

    def __post_init__(self):
        if self.penalty_beta < 1:
            raise ValueError(f"penalty_beta must be >= 1, got {self.penalty_beta}")
        if self.l2_lambda < 0:
            raise ValueError(f"l2_lambda must be >= 0, got {self.l2_lambda}")

    @classmethod
    def from_model(cls, cfg: ModelConfig) -> "LossConfig":
        return cls(penalty_beta=cfg.penalty_beta, l2_lambda=cfg.l2)


def penalty_matrix(target: DirectedSnapshot, beta: float) -> np.ndarray:
    """Entry-wise loss weights: beta where the target has a link, 1 elsewhere."""
    if beta < 1:
        raise ValueError(f"beta must be >= 1, got {beta}")
    weights = np.ones((target.n, target.n), dtype=tl.default_dtype())
    weights[target.adj == 1] = beta
    return weights


def loss(
    scores: Tensor,
    target: DirectedSnapshot,
    cfg: LossConfig,
    params: ModelParams | Sequence[Tensor] | None = None,
) -> Tensor:
    """Penalized squared Frobenius distance plus L2 on all trainables."""
    if scores.shape != (target.n, target.n):
        raise tl.ShapeError(
            f"scores shape {scores.shape} does not match target shape {(target.n, target.n)}"
        )
    weighted = (scores - Tensor(target.adj)) * Tensor(penalty_matrix(target, cfg.penalty_beta))
    total = tl.tensor_sum(weighted * weighted)
    if cfg.l2_lambda > 0 and params is not None:
        tensors = params.tensors() if isinstance(params, ModelParams) else list(params)
        reg = None
        for t in tensors:
            sq = tl.tensor_sum(t * t)
            reg = sq if reg is None else reg + sq
        if reg is not None:
            total = total + reg * (cfg.l2_lambda / 2.0)
    return total


class Adam:
    """Adam over a fixed parameter list (decay 0.9/0.999, eps 1e-8).

    ``step`` consumes the gradients accumulated on each parameter and
    rebinds its data in place; with lr=0 it is the identity.
    """

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        self.t += 1
        correction1 = 1.0 - self.beta1**self.t
        correction2 = 1.0 - self.beta2**self.t
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            if not np.isfinite(g).all():
                raise DivergenceError("non-finite gradient encountered")
            self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * g
            self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self._m[i] / correction1
            v_hat = self._v[i] / correction2
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train_step(
    sample: WindowSample,
    params: ModelParams,
    optimizer: Adam,
    cfg: ModelConfig,
    loss_cfg: LossConfig,
    features: np.ndarray | None = None,
    cache: dict[int, SnapshotEncoderInputs] | None = None,
) -> float:
    """One forward/backward/Adam update on a single window; returns the loss."""
    optimizer.zero_grad()
    scores = forward(sample, params, cfg, features=features, cache=cache)
    objective = loss(scores, sample.target, loss_cfg, params)
    value = objective.item()
    if not np.isfinite(value):
        raise DivergenceError(f"loss diverged to {value}")
    objective.backward()
    optimizer.step()
    return value


@dataclass(frozen=True)
class EarlyStop:
    """Stop when the epoch loss has not improved by min_delta for patience epochs."""

    patience: int = 20
    min_delta: float = 1e-5


@dataclass(frozen=True)
class TrainRun:
    """Budget and seeding for one fit; lr of None defers to the model config."""

    epochs: int = 200
    seed: int = 0
    lr: float | None = None
    early_stop: EarlyStop | None = EarlyStop()


@dataclass
class FitResult:
    params: ModelParams
    history: list[float]

    @property
    def epochs_run(self) -> int:
        return len(self.history)


def fit_timestep(
    seq: SnapshotSequence,
    t: int,
    cfg: ModelConfig,
    run: TrainRun,
    features: np.ndarray | None = None,
) -> FitResult:
    """Train a fresh model on every window with target index <= t.

    The per-epoch sample order is shuffled with the run seed; history is
    the mean loss per epoch. Evaluation at t + 1 is the caller's job.
    """
    if t < cfg.window:
        raise ProtocolError(f"anchor t={t} needs at least window={cfg.window} history snapshots")
    if t + 1 >= len(seq):
        raise ProtocolError(f"anchor t={t} leaves no snapshot t+1 to predict (length {len(seq)})")

    samples = [s for s in make_windows(seq, cfg.window) if s.target.time_index <= t]
    if not samples:
        raise ProtocolError(f"no training windows end at or before t={t}")

    rng = np.random.default_rng(run.seed)
    params = init_params(cfg, seed=rng)
    optimizer = Adam(params.tensors(), lr=run.lr if run.lr is not None else cfg.lr)
    loss_cfg = LossConfig.from_model(cfg)
    cache = prepare_sequence_inputs([s for w in samples for s in w.inputs], cfg.transforms)

    history: list[float] = []
    best = np.inf
    stale = 0
    for epoch in range(run.epochs):
        order = rng.permutation(len(samples))
        epoch_losses = []
        for idx in order:
            try:
                epoch_losses.append(
                    train_step(
                        samples[idx], params, optimizer, cfg, loss_cfg,
                        features=features, cache=cache,
                    )
                )
            except DivergenceError as err:
                err.epoch = epoch
                raise
        history.append(float(np.mean(epoch_losses)))
        if run.early_stop is not None:
            if history[-1] < best - run.early_stop.min_delta:
                best = history[-1]
                stale = 0
            else:
                stale += 1
                if stale >= run.early_stop.patience:
                    break
    return FitResult(params=params, history=history)
