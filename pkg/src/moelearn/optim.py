"""Optimization drivers: minibatch SGD for the quartic loss and
projected (optionally sample-split) gradient descent for the gating loss.

Determinism contract: a fixed (seed, config, dataset) triple reproduces
trajectories exactly; all randomness flows through a generator seeded
from the config.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .losses import (GatingContext, L4Context, _l4_value_and_gradient,
                     llog_gradient_w, llog_value)
from .model import Dataset, MoEParameters


@dataclass(frozen=True)
class TrainConfig:
    """Knobs of an optimizer run.

    ``split_T`` enables sample splitting for the gating stage: the data
    is cut into split_T equal chunks and step t consumes chunk
    t mod split_T (fresh data per step while t < split_T).
    """

    learning_rate: float
    batch_size: int = 1024
    iterations: int = 1000
    split_T: int | None = None
    record_every: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning rate must be >= 0")
        if self.batch_size < 1 or self.iterations < 1 or self.record_every < 1:
            raise ValueError("counts must be positive")
        if self.split_T is not None and self.split_T > self.iterations:
            raise ValueError("split_T must not exceed iterations")


@dataclass(frozen=True)
class TrajectoryRecord:
    iteration: int
    loss: float
    metric: float | None = None
    param_distance: float | None = None
    metric2: float | None = None


@dataclass
class Trajectory:
    """Per-iteration records of an optimizer run.

    ``metric`` holds the stage's recovery error (regressor or gating
    error); ``metric2`` is used by joint baselines that track both.
    Iterations are strictly increasing.
    """

    records: list[TrajectoryRecord] = field(default_factory=list)

    def append(self, record: TrajectoryRecord):
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("trajectory iterations must strictly increase")
        self.records.append(record)

    @property
    def final(self) -> TrajectoryRecord:
        return self.records[-1]

    def losses(self):
        return np.array([r.loss for r in self.records])

    def metrics(self):
        return np.array([np.nan if r.metric is None else r.metric
                         for r in self.records])

    def param_distances(self):
        return np.array([np.nan if r.param_distance is None else r.param_distance
                         for r in self.records])

    def to_csv(self) -> str:
        """CSV with columns iter, loss, metric, param_distance and, when
        any record carries one, metric2."""
        has_m2 = any(r.metric2 is not None for r in self.records)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["iter", "loss", "metric", "param_distance"]
        if has_m2:
            header.append("metric2")
        writer.writerow(header)
        for r in self.records:
            row = [r.iteration, repr(r.loss),
                   "" if r.metric is None else repr(r.metric),
                   "" if r.param_distance is None else repr(r.param_distance)]
            if has_m2:
                row.append("" if r.metric2 is None else repr(r.metric2))
            writer.writerow(row)
        return buf.getvalue()


def project_omega(W: np.ndarray, radius: float) -> np.ndarray:
    """Rescale every row with norm above ``radius`` back onto the ball;
    interior rows are untouched. Idempotent."""
    W = np.asarray(W, dtype=float)
    norms = np.linalg.norm(W, axis=1, keepdims=True)
    scale = np.where(norms > radius, radius / np.maximum(norms, 1e-300), 1.0)
    return W * scale


def max_row_distance(W: np.ndarray, W_ref: np.ndarray) -> float:
    """max_i ||w_i - w_i*||_2, the norm used for gating convergence."""
    return float(np.linalg.norm(np.asarray(W) - np.asarray(W_ref), axis=1).max())


def sgd_l4(A0: np.ndarray, dataset: Dataset, ctx: L4Context, cfg: TrainConfig,
           truth: MoEParameters | None = None):
    """Minibatch SGD on the quartic loss.

    Minibatches are drawn with replacement from the dataset using the
    seeded generator. The recorded loss is the minibatch loss at that
    step; the recorded metric is the regressor recovery error against
    ``truth`` when given.
    """
    from .metrics import regressor_error

    A = np.array(A0, dtype=float)
    n = dataset.n
    if n == 0:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(cfg.seed)
    c4, c2 = ctx.profile.constants.c4, ctx.profile.constants.c2
    X, q4y, q2y = dataset.inputs, ctx.q4y, ctx.q2y
    traj = Trajectory()

    def record(t, loss):
        metric = None
        if truth is not None:
            metric = regressor_error(A, truth.regressors).error
        traj.append(TrajectoryRecord(t, loss, metric))

    for t in range(1, cfg.iterations + 1):
        idx = rng.integers(0, n, size=cfg.batch_size)
        loss, grad = _l4_value_and_gradient(A, X[idx], q4y[idx], q2y[idx],
                                            ctx.regcfg, c4, c2)
        if cfg.learning_rate > 0:
            A -= cfg.learning_rate * grad
        if t % cfg.record_every == 0 or t == cfg.iterations:
            record(t, loss)
    return A, traj


def projected_gd_gating(W0: np.ndarray, ctx: GatingContext, dataset: Dataset,
                        cfg: TrainConfig, truth_gating: np.ndarray | None = None):
    """Projected gradient descent on the gating log-loss with A fixed.

    With ``split_T`` set the dataset is split into that many equal chunks
    and step t consumes chunk t mod split_T; otherwise every step sees the
    full dataset. Every iterate is projected onto the row-norm ball.
    """
    from .metrics import gating_error

    W = project_omega(np.array(W0, dtype=float), ctx.radius)
    n = dataset.n
    if cfg.split_T is not None and n < cfg.split_T:
        raise ValueError("fewer samples than sample-splitting rounds")
    chunks = None
    if cfg.split_T is not None:
        size = n // cfg.split_T
        chunks = [dataset.subset(slice(j * size, (j + 1) * size))
                  for j in range(cfg.split_T)]
    traj = Trajectory()

    def record(t, batch):
        loss = llog_value(W, ctx, batch)
        metric = dist = None
        if truth_gating is not None:
            metric = gating_error(W, truth_gating)
            dist = max_row_distance(W, truth_gating)
        traj.append(TrajectoryRecord(t, loss, metric, dist))

    record(0, chunks[0] if chunks else dataset)
    for t in range(1, cfg.iterations + 1):
        batch = chunks[(t - 1) % cfg.split_T] if chunks else dataset
        grad = llog_gradient_w(W, ctx, batch)
        W = project_omega(W - cfg.learning_rate * grad, ctx.radius)
        if t % cfg.record_every == 0 or t == cfg.iterations:
            record(t, batch)
    return W, traj


@dataclass(frozen=True)
class ContractionReport:
    """Stepwise distance ratios and their geometric mean over the first
    ten steps (or all steps when fewer)."""

    ratios: np.ndarray
    geometric_mean: float


def contraction_diagnostic(trajectory: Trajectory) -> ContractionReport:
    """Ratios dist_{t+1} / dist_t from the recorded parameter distances.

    A zero denominator yields a ratio of 0 (already converged). Requires
    the trajectory to carry parameter distances.
    """
    dists = trajectory.param_distances()
    if np.isnan(dists).any():
        raise ValueError("trajectory has no parameter-distance records")
    ratios = np.where(dists[:-1] > 0, dists[1:] / np.maximum(dists[:-1], 1e-300), 0.0)
    head = ratios[:10]
    if len(head) == 0 or np.any(head == 0.0):
        gmean = 0.0
    else:
        gmean = float(np.exp(np.mean(np.log(head))))
    return ContractionReport(ratios, gmean)
