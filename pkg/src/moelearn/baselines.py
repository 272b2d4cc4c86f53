"""Comparison methods: classical EM for the MoE and joint SGD on the
mean-squared-error loss, plus the gradient-EM gating step whose
coincidence with projected gradient descent on the log-loss is a
certified identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import (GatingContext, l2_gradients, l2_value, llog_value,
                     posterior)
from .datagen import gating_probs
from .model import IDENTITY, Dataset, MoEParameters, Nonlinearity
from .optim import (Trajectory, TrajectoryRecord, TrainConfig, project_omega)

RIDGE = 1e-8


class UnsupportedNonlinearity(ValueError):
    """The closed-form M-step only exists for the identity activation."""


@dataclass(frozen=True)
class EmConfig:
    iterations: int = 100
    gating_inner_steps: int = 5
    gating_step_size: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1 or self.gating_inner_steps < 0:
            raise ValueError("counts must be positive")


def gradient_em_step_gating(W: np.ndarray, A: np.ndarray, dataset: Dataset,
                            alpha: float, radius: float, sigma: float,
                            kind: Nonlinearity = IDENTITY) -> np.ndarray:
    """One gradient-EM update of the gating parameters.

    Ascends the EM surrogate Q(W | W_t) at W = W_t and projects onto the
    row-norm ball: W <- proj(W + alpha * mean[(posterior_i - p_i(x)) x]).
    This equals one projected-gradient-descent step on the gating
    log-loss with the same step size and batch.
    """
    W = np.asarray(W, dtype=float)
    X = dataset.inputs
    post = posterior(W, A, X, dataset.outputs, sigma, kind)
    probs = gating_probs(W, X)
    ascent = ((post - probs)[:, :-1].T @ X) / X.shape[0]
    return project_omega(W + alpha * ascent, radius)


def em_step(params: MoEParameters, dataset: Dataset, cfg: EmConfig,
            radius: float = 1.0, kind: Nonlinearity = IDENTITY) -> MoEParameters:
    """One outer EM iteration.

    E-step: posterior responsibilities under the current parameters.
    M-step: each regressor solves its responsibility-weighted least
    squares (identity activation only); the gating matrix then takes
    ``gating_inner_steps`` gradient-EM updates. The noise level is kept
    fixed (it is supplied to all methods in the experiments).
    """
    if kind.name != "identity":
        raise UnsupportedNonlinearity(
            "closed-form M-step requires the identity activation"
        )
    X, y = dataset.inputs, dataset.outputs
    n, d = X.shape
    resp = posterior(params.gating, params.regressors, X, y,
                     params.noise_sigma, kind)

    new_a = np.empty_like(params.regressors)
    for i in range(params.k):
        r = resp[:, i]
        gram = (r[:, None] * X).T @ X / n
        rhs = (r * y) @ X / n
        try:
            new_a[i] = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError:
            gram_r = gram + RIDGE * np.eye(d)
            try:
                new_a[i] = np.linalg.solve(gram_r, rhs)
            except np.linalg.LinAlgError as exc:
                raise np.linalg.LinAlgError(
                    f"weighted normal equations singular for expert {i}"
                ) from exc

    W = params.gating
    for _ in range(cfg.gating_inner_steps):
        W = gradient_em_step_gating(W, new_a, dataset, cfg.gating_step_size,
                                    radius, params.noise_sigma, kind)
    return MoEParameters(new_a, W, params.noise_sigma)


def run_em(params0: MoEParameters, dataset: Dataset, cfg: EmConfig,
           truth: MoEParameters | None = None, radius: float = 1.0,
           kind: Nonlinearity = IDENTITY):
    """Iterate :func:`em_step`, recording the joint negative
    log-likelihood and, against a supplied truth, both recovery errors."""
    from .metrics import gating_error, regressor_error

    params = params0
    traj = Trajectory()

    def record(t):
        ctx = GatingContext(params.regressors, params.noise_sigma, radius, kind)
        loss = llog_value(params.gating, ctx, dataset)
        metric = metric2 = None
        if truth is not None:
            match = regressor_error(params.regressors, truth.regressors)
            metric = match.error
            metric2 = gating_error(params.gating, truth.gating, match.permutation)
        traj.append(TrajectoryRecord(t, loss, metric, None, metric2))

    record(0)
    for t in range(1, cfg.iterations + 1):
        params = em_step(params, dataset, cfg, radius, kind)
        record(t)
    return params, traj


def l2_joint_sgd(A0: np.ndarray, W0: np.ndarray, dataset: Dataset,
                 cfg: TrainConfig, truth: MoEParameters | None = None,
                 kind: Nonlinearity = IDENTITY):
    """Simultaneous minibatch SGD on the mean-squared-error loss for both
    parameter groups; the standard approach the designed losses are
    measured against."""
    from .metrics import gating_error, regressor_error

    A = np.array(A0, dtype=float)
    W = np.array(W0, dtype=float)
    n = dataset.n
    rng = np.random.default_rng(cfg.seed)
    traj = Trajectory()

    def record(t, loss):
        metric = metric2 = None
        if truth is not None:
            match = regressor_error(A, truth.regressors)
            metric = match.error
            metric2 = gating_error(W, truth.gating, match.permutation)
        traj.append(TrajectoryRecord(t, loss, metric, None, metric2))

    for t in range(1, cfg.iterations + 1):
        idx = rng.integers(0, n, size=cfg.batch_size)
        batch = dataset.subset(idx)
        grad_a, grad_w = l2_gradients(A, W, batch, kind)
        if cfg.learning_rate > 0:
            A -= cfg.learning_rate * grad_a
            W -= cfg.learning_rate * grad_w
        if t % cfg.record_every == 0 or t == cfg.iterations:
            record(t, l2_value(A, W, batch, kind))
    return A, W, traj
