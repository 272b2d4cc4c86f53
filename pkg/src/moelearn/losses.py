"""The three objective functions and their analytic gradients.

* ``l4_*``: quartic surrogate loss over regressors A, built from the
  transformed data moments; its population limit is a fourth-order
  polynomial in the inner products <a_m*, a_i>, which
  :func:`l4_population_oracle` evaluates directly.
* ``llog_*``: negative log-likelihood over gating parameters W with the
  regressors held fixed.
* ``l2_*``: classical mean-squared-error baseline over (A, W) jointly.

All likelihood arithmetic runs in log space with max subtraction; the
noise level is floored at SIGMA_FLOOR because the Gaussian likelihood
degenerates at sigma = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datagen import gating_probs
from .model import IDENTITY, Dataset, MoEParameters, Nonlinearity, RegularizationConfig
from .transforms import NonlinearityProfile, q2, q4

SIGMA_FLOOR = 1e-8


@dataclass(frozen=True)
class L4Context:
    """Per-dataset state for the quartic loss: the profile, regularization
    constants, and the cached transformed outputs Q4(y), Q2(y)."""

    profile: NonlinearityProfile
    regcfg: RegularizationConfig
    q4y: np.ndarray
    q2y: np.ndarray

    @classmethod
    def build(cls, dataset: Dataset, profile: NonlinearityProfile,
              regcfg: RegularizationConfig) -> "L4Context":
        return cls(profile, regcfg,
                   q4(dataset.outputs, profile.coeffs),
                   q2(dataset.outputs, profile.coeffs))


@dataclass(frozen=True)
class GatingContext:
    """Fixed quantities of the gating stage: the regressor matrix, the
    noise level (floored), the domain radius, and the activation."""

    regressors: np.ndarray
    sigma: float
    radius: float
    kind: Nonlinearity = IDENTITY

    def __post_init__(self):
        object.__setattr__(self, "regressors", np.asarray(self.regressors, dtype=float))
        object.__setattr__(self, "sigma", max(float(self.sigma), SIGMA_FLOOR))


def _l4_stats(A, X, q4y, q2y):
    """Batch moments shared by the L4 value and gradient."""
    n = X.shape[0]
    P = X @ A.T                      # n x k projections
    P2 = P * P
    G = A @ A.T                      # k x k Gram matrix
    q4c = q4y[:, None]
    S0 = q4y.mean()
    S1 = (q4c * P2).mean(axis=0)     # mean q4 P_i^2
    S2m = (P * q4c).T @ P / n        # mean q4 P_i P_j
    S22 = (P2 * q4c).T @ P2 / n      # mean q4 P_i^2 P_j^2
    R0 = q2y.mean()
    R1 = (q2y[:, None] * P2).mean(axis=0)
    return P, P2, G, S0, S1, S2m, S22, R0, R1


def _l4_value_from_stats(A, regcfg, c4, c2, G, S0, S1, S2m, S22, R0, R1):
    dG = np.diag(G)
    M1 = (S22 - np.outer(dG, S1) - np.outer(S1, dG)
          - 4.0 * G * S2m + (np.outer(dG, dG) + 2.0 * G * G) * S0) / c4
    pair_term = M1.sum() - np.trace(M1)
    single = (np.diag(S22) - 6.0 * dG * S1 + 3.0 * dG * dG * S0) / c4
    m3 = (R1 - dG * R0) / c2
    return (pair_term
            - regcfg.mu * single.sum()
            + regcfg.lam * np.sum((m3 - 1.0) ** 2)
            + 0.5 * regcfg.delta_reg * np.sum(A * A))


def l4_value(A: np.ndarray, dataset: Dataset, ctx: L4Context) -> float:
    """Empirical quartic loss over the given batch.

    The norm-penalty term squares the batch mean, not per-sample values,
    so minibatch evaluations are biased estimates of the population loss;
    the optimizer therefore computes it from the full current batch.
    """
    A = np.asarray(A, dtype=float)
    if dataset.n == 0:
        raise ValueError("empty dataset")
    if len(ctx.q4y) != dataset.n:
        raise ValueError("context cache length does not match dataset")
    c4, c2 = ctx.profile.constants.c4, ctx.profile.constants.c2
    _, _, G, S0, S1, S2m, S22, R0, R1 = _l4_stats(A, dataset.inputs, ctx.q4y, ctx.q2y)
    return float(_l4_value_from_stats(A, ctx.regcfg, c4, c2,
                                      G, S0, S1, S2m, S22, R0, R1))


def _l4_value_and_gradient(A, X, q4y, q2y, regcfg, c4, c2):
    n = X.shape[0]
    P, P2, G, S0, S1, S2m, S22, R0, R1 = _l4_stats(A, X, q4y, q2y)
    value = _l4_value_from_stats(A, regcfg, c4, c2, G, S0, S1, S2m, S22, R0, R1)

    dG = np.diag(G).copy()
    trG = dG.sum()
    q4c = q4y[:, None]
    Ct = (q4c * P).T @ X / n          # k x d, row i = mean q4 P_i x
    D3t = (q4c * P2 * P).T @ X / n    # k x d, row i = mean q4 P_i^3 x
    E1t = (q2y[:, None] * P).T @ X / n

    # pair term: rows i of 4/c4 * sum_{j != i} d/da_i of the t1 mean
    Q = P2.sum(axis=1)
    Vsum = (q4c * P * (Q[:, None] - P2)).T @ X / n
    S1sum = S1.sum()
    grad = Vsum.copy()
    grad -= (S1sum - S1)[:, None] * A
    grad -= 2.0 * (G @ Ct - dG[:, None] * Ct)
    grad -= 2.0 * (S2m @ A - np.diag(S2m)[:, None] * A)
    grad -= (trG - dG)[:, None] * Ct
    grad += S0 * (trG - dG)[:, None] * A
    grad += 2.0 * S0 * (G @ A - dG[:, None] * A)
    grad *= 4.0 / c4

    # single-direction (mu) term
    grad -= (regcfg.mu / c4) * (4.0 * D3t
                                - 12.0 * S1[:, None] * A
                                - 12.0 * dG[:, None] * Ct
                                + 12.0 * S0 * dG[:, None] * A)

    # norm-penalty term; the batch mean m3 is differentiated as a whole
    m3 = (R1 - dG * R0) / c2
    grad += (4.0 * regcfg.lam / c2) * (m3 - 1.0)[:, None] * (E1t - R0 * A)

    grad += regcfg.delta_reg * A
    return float(value), grad


def l4_gradient(A: np.ndarray, dataset: Dataset, ctx: L4Context) -> np.ndarray:
    """Analytic gradient of :func:`l4_value` with respect to A."""
    A = np.asarray(A, dtype=float)
    if dataset.n == 0:
        raise ValueError("empty dataset")
    if len(ctx.q4y) != dataset.n:
        raise ValueError("context cache length does not match dataset")
    c4, c2 = ctx.profile.constants.c4, ctx.profile.constants.c2
    _, grad = _l4_value_and_gradient(A, dataset.inputs, ctx.q4y, ctx.q2y,
                                     ctx.regcfg, c4, c2)
    return grad


def l4_per_sample_terms(A: np.ndarray, dataset: Dataset, ctx: L4Context):
    """Per-sample contributions (pair_term_n, mu_term_n, t3_terms_n
    (n x k)); their means reproduce the loss pieces. Used by the jackknife
    error estimate."""
    A = np.asarray(A, dtype=float)
    X = dataset.inputs
    P = X @ A.T
    P2 = P * P
    G = A @ A.T
    dG = np.diag(G)
    trG = dG.sum()
    c4, c2 = ctx.profile.constants.c4, ctx.profile.constants.c2
    Q = P2.sum(axis=1)
    sum_p4 = (P2 * P2).sum(axis=1)
    diag_weighted = P2 @ dG
    quad = np.einsum("ni,ij,nj->n", P, G, P)
    const_pairs = trG * trG - np.sum(dG * dG) + 2.0 * (np.sum(G * G) - np.sum(dG * dG))
    pair = (Q * Q - sum_p4
            - 2.0 * (trG * Q - diag_weighted)
            - 4.0 * (quad - diag_weighted)
            + const_pairs) / c4
    single = (P2 * P2 - 6.0 * dG[None, :] * P2 + 3.0 * (dG * dG)[None, :]).sum(axis=1) / c4
    t3_terms = (P2 - dG[None, :]) / c2
    return ctx.q4y * pair, ctx.q4y * single, ctx.q2y[:, None] * t3_terms


def l4_value_with_jackknife(A: np.ndarray, dataset: Dataset, ctx: L4Context,
                            n_blocks: int = 100):
    """(value, standard error) by delete-one-block jackknife.

    The loss is a smooth function of sample means, so the jackknife is
    applied to the whole statistic via leave-block-out means.
    """
    s_pair, s_mu, s_t3 = l4_per_sample_terms(A, dataset, ctx)
    n = dataset.n
    regcfg = ctx.regcfg
    frob = 0.5 * regcfg.delta_reg * float(np.sum(np.asarray(A) ** 2))

    def statistic(mean_pair, mean_mu, mean_t3):
        return (mean_pair - regcfg.mu * mean_mu
                + regcfg.lam * np.sum((mean_t3 - 1.0) ** 2) + frob)

    value = statistic(s_pair.mean(), s_mu.mean(), s_t3.mean(axis=0))

    blocks = np.array_split(np.arange(n), n_blocks)
    tot_pair, tot_mu, tot_t3 = s_pair.sum(), s_mu.sum(), s_t3.sum(axis=0)
    estimates = np.empty(len(blocks))
    for b, idx in enumerate(blocks):
        m = n - len(idx)
        estimates[b] = statistic((tot_pair - s_pair[idx].sum()) / m,
                                 (tot_mu - s_mu[idx].sum()) / m,
                                 (tot_t3 - s_t3[idx].sum(axis=0)) / m)
    B = len(blocks)
    se = np.sqrt((B - 1) / B * np.sum((estimates - estimates.mean()) ** 2))
    return float(value), float(se)


def l4_population_oracle(A: np.ndarray, truth: MoEParameters, n_mc: int,
                         rng: np.random.Generator,
                         regcfg: RegularizationConfig) -> float:
    """Population quartic loss evaluated through its polynomial form.

    The gating weights E[p_m*(x)] are exact (1/k) when the true gating is
    zero and Monte-Carlo estimated over ``n_mc`` standard Gaussian inputs
    otherwise. Valid for standard Gaussian inputs only.
    """
    A = np.asarray(A, dtype=float)
    k = truth.k
    if np.all(truth.gating == 0.0):
        alphas = np.full(k, 1.0 / k)
    else:
        x = rng.standard_normal((n_mc, truth.d))
        alphas = gating_probs(truth.gating, x).mean(axis=0)
    inner = truth.regressors @ A.T           # [m, i] = <a_m*, a_i>
    inner2 = inner * inner
    col = alphas @ inner2                    # sum_m alpha_m <a_m*, a_i>^2
    total = float(np.einsum("m,mi,mj->", alphas, inner2, inner2))
    diag4 = float(alphas @ (inner2 * inner2).sum(axis=1))
    pair_term = total - diag4
    return (pair_term
            - regcfg.mu * diag4
            + regcfg.lam * float(np.sum((col - 1.0) ** 2))
            + 0.5 * regcfg.delta_reg * float(np.sum(A * A)))


def _log_gating(W, X):
    logits = np.concatenate([X @ np.asarray(W, dtype=float).T,
                             np.zeros((X.shape[0], 1))], axis=1)
    m = logits.max(axis=1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _log_joint(W, A, X, y, sigma, kind):
    """log p_i(x) + log N(y | g(a_i . x), sigma^2), an n x k matrix."""
    sigma = max(sigma, SIGMA_FLOOR)
    means = kind(X @ np.asarray(A, dtype=float).T)
    loglik = (-0.5 * np.log(2.0 * np.pi * sigma * sigma)
              - (y[:, None] - means) ** 2 / (2.0 * sigma * sigma))
    return _log_gating(W, X) + loglik


def posterior(W: np.ndarray, A: np.ndarray, x: np.ndarray, y,
              sigma: float, kind: Nonlinearity = IDENTITY) -> np.ndarray:
    """Responsibilities P(z = i | x, y), computed in log space.

    Accepts a single (x, y) pair or batched (n x d, n) inputs.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    yv = np.atleast_1d(np.asarray(y, dtype=float))
    lj = _log_joint(W, A, X, yv, sigma, kind)
    lj -= lj.max(axis=1, keepdims=True)
    e = np.exp(lj)
    post = e / e.sum(axis=1, keepdims=True)
    return post[0] if single else post


def llog_value(W: np.ndarray, ctx: GatingContext, dataset: Dataset) -> float:
    """Negative mean log-likelihood of the outputs under gating W."""
    lj = _log_joint(W, ctx.regressors, dataset.inputs, dataset.outputs,
                    ctx.sigma, ctx.kind)
    m = lj.max(axis=1)
    return float(-(m + np.log(np.exp(lj - m[:, None]).sum(axis=1))).mean())


def llog_gradient_w(W: np.ndarray, ctx: GatingContext,
                    dataset: Dataset) -> np.ndarray:
    """Gradient of :func:`llog_value` in W: minus the mean of
    (posterior_i - prior_i) x over the batch, rows i = 1..k-1."""
    X = dataset.inputs
    post = posterior(W, ctx.regressors, X, dataset.outputs, ctx.sigma, ctx.kind)
    probs = gating_probs(W, X)
    resid = post - probs
    return -(resid[:, :-1].T @ X) / X.shape[0]


def moe_prediction(A, W, X, kind: Nonlinearity = IDENTITY):
    """Mean prediction sum_i p_i(x) g(a_i . x)."""
    probs = gating_probs(W, X)
    return (probs * kind(X @ np.asarray(A, dtype=float).T)).sum(axis=1)


def l2_value(A: np.ndarray, W: np.ndarray, dataset: Dataset,
             kind: Nonlinearity = IDENTITY) -> float:
    """Mean squared error of the gated mean prediction."""
    resid = moe_prediction(A, W, dataset.inputs, kind) - dataset.outputs
    return float((resid * resid).mean())


def l2_gradients(A: np.ndarray, W: np.ndarray, dataset: Dataset,
                 kind: Nonlinearity = IDENTITY):
    """Analytic gradients of :func:`l2_value` in (A, W)."""
    A = np.asarray(A, dtype=float)
    W = np.asarray(W, dtype=float)
    X, y = dataset.inputs, dataset.outputs
    n = X.shape[0]
    probs = gating_probs(W, X)
    acts = X @ A.T
    g_acts = kind(acts)
    yhat = (probs * g_acts).sum(axis=1)
    resid = yhat - y
    grad_a = (2.0 / n) * (probs * kind.derivative(acts) * resid[:, None]).T @ X
    # d yhat / d w_i = p_i (g_i - yhat) x
    gate_weight = probs[:, :-1] * (g_acts[:, :-1] - yhat[:, None])
    grad_w = (2.0 / n) * (gate_weight * resid[:, None]).T @ X
    return grad_a, grad_w
