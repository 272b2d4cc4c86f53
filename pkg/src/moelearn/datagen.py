"""Sampling from ground-truth MoE models and the robustness input laws.

Sharding rule: when sampling is split across workers, worker ``i`` must
derive its generator as ``np.random.default_rng(np.random.SeedSequence((master, i)))``
so results are independent of the shard count for a fixed master seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .model import Dataset, MoEParameters


@dataclass(frozen=True)
class StandardGaussian:
    """x ~ N(0, I_d)."""


@dataclass(frozen=True)
class SymmetricGaussianMixture:
    """x ~ p N(mu, I_d) + (1-p) N(-mu, I_d)."""

    p: float
    mu: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("mixing probability must lie in [0, 1]")
        mu = np.asarray(self.mu, dtype=float)
        if not np.all(np.isfinite(mu)):
            raise ValueError("mixture mean must be finite")
        object.__setattr__(self, "mu", mu)


InputDistribution = Union[StandardGaussian, SymmetricGaussianMixture]


def gating_probs(W: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Softmax gating probabilities with the implicit zero logit appended.

    ``W`` is (k-1) x d; ``x`` is a single d-vector or an n x d batch. The
    output has k entries per input and sums to 1 to within 1e-12. A
    (0 x d) gating matrix denotes a single always-on expert.
    """
    W = np.asarray(W, dtype=float)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    logits = np.concatenate([xb @ W.T, np.zeros((xb.shape[0], 1))], axis=1)
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs[0] if single else probs


def sample_inputs(dist: InputDistribution, n: int, d: int,
                  rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. rows from the requested input distribution."""
    x = rng.standard_normal((n, d))
    if isinstance(dist, StandardGaussian):
        return x
    if dist.mu.shape != (d,):
        raise ValueError(f"mixture mean has dimension {dist.mu.shape}, expected ({d},)")
    sign = np.where(rng.uniform(size=n) < dist.p, 1.0, -1.0)
    return x + sign[:, None] * dist.mu


def random_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def sample_moe(params: MoEParameters, inputs: np.ndarray,
               rng: np.random.Generator, kind=None,
               keep_latents: bool = False) -> Dataset:
    """Draw (y, z) for each input row under the generative model.

    Per row x: the expert z is categorical with the softmax gating
    probabilities, sampled by inverse CDF with a single uniform draw, and
    y = g(a_z . x) + sigma * standard-normal noise. ``kind`` is the
    activation g (identity when omitted). Latent expert indices are
    retained (1-based) only when ``keep_latents`` is set.
    """
    from .model import IDENTITY

    g = IDENTITY if kind is None else kind
    x = np.asarray(inputs, dtype=float)
    n = x.shape[0]
    probs = gating_probs(params.gating, x)
    cdf = np.cumsum(probs, axis=1)
    u = rng.uniform(size=n)
    z = (u[:, None] > cdf).sum(axis=1)  # 0-based expert index
    activations = g(x @ params.regressors.T)
    y = activations[np.arange(n), z]
    if params.noise_sigma > 0:
        y = y + params.noise_sigma * rng.standard_normal(n)
    latents = z + 1 if keep_latents else None
    return Dataset(x, y, latents)
