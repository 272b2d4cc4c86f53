"""Recovery-error metrics: permutation-matched absolute cosine errors for
regressors and gating vectors, plus likelihood-based sign resolution.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import IDENTITY, Dataset, Nonlinearity

MAX_BRUTE_FORCE_K = 8


@dataclass(frozen=True)
class MatchResult:
    """Best expert matching between a learned and a true regressor set.

    ``permutation[i]`` is the true row matched to learned row i;
    ``signs[i]`` the sign making the correlation positive; ``error`` is
    1 minus the worst matched absolute correlation. Rows with zero norm
    are reported in ``zero_rows`` and score correlation 0.
    """

    permutation: tuple[int, ...]
    signs: tuple[int, ...]
    error: float
    zero_rows: tuple[int, ...] = ()


def _normalize_rows(M):
    M = np.asarray(M, dtype=float)
    norms = np.linalg.norm(M, axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    return M / safe[:, None], tuple(int(i) for i in np.nonzero(zero)[0])


def regressor_error(A: np.ndarray, A_truth: np.ndarray) -> MatchResult:
    """1 - max over permutations of the minimum |row correlation|.

    Rows are normalized internally; the metric is invariant to row scale
    and sign of either argument. Brute force over permutations, k <= 8.
    """
    An, zero_a = _normalize_rows(A)
    Bn, zero_b = _normalize_rows(A_truth)
    k = An.shape[0]
    if k != Bn.shape[0]:
        raise ValueError("row counts differ")
    if k > MAX_BRUTE_FORCE_K:
        raise ValueError(f"brute-force matching limited to k <= {MAX_BRUTE_FORCE_K}")
    corr = An @ Bn.T
    corr[list(zero_a), :] = 0.0
    corr[:, list(zero_b)] = 0.0
    abs_corr = np.abs(corr)
    best_perm = None
    best_min = -1.0
    for perm in itertools.permutations(range(k)):
        worst = min(abs_corr[i, perm[i]] for i in range(k))
        if worst > best_min:
            best_min = worst
            best_perm = perm
    signs = tuple(1 if corr[i, best_perm[i]] >= 0 else -1 for i in range(k))
    return MatchResult(best_perm, signs, float(1.0 - best_min), zero_a)


def gating_error(W: np.ndarray, W_truth: np.ndarray,
                 permutation: tuple[int, ...] | None = None) -> float:
    """1 - min_i |cos(w_i, w*_perm(i))| over the k-1 gating rows.

    The permutation comes from the regressor matching (identity when
    omitted); rows are compared after normalization, so the metric is
    invariant to positive row rescaling. A zero row on either side makes
    the error 1.
    """
    Wn, zero_w = _normalize_rows(W)
    Tn, zero_t = _normalize_rows(W_truth)
    rows = Wn.shape[0]
    if permutation is None:
        permutation = tuple(range(rows))
    worst = 1.0
    for i in range(rows):
        j = permutation[i]
        if j >= Tn.shape[0] or i in zero_w or j in zero_t:
            worst = 0.0
            break
        worst = min(worst, abs(float(Wn[i] @ Tn[j])))
    return float(1.0 - worst)


@dataclass(frozen=True)
class SignResolution:
    regressors: np.ndarray
    signs: tuple[int, ...]
    ambiguous: bool


def resolve_signs(A: np.ndarray, dataset: Dataset, sigma: float,
                  kind: Nonlinearity = IDENTITY) -> SignResolution:
    """Pick the sign pattern maximizing the data log-likelihood under
    uniform gating.

    All 2^k patterns are scored by the mean log-likelihood of a k-mixture
    with weights 1/k and components N(y | g(s_i a_i . x), sigma^2); ties
    break toward +1. The result is flagged ambiguous when the gap between
    the best and second-best pattern is under 3 standard errors of their
    per-sample difference (the case for sign-symmetric activations on
    gating-free data).
    """
    from .losses import SIGMA_FLOOR

    A = np.asarray(A, dtype=float)
    k = A.shape[0]
    if k > MAX_BRUTE_FORCE_K:
        raise ValueError(f"sign enumeration limited to k <= {MAX_BRUTE_FORCE_K}")
    sigma = max(sigma, SIGMA_FLOOR)
    X, y = dataset.inputs, dataset.outputs
    acts = X @ A.T
    n = X.shape[0]

    # per-sample log-likelihood series for every sign pattern, all-plus first
    patterns = sorted(itertools.product((1, -1), repeat=k),
                      key=lambda s: sum(v < 0 for v in s))
    series = []
    for s in patterns:
        means = kind(acts * np.array(s)[None, :])
        ll = (-0.5 * np.log(2.0 * np.pi * sigma * sigma)
              - (y[:, None] - means) ** 2 / (2.0 * sigma * sigma)) - np.log(k)
        m = ll.max(axis=1)
        series.append(m + np.log(np.exp(ll - m[:, None]).sum(axis=1)))
    scores = np.array([s.mean() for s in series])
    best = int(np.argmax(scores))
    order = np.argsort(scores)[::-1]
    runner = int(order[1]) if order[0] == best else int(order[0])
    diff = series[best] - series[runner]
    se = diff.std(ddof=1) / np.sqrt(n) if n > 1 else 0.0
    ambiguous = bool(scores[best] - scores[runner] <= 3.0 * se)
    signs = patterns[best]
    return SignResolution(A * np.array(signs)[:, None], tuple(signs), ambiguous)
