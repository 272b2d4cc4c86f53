"""Core domain types for mixture-of-experts recovery.

A k-expert MoE over inputs x in R^d is described by a regressor matrix
A (k x d, row i is expert i's weight vector a_i), a gating matrix
W ((k-1) x d, row i is the gating vector w_i; the k-th gating vector is
identically zero so only k-1 rows are stored), an activation g, and an
additive output noise level sigma.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

UNIT_NORM_TOL = 1e-12


class InvalidParameters(ValueError):
    """Raised when a parameter bundle violates a structural invariant."""


@dataclass(frozen=True)
class Nonlinearity:
    """Scalar activation applied inside each expert.

    ``slope`` is only meaningful for the leaky variant and must lie in
    (0, 1) there.
    """

    name: str
    slope: float = 0.0

    def __post_init__(self):
        if self.name not in ("identity", "relu", "sigmoid", "leaky_relu"):
            raise ValueError(f"unknown nonlinearity {self.name!r}")
        if self.name == "leaky_relu" and not 0.0 < self.slope < 1.0:
            raise ValueError("leaky_relu slope must lie in (0, 1)")

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.name == "identity":
            return z
        if self.name == "relu":
            return np.maximum(z, 0.0)
        if self.name == "sigmoid":
            out = np.empty_like(z)
            pos = z >= 0
            out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
            ez = np.exp(z[~pos])
            out[~pos] = ez / (1.0 + ez)
            return out
        return np.where(z >= 0, z, self.slope * z)

    def derivative(self, z):
        """Pointwise derivative; the kink of (leaky-)ReLU at 0 takes the
        right-hand value."""
        z = np.asarray(z, dtype=float)
        if self.name == "identity":
            return np.ones_like(z)
        if self.name == "relu":
            return (z >= 0).astype(float)
        if self.name == "sigmoid":
            s = self(z)
            return s * (1.0 - s)
        return np.where(z >= 0, 1.0, self.slope)


IDENTITY = Nonlinearity("identity")
RELU = Nonlinearity("relu")
SIGMOID = Nonlinearity("sigmoid")


def leaky_relu(slope: float) -> Nonlinearity:
    return Nonlinearity("leaky_relu", slope)


def nonlinearity_from_name(name: str, slope: float = 0.1) -> Nonlinearity:
    """Resolve a CLI/config name such as 'id', 'relu', 'leaky_relu'."""
    name = name.lower()
    if name in ("id", "identity", "linear"):
        return IDENTITY
    if name == "relu":
        return RELU
    if name == "sigmoid":
        return SIGMOID
    if name in ("leaky_relu", "leaky-relu", "lrelu"):
        return leaky_relu(slope)
    raise ValueError(f"unknown nonlinearity name {name!r}")


@dataclass(frozen=True)
class MoEParameters:
    """Regressors, gating vectors and noise level of a k-expert MoE.

    ``regressors`` is k x d; ``gating`` is (k-1) x d (the last gating
    vector is the implicit zero row). Instances are immutable; the arrays
    are set non-writeable on construction.
    """

    regressors: np.ndarray
    gating: np.ndarray
    noise_sigma: float

    def __post_init__(self):
        reg = np.array(self.regressors, dtype=float)
        gat = np.array(self.gating, dtype=float)
        if gat.size == 0 and reg.ndim == 2:
            gat = gat.reshape(max(reg.shape[0] - 1, 0), reg.shape[1])
        reg.flags.writeable = False
        gat.flags.writeable = False
        object.__setattr__(self, "regressors", reg)
        object.__setattr__(self, "gating", gat)

    @property
    def k(self) -> int:
        return self.regressors.shape[0]

    @property
    def d(self) -> int:
        return self.regressors.shape[1]

    def is_normalized(self, tol: float = UNIT_NORM_TOL) -> bool:
        """True when every regressor row has unit Euclidean norm."""
        norms = np.linalg.norm(self.regressors, axis=1)
        return bool(np.all(np.abs(norms - 1.0) <= tol))


def validate(params: MoEParameters, require_normalized: bool = False) -> None:
    """Check all structural invariants, raising InvalidParameters on the
    first violation.

    ``require_normalized`` additionally demands unit-norm regressor rows,
    as ground-truth instances are assumed to have.
    """
    reg, gat = params.regressors, params.gating
    if reg.ndim != 2:
        raise InvalidParameters("regressors must be a k x d matrix")
    k, d = reg.shape
    if k < 2:
        raise InvalidParameters(f"need at least 2 experts, got k={k}")
    if d < 1:
        raise InvalidParameters(f"dimension must be >= 1, got d={d}")
    if gat.ndim != 2 or gat.shape != (k - 1, d):
        raise InvalidParameters(
            f"gating must be (k-1) x d = {(k - 1, d)}, got {gat.shape}"
        )
    if not np.all(np.isfinite(reg)):
        raise InvalidParameters("non-finite entry in regressors")
    if not np.all(np.isfinite(gat)):
        raise InvalidParameters("non-finite entry in gating")
    if not math.isfinite(params.noise_sigma) or params.noise_sigma < 0:
        raise InvalidParameters(f"noise sigma must be >= 0, got {params.noise_sigma}")
    if require_normalized and not params.is_normalized():
        raise InvalidParameters("regressor rows are not unit-norm")


@dataclass(frozen=True)
class Dataset:
    """Paired inputs (n x d) and scalar outputs (n,).

    ``latents`` optionally retains the 1-based expert index that generated
    each sample; it exists for diagnostics only and must never be read by
    a learner.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    latents: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=float)
        y = np.asarray(self.outputs, dtype=float)
        if x.ndim != 2:
            raise ValueError("inputs must be an n x d matrix")
        if y.shape != (x.shape[0],):
            raise ValueError("outputs length must match inputs rows")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "outputs", y)
        if self.latents is not None:
            z = np.asarray(self.latents, dtype=int)
            if z.shape != (x.shape[0],):
                raise ValueError("latents length must match inputs rows")
            if z.size and (z.min() < 1):
                raise ValueError("latent expert indices are 1-based")
            object.__setattr__(self, "latents", z)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(
            self.inputs[idx],
            self.outputs[idx],
            None if self.latents is None else self.latents[idx],
        )


@dataclass(frozen=True)
class RegularizationConfig:
    """Constants of the quartic loss: pair-term weight mu, norm-penalty
    weight lam, Frobenius penalty delta_reg, and the gating-domain radius.

    delta_reg is the Frobenius-penalty constant; it is named apart from
    the quadratic output-transform coefficient delta_q, which is unrelated.
    """

    mu: float = 0.01
    lam: float = 50.0
    delta_reg: float = 1e-3
    radius: float = 1.0

    def __post_init__(self):
        for name in ("mu", "lam", "delta_reg", "radius"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
        if self.mu <= 0 or self.lam <= 0 or self.radius <= 0:
            raise ValueError("mu, lam and radius must be positive")
        if self.delta_reg < 0:
            raise ValueError("delta_reg must be >= 0")


def init_random(k: int, d: int, radius: float, rng: np.random.Generator,
                noise_sigma: float = 0.0) -> MoEParameters:
    """Random start point: regressor rows uniform on the unit sphere,
    gating rows uniform in the ball of radius ``radius``.

    Deterministic given the generator state, so a seeded generator yields
    reproducible initializations.
    """
    if k < 2 or d < 1:
        raise ValueError("need k >= 2 and d >= 1")
    a = rng.standard_normal((k, d))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    w = rng.standard_normal((k - 1, d))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    # radius ~ R * U^(1/d) makes the point uniform in the ball
    r = radius * rng.uniform(size=(k - 1, 1)) ** (1.0 / d)
    return MoEParameters(a, w * r, noise_sigma)


def ground_truth_paper_instance(k: int, d: int, noise_sigma: float = 0.05) -> MoEParameters:
    """Canonical orthogonal ground truth: a_i = e_i, w_i = e_{k+i}.

    Requires 2k-1 < d so that the gating vectors fit orthogonally to the
    regressor span.
    """
    if not 2 * k - 1 < d:
        raise InvalidParameters(f"need 2k-1 < d, got k={k}, d={d}")
    a = np.zeros((k, d))
    a[np.arange(k), np.arange(k)] = 1.0
    w = np.zeros((k - 1, d))
    w[np.arange(k - 1), k + np.arange(k - 1)] = 1.0
    return MoEParameters(a, w, noise_sigma)


def to_text(params: MoEParameters) -> str:
    """Serialize to the plain-text matrix format.

    Line 1: ``k d sigma``; then the k regressor rows, then the k-1 gating
    rows, whitespace-separated with 17 significant digits (lossless for
    float64).
    """
    buf = io.StringIO()
    buf.write(f"{params.k} {params.d} {params.noise_sigma:.17g}\n")
    for row in params.regressors:
        buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    for row in params.gating:
        buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    return buf.getvalue()


def from_text(text: str) -> MoEParameters:
    """Parse the format written by :func:`to_text`."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError("header must be 'k d sigma'")
    k, d, sigma = int(head[0]), int(head[1]), float(head[2])
    if len(lines) != 1 + k + (k - 1):
        raise ValueError(f"expected {k + k - 1} matrix rows, got {len(lines) - 1}")
    rows = [np.array([float(tok) for tok in ln.split()]) for ln in lines[1:]]
    if any(r.shape != (d,) for r in rows):
        raise ValueError("matrix row has wrong length")
    a = np.vstack(rows[:k])
    w = np.vstack(rows[k:]) if k > 1 else np.zeros((0, d))
    return MoEParameters(a, w, sigma)


def save_parameters(params: MoEParameters, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_text(params))


def load_parameters(path) -> MoEParameters:
    with open(path) as fh:
        return from_text(fh.read())
