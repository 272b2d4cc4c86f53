"""A binary-gated GRU step and its rewiring as a two-level
mixture-of-experts, certifying that the two compute the same function.

Both entry points share the expert- and gate-evaluation helpers and
combine them with identical arithmetic, so the equivalence check can
demand exact (bitwise) equality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import IDENTITY, Nonlinearity


@dataclass(frozen=True)
class GruParams:
    """Update/reset/candidate weights; U_* act on the input (m x d_x),
    W_* on the previous hidden state (m x m)."""

    U_z: np.ndarray
    W_z: np.ndarray
    U_r: np.ndarray
    W_r: np.ndarray
    U_h: np.ndarray
    W_h: np.ndarray
    kind: Nonlinearity = IDENTITY

    def __post_init__(self):
        m, dx = np.shape(self.U_z)
        for name in ("U_z", "U_r", "U_h"):
            if np.shape(getattr(self, name)) != (m, dx):
                raise ValueError(f"{name} must be {m} x {dx}")
        for name in ("W_z", "W_r", "W_h"):
            if np.shape(getattr(self, name)) != (m, m):
                raise ValueError(f"{name} must be {m} x {m}")

    @property
    def hidden_size(self) -> int:
        return self.U_z.shape[0]

    @property
    def input_size(self) -> int:
        return self.U_z.shape[1]


def random_gru_params(m: int, d_x: int, rng: np.random.Generator,
                      kind: Nonlinearity = IDENTITY) -> GruParams:
    def mat(rows, cols):
        return rng.standard_normal((rows, cols))

    return GruParams(mat(m, d_x), mat(m, m), mat(m, d_x), mat(m, m),
                     mat(m, d_x), mat(m, m), kind)


def _binary_gate(U, W, x, h):
    """Hard threshold 1{U x + W h >= 0}; ties at 0 open the gate."""
    return (U @ x + W @ h >= 0.0).astype(float)


def _candidate_input_only(params, x):
    return params.kind(params.U_h @ x)


def _candidate_full(params, x, h):
    return params.kind(params.U_h @ x + params.W_h @ h)


def gru_step_binary(x_t: np.ndarray, h_prev: np.ndarray,
                    params: GruParams) -> np.ndarray:
    """One GRU transition with hard update/reset gates:

    h_t = (1-z) * h_prev + z * ((1-r) * g(U_h x) + r * g(U_h x + W_h h_prev))
    """
    x = np.asarray(x_t, dtype=float)
    h = np.asarray(h_prev, dtype=float)
    z = _binary_gate(params.U_z, params.W_z, x, h)
    r = _binary_gate(params.U_r, params.W_r, x, h)
    inner = (1.0 - r) * _candidate_input_only(params, x) + r * _candidate_full(params, x, h)
    return (1.0 - z) * h + z * inner


def _moe2(gate, expert0, expert1):
    """Elementwise binary 2-expert mixture: gate off -> expert0."""
    return (1.0 - gate) * expert0 + gate * expert1


def hmoe_step(x_t: np.ndarray, h_prev: np.ndarray,
              params: GruParams) -> np.ndarray:
    """The same transition wired as a depth-2 mixture-of-experts.

    The outer mixture, gated by z on the joint state (x, h), chooses
    between the pass-through expert h_prev and an inner mixture; the
    inner mixture, gated by r, chooses between the input-only candidate
    and the full candidate.
    """
    x = np.asarray(x_t, dtype=float)
    h = np.asarray(h_prev, dtype=float)
    z = _binary_gate(params.U_z, params.W_z, x, h)
    r = _binary_gate(params.U_r, params.W_r, x, h)
    inner = _moe2(r, _candidate_input_only(params, x), _candidate_full(params, x, h))
    return _moe2(z, h, inner)


def moe2_conditional_mean(x: np.ndarray, a1: np.ndarray, a2: np.ndarray,
                          w: np.ndarray, kind: Nonlinearity = IDENTITY) -> float:
    """E[y | x] of a two-expert MoE with logistic gating:
    sig(w.x) g(a1.x) + (1 - sig(w.x)) g(a2.x)."""
    x = np.asarray(x, dtype=float)
    t = float(np.dot(w, x))
    if t >= 0:
        s = 1.0 / (1.0 + np.exp(-t))
    else:
        e = np.exp(t)
        s = e / (1.0 + e)
    return float(s * kind(np.dot(a1, x)) + (1.0 - s) * kind(np.dot(a2, x)))
