"""Output and input transforms that expose the rank-one tensor structure
of an MoE.

Two polynomial output transforms are used: a quartic one
``Q4(y) = y^4 + alpha*y^3 + beta*y^2 + gamma*y`` and a quadratic one
``Q2(y) = y^2 + delta_q*y``. Their coefficients are chosen per activation
g and noise level sigma so that the conditional expectations
``S4(z) = E[Q4(Y)|Z=z]`` and ``S2(z) = E[Q2(Y)|Z=z]`` (Z standard normal,
Y = g(Z) + sigma*noise) are orthogonal to the Hermite polynomials of
degree 1..3 (resp. degree 1). Under those conditions

    E[Q4(y) * H4(x)] = c4 * sum_i E[p_i(x)] a_i^(x4)
    E[Q2(y) * H2(x)] = c2 * sum_i E[p_i(x)] a_i^(x2)

where H4, H2 are the multivariate Hermite (score) tensors of the standard
Gaussian input and c4, c2 are the degree-4 / degree-2 Hermite inner
products of S4 / S2. The input transforms t1, t2, t3 are the projections
of those score tensors along one or two direction vectors, so the losses
built from them never need the dense tensors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Nonlinearity

SOLVER_TOL = 1e-10
CONDITION_GUARD = 1e12
CONSTANT_FLOOR = 1e-8
QUADRATURE_NODES = 64

MAX_P = 4
MAX_Q = 8

MAX_DENSE_DIM = 8


class InvalidNonlinearity(ValueError):
    """The activation admits no valid transform coefficients at this sigma."""


def _double_factorial(m: int) -> int:
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def _gauss_hermite_rule(nodes: int):
    # physicists' rule; rescale so E[f(Z)] = sum w_i f(z_i), Z ~ N(0,1)
    x, w = np.polynomial.hermite.hermgauss(nodes)
    return x * np.sqrt(2.0), w / np.sqrt(np.pi)


def gaussian_activation_moment(kind: Nonlinearity, p: int, q: int,
                               nodes: int = QUADRATURE_NODES) -> float:
    """E[g(Z)^p Z^q] for standard normal Z.

    Closed forms for the identity, ReLU and leaky-ReLU activations (the
    kink at 0 defeats polynomial quadrature, so the piecewise reduction to
    absolute moments is used instead); Gauss-Hermite quadrature (``nodes``
    points, absolute accuracy well under 1e-10 for the smooth sigmoid)
    otherwise. p = 0 always reduces to the plain Gaussian moment E[Z^q].
    """
    if not (0 <= p <= MAX_P and 0 <= q <= MAX_Q):
        raise ValueError(f"unsupported moment order (p={p}, q={q})")
    m = p + q
    if p == 0 or kind.name == "identity":
        order = q if p == 0 else m
        return 0.0 if order % 2 else float(_double_factorial(order - 1))
    if kind.name in ("relu", "leaky_relu"):
        # g(Z)^p Z^q = Z^(p+q) (1{Z>0} + slope^p 1{Z<0})
        absmom = _double_factorial(m - 1) * (np.sqrt(2.0 / np.pi) if m % 2 else 1.0)
        slope = kind.slope if kind.name == "leaky_relu" else 0.0
        return 0.5 * absmom * (1.0 + (-1.0) ** m * slope ** p)
    z, w = _gauss_hermite_rule(nodes)
    return float(np.sum(w * kind(z) ** p * z ** q))


@dataclass(frozen=True)
class OutputCoefficients:
    """Solved coefficients of the quartic and quadratic output transforms."""

    alpha: float
    beta: float
    gamma: float
    delta_q: float


@dataclass(frozen=True)
class TensorConstants:
    """The nonzero Hermite inner products c4 = <S4, He4>, c2 = <S2, He2>."""

    c4: float
    c2: float


@dataclass(frozen=True)
class NonlinearityProfile:
    """Activation bundled with its transform coefficients and constants."""

    kind: Nonlinearity
    sigma: float
    coeffs: OutputCoefficients
    constants: TensorConstants


# Hermite polynomials as coefficient rows over powers of Z: He_r(Z) = sum_j C[r][j] Z^j
_HERMITE_ROWS = {
    1: ((1, 1.0),),
    2: ((2, 1.0), (0, -1.0)),
    3: ((3, 1.0), (1, -3.0)),
    4: ((4, 1.0), (2, -6.0), (0, 3.0)),
}


def _moment_vs_hermite(kind: Nonlinearity, p: int, degree: int, nodes: int) -> float:
    """E[g(Z)^p He_degree(Z)]."""
    return sum(c * gaussian_activation_moment(kind, p, q, nodes)
               for q, c in _HERMITE_ROWS[degree])


def _s4_hermite_inner(kind, sigma, alpha, beta, gamma, degree, nodes):
    """E[S4(Z) He_degree(Z)] with S4(Z) = E[(g(Z)+sigma*xi)^4 + alpha*(...)^3 + ...].

    Conditional moments of Y = g(Z) + sigma*xi:
      E[Y^4|Z] = g^4 + 6 g^2 s^2 + 3 s^4,  E[Y^3|Z] = g^3 + 3 g s^2,
      E[Y^2|Z] = g^2 + s^2,                E[Y|Z]   = g.
    Constant-in-Z pieces integrate against He_r via E[He_r(Z)] handled by
    the p = 0 moments, so nothing is dropped.
    """
    s2 = sigma * sigma

    def e(p, deg):
        return _moment_vs_hermite(kind, p, deg, nodes)

    base = e(4, degree) + 6.0 * s2 * e(2, degree) + 3.0 * s2 * s2 * e(0, degree)
    return (base
            + alpha * (e(3, degree) + 3.0 * s2 * e(1, degree))
            + beta * (e(2, degree) + s2 * e(0, degree))
            + gamma * e(1, degree))


def _s2_hermite_inner(kind, sigma, delta_q, degree, nodes):
    """E[S2(Z) He_degree(Z)] with S2(Z) = g^2 + delta_q*g + sigma^2."""
    s2 = sigma * sigma

    def e(p, deg):
        return _moment_vs_hermite(kind, p, deg, nodes)

    return e(2, degree) + s2 * e(0, degree) + delta_q * e(1, degree)


def solve_output_coefficients(kind: Nonlinearity, sigma: float,
                              nodes: int = QUADRATURE_NODES) -> OutputCoefficients:
    """Solve the 3x3 linear system that zeroes the degree-1..3 Hermite
    components of S4, and the scalar equation that zeroes the degree-1
    component of S2.

    Raises InvalidNonlinearity when the system is numerically singular
    (condition number above 1e12), i.e. the activation admits no valid
    transform at this sigma.
    """
    s2 = sigma * sigma

    def e(p, deg):
        return _moment_vs_hermite(kind, p, deg, nodes)

    mat = np.empty((3, 3))
    rhs = np.empty(3)
    for r, degree in enumerate((1, 2, 3)):
        mat[r, 0] = e(3, degree) + 3.0 * s2 * e(1, degree)
        mat[r, 1] = e(2, degree) + s2 * e(0, degree)
        mat[r, 2] = e(1, degree)
        rhs[r] = -(e(4, degree) + 6.0 * s2 * e(2, degree) + 3.0 * s2 * s2 * e(0, degree))
    if np.linalg.cond(mat) > CONDITION_GUARD:
        raise InvalidNonlinearity(
            f"quartic-transform system is singular for {kind.name} at sigma={sigma}"
        )
    alpha, beta, gamma = np.linalg.solve(mat, rhs)

    m11 = e(1, 1)
    if abs(m11) < 1.0 / CONDITION_GUARD:
        raise InvalidNonlinearity(
            f"quadratic-transform equation is singular for {kind.name}"
        )
    delta_q = -e(2, 1) / m11

    coeffs = OutputCoefficients(float(alpha), float(beta), float(gamma), float(delta_q))
    residuals = [abs(_s4_hermite_inner(kind, sigma, alpha, beta, gamma, deg, nodes))
                 for deg in (1, 2, 3)]
    residuals.append(abs(_s2_hermite_inner(kind, sigma, delta_q, 1, nodes)))
    if max(residuals) > SOLVER_TOL:
        raise InvalidNonlinearity(
            f"solved coefficients leave residual {max(residuals):.3e} > {SOLVER_TOL}"
        )
    return coeffs


@dataclass(frozen=True)
class ValidityReport:
    """Measured orthogonality residuals and tensor constants of a profile."""

    cond1_residuals: tuple[float, float, float]
    cond2_residual: float
    c4: float
    c2: float

    @property
    def valid(self) -> bool:
        return (max(abs(r) for r in self.cond1_residuals) <= SOLVER_TOL
                and abs(self.cond2_residual) <= SOLVER_TOL
                and abs(self.c4) >= CONSTANT_FLOOR
                and abs(self.c2) >= CONSTANT_FLOOR)


def check_validity(profile: NonlinearityProfile,
                   nodes: int = QUADRATURE_NODES) -> ValidityReport:
    """Report the three degree-1..3 inner products of S4, the degree-1
    inner product of S2, and the constants c4, c2."""
    c = profile.coeffs
    res1 = tuple(
        float(_s4_hermite_inner(profile.kind, profile.sigma,
                                c.alpha, c.beta, c.gamma, deg, nodes))
        for deg in (1, 2, 3)
    )
    res2 = float(_s2_hermite_inner(profile.kind, profile.sigma, c.delta_q, 1, nodes))
    c4 = float(_s4_hermite_inner(profile.kind, profile.sigma,
                                 c.alpha, c.beta, c.gamma, 4, nodes))
    c2 = float(_s2_hermite_inner(profile.kind, profile.sigma, c.delta_q, 2, nodes))
    return ValidityReport(res1, res2, c4, c2)


def compute_tensor_constants(kind: Nonlinearity, sigma: float,
                             coeffs: OutputCoefficients,
                             nodes: int = QUADRATURE_NODES) -> TensorConstants:
    """The degree-4 / degree-2 Hermite inner products of S4 / S2.

    Requires the coefficients to satisfy the orthogonality conditions;
    raises InvalidNonlinearity otherwise or when a constant vanishes.
    """
    residuals = [abs(_s4_hermite_inner(kind, sigma, coeffs.alpha, coeffs.beta,
                                       coeffs.gamma, deg, nodes))
                 for deg in (1, 2, 3)]
    residuals.append(abs(_s2_hermite_inner(kind, sigma, coeffs.delta_q, 1, nodes)))
    if max(residuals) > SOLVER_TOL:
        raise InvalidNonlinearity(
            f"coefficients violate the orthogonality conditions "
            f"(residual {max(residuals):.3e})"
        )
    c4 = float(_s4_hermite_inner(kind, sigma, coeffs.alpha, coeffs.beta,
                                 coeffs.gamma, 4, nodes))
    c2 = float(_s2_hermite_inner(kind, sigma, coeffs.delta_q, 2, nodes))
    if abs(c4) < CONSTANT_FLOOR or abs(c2) < CONSTANT_FLOOR:
        raise InvalidNonlinearity(
            f"tensor constant vanishes (c4={c4:.3e}, c2={c2:.3e})"
        )
    return TensorConstants(c4, c2)


def make_profile(kind: Nonlinearity, sigma: float,
                 nodes: int = QUADRATURE_NODES) -> NonlinearityProfile:
    """Solve coefficients and constants for an activation at a noise level."""
    coeffs = solve_output_coefficients(kind, sigma, nodes)
    constants = compute_tensor_constants(kind, sigma, coeffs, nodes)
    return NonlinearityProfile(kind, sigma, coeffs, constants)


def q4(y, coeffs: OutputCoefficients):
    """Quartic output transform y^4 + alpha y^3 + beta y^2 + gamma y."""
    y = np.asarray(y, dtype=float)
    return ((y + coeffs.alpha) * y * y + coeffs.beta * y + coeffs.gamma) * y


def q2(y, coeffs: OutputCoefficients):
    """Quadratic output transform y^2 + delta_q y."""
    y = np.asarray(y, dtype=float)
    return (y + coeffs.delta_q) * y


def t3(u, x, c2: float):
    """Degree-2 score projection ((u.x)^2 - |u|^2) / c2.

    ``x`` may be a single vector or an n x d batch; the return matches.
    """
    u = np.asarray(u, dtype=float)
    px = np.asarray(x, dtype=float) @ u
    return (px * px - u @ u) / c2


def t2(u, x, c4: float):
    """Degree-4 score projection along a single direction u."""
    u = np.asarray(u, dtype=float)
    px = np.asarray(x, dtype=float) @ u
    uu = u @ u
    px2 = px * px
    return (px2 * px2 - 6.0 * uu * px2 + 3.0 * uu * uu) / c4


def t1(u, v, x, c4: float):
    """Degree-4 score projection along two directions u, v (symmetric)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    pu = x @ u
    pv = x @ v
    uu = u @ u
    vv = v @ v
    uv = u @ v
    return (pu * pu * pv * pv
            - uu * pv * pv
            - 4.0 * pu * pv * uv
            - vv * pu * pu
            + uu * vv
            + 2.0 * uv * uv) / c4


def score_s2(x) -> np.ndarray:
    """Second-order Gaussian score tensor x x^T - I."""
    x = np.asarray(x, dtype=float)
    return np.outer(x, x) - np.eye(x.shape[0])


def score_s4(x) -> np.ndarray:
    """Fourth-order Gaussian score (Hermite) tensor, dense d^4 storage.

    H4[i,j,k,l] = x_i x_j x_k x_l
                  - (x_i x_j d_kl + x_i x_k d_jl + x_i x_l d_jk
                     + x_j x_k d_il + x_j x_l d_ik + x_k x_l d_ij)
                  + (d_ij d_kl + d_ik d_jl + d_il d_jk)

    The six/three symmetric placements are exactly the ones that make
    H4(x)(u,u,v,v) equal the t1 numerator.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    if d > MAX_DENSE_DIM:
        raise ValueError(f"dense fourth-order tensor limited to d <= {MAX_DENSE_DIM}")
    eye = np.eye(d)
    xx = np.outer(x, x)
    t = np.einsum("i,j,k,l->ijkl", x, x, x, x)
    t -= (np.einsum("ij,kl->ijkl", xx, eye) + np.einsum("ik,jl->ijkl", xx, eye)
          + np.einsum("il,jk->ijkl", xx, eye) + np.einsum("jk,il->ijkl", xx, eye)
          + np.einsum("jl,ik->ijkl", xx, eye) + np.einsum("kl,ij->ijkl", xx, eye))
    t += (np.einsum("ij,kl->ijkl", eye, eye) + np.einsum("ik,jl->ijkl", eye, eye)
          + np.einsum("il,jk->ijkl", eye, eye))
    return t
