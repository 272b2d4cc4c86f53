"""Experiment presets, verification suites, and CSV emission.

Presets reproduce the synthetic benchmark settings at desk scale; every
preset is deterministic given its seed list and emits per-seed curve CSVs
plus an aggregate CSV. Verification suites re-check the tensor and
gradient identities the losses rely on, printing one line per check.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import baselines, datagen, losses, metrics, optim, transforms
from .model import (IDENTITY, MoEParameters, RegularizationConfig,
                    ground_truth_paper_instance, init_random,
                    nonlinearity_from_name)

PRESET_NAMES = ("fig1_regressor", "fig1_gating", "fig1_multistart",
                "fig2_nonortho", "fig2_mixture", "appendixE_batch128",
                "custom")

DEFAULT_SEEDS = (0, 1, 2, 3, 4)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full reproducibility bundle for one preset run."""

    preset: str
    k: int = 3
    d: int = 10
    sigma: float = 0.05
    g: str = "identity"
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    batch: int = 1024
    lr: float = 0.01
    iterations: int = 20000
    n_train: int = 100_000
    record_every: int = 100
    gating_lr: float = 1.0
    gating_iterations: int = 200
    em_iterations: int = 100
    reg: RegularizationConfig = field(default_factory=RegularizationConfig)
    mixture_p: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5)
    output_dir: str | None = None

    def __post_init__(self):
        if self.preset not in PRESET_NAMES:
            raise ValueError(f"unknown preset {self.preset!r}; "
                             f"choose from {PRESET_NAMES}")
        if 2 * self.k - 1 >= self.d:
            raise ValueError(f"need 2k-1 < d, got k={self.k}, d={self.d}")
        if not self.seeds:
            raise ValueError("need at least one seed")


_PRESET_OVERRIDES = {
    "fig1_regressor": {},
    "fig1_gating": {},
    "fig1_multistart": {},
    "fig2_nonortho": {"k": 2},
    "fig2_mixture": {},
    "appendixE_batch128": {"batch": 128, "lr": 0.001, "iterations": 60000},
    "custom": {},
}


def make_config(preset: str, **overrides) -> ExperimentConfig:
    """Build a config from preset defaults plus explicit overrides."""
    base = dict(_PRESET_OVERRIDES.get(preset, {}))
    base.update(overrides)
    return ExperimentConfig(preset=preset, **base)


def load_config_file(path) -> dict:
    """Flat key=value config file; '#' starts a comment. Returns a dict of
    raw override values with list-valued keys comma-split."""
    overrides = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            overrides[key] = val
    return parse_overrides(overrides)


_INT_KEYS = {"k", "d", "batch", "iterations", "n_train", "record_every",
             "gating_iterations", "em_iterations"}
_FLOAT_KEYS = {"sigma", "lr", "gating_lr"}
_REG_KEYS = {"mu", "lam", "delta_reg", "radius"}


def parse_overrides(raw: dict) -> dict:
    """Coerce raw string overrides (from a config file or CLI) to the
    ExperimentConfig field types."""
    out = {}
    reg_fields = {}
    for key, val in raw.items():
        if val is None:
            continue
        if key in _INT_KEYS:
            out[key] = int(val)
        elif key in _REG_KEYS:
            reg_fields[key] = float(val)
        elif key in _FLOAT_KEYS:
            out[key] = float(val)
        elif key == "seeds":
            if isinstance(val, str):
                out[key] = tuple(int(s) for s in val.split(","))
            else:
                out[key] = tuple(int(s) for s in val)
        elif key == "mixture_p":
            if isinstance(val, str):
                out[key] = tuple(float(s) for s in val.split(","))
            else:
                out[key] = tuple(float(s) for s in val)
        elif key in ("preset", "g", "output_dir"):
            out[key] = val
        else:
            raise ValueError(f"unknown config key {key!r}")
    if reg_fields:
        defaults = vars(RegularizationConfig()).copy()
        defaults.update(reg_fields)
        out["reg"] = RegularizationConfig(**defaults)
    return out


def derive_seed(seed: int, tag: int) -> int:
    """Stable child seed: sub-seed = hash of (master seed, stream tag)."""
    return int(np.random.SeedSequence((seed, tag)).generate_state(1)[0])


_TAG_DATA, _TAG_INIT, _TAG_SGD, _TAG_TRUTH, _TAG_GATING_INIT, _TAG_MIXTURE = range(6)


def worker_count(n_jobs: int) -> int:
    env = os.environ.get("MOE_THREADS")
    if env:
        return max(1, min(int(env), n_jobs))
    return max(1, min(os.cpu_count() or 1, n_jobs))


@dataclass
class ResultTable:
    """Per-seed trajectories grouped by named series, e.g. 'l4:e_reg'.

    A series name is '<method>:<metric>'; the metric values come from the
    trajectory field recorded for that method (metric or metric2).
    """

    preset: str
    seeds: tuple[int, ...]
    series: dict[str, dict[int, optim.Trajectory]] = field(default_factory=dict)
    fields: dict[str, str] = field(default_factory=dict)

    def add(self, name: str, seed: int, traj: optim.Trajectory,
            metric_field: str = "metric"):
        self.series.setdefault(name, {})[seed] = traj
        self.fields[name] = metric_field

    def _values(self, name, traj):
        fieldname = self.fields[name]
        return np.array([getattr(r, fieldname) for r in traj.records],
                        dtype=float)

    def finals(self, name: str) -> np.ndarray:
        """Final metric per seed, in the configured seed order."""
        group = self.series[name]
        return np.array([self._values(name, group[s])[-1] for s in self.seeds
                         if s in group])

    def aggregate(self, name: str):
        """(iterations, mean, min, max) across seeds on the common grid."""
        group = self.series[name]
        trajs = [group[s] for s in self.seeds if s in group]
        iters = np.array([r.iteration for r in trajs[0].records])
        vals = np.vstack([self._values(name, t) for t in trajs])
        return iters, vals.mean(axis=0), vals.min(axis=0), vals.max(axis=0)

    def curves_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter", "method", "seed", "metric", "loss"])
        for name in sorted(self.series):
            group = self.series[name]
            for seed in self.seeds:
                if seed not in group:
                    continue
                traj = group[seed]
                vals = self._values(name, traj)
                for rec, v in zip(traj.records, vals):
                    writer.writerow([rec.iteration, name, seed,
                                     "" if np.isnan(v) else repr(float(v)),
                                     repr(rec.loss)])
        return buf.getvalue()

    def aggregate_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter", "method", "mean", "min", "max"])
        for name in sorted(self.series):
            iters, mean, mn, mx = self.aggregate(name)
            for it, *vals in zip(iters, mean, mn, mx):
                writer.writerow([it, name] + [repr(float(v)) for v in vals])
        return buf.getvalue()

    def write(self, output_dir) -> list[str]:
        os.makedirs(output_dir, exist_ok=True)
        paths = []
        for suffix, text in (("curves", self.curves_csv()),
                             ("aggregate", self.aggregate_csv())):
            path = os.path.join(output_dir, f"{self.preset}_{suffix}.csv")
            with open(path, "w") as fh:
                fh.write(text)
            paths.append(path)
        return paths


def _kind(cfg):
    return nonlinearity_from_name(cfg.g)


def make_truth(cfg: ExperimentConfig, seed: int) -> MoEParameters:
    """Ground truth for the preset: orthogonal basis instance, except the
    non-orthogonality preset draws the gating vector uniformly on the
    sphere (per-seed)."""
    truth = ground_truth_paper_instance(cfg.k, cfg.d, cfg.sigma)
    if cfg.preset == "fig2_nonortho":
        rng = np.random.default_rng(derive_seed(seed, _TAG_TRUTH))
        w = np.vstack([datagen.random_unit_vector(cfg.d, rng)
                       for _ in range(cfg.k - 1)])
        truth = MoEParameters(truth.regressors, w, cfg.sigma)
    return truth


def make_data(cfg: ExperimentConfig, truth: MoEParameters, seed: int,
              mixture_p: float | None = None):
    rng = np.random.default_rng(derive_seed(seed, _TAG_DATA))
    if mixture_p is None:
        dist = datagen.StandardGaussian()
    else:
        mu_rng = np.random.default_rng(derive_seed(seed, _TAG_MIXTURE))
        dist = datagen.SymmetricGaussianMixture(
            mixture_p, datagen.random_unit_vector(cfg.d, mu_rng))
    x = datagen.sample_inputs(dist, cfg.n_train, cfg.d, rng)
    return datagen.sample_moe(truth, x, rng, kind=_kind(cfg))


def run_l4_stage(cfg: ExperimentConfig, data, truth, seed: int):
    profile = transforms.make_profile(_kind(cfg), cfg.sigma)
    ctx = losses.L4Context.build(data, profile, cfg.reg)
    init = init_random(cfg.k, cfg.d, cfg.reg.radius,
                       np.random.default_rng(derive_seed(seed, _TAG_INIT)))
    tcfg = optim.TrainConfig(cfg.lr, cfg.batch, cfg.iterations,
                             record_every=cfg.record_every,
                             seed=derive_seed(seed, _TAG_SGD))
    return optim.sgd_l4(init.regressors, data, ctx, tcfg, truth)


def align_to_truth(A_hat: np.ndarray, data, truth: MoEParameters, sigma: float,
                   kind=IDENTITY) -> np.ndarray:
    """Prepare a learned regressor matrix for the gating stage: resolve
    signs from the data likelihood, then relabel expert slots by the
    matched permutation so slot i corresponds to true expert i."""
    resolved = metrics.resolve_signs(A_hat, data, sigma, kind)
    match = metrics.regressor_error(resolved.regressors, truth.regressors)
    aligned = np.empty_like(resolved.regressors)
    for i, j in enumerate(match.permutation):
        aligned[j] = resolved.regressors[i]
    return aligned


def run_gating_stage(cfg: ExperimentConfig, data, truth, A_fixed, seed: int):
    ctx = losses.GatingContext(A_fixed, cfg.sigma, cfg.reg.radius, _kind(cfg))
    w_rng = np.random.default_rng(derive_seed(seed, _TAG_GATING_INIT))
    W0 = init_random(cfg.k, cfg.d, cfg.reg.radius, w_rng).gating
    tcfg = optim.TrainConfig(cfg.gating_lr, batch_size=1,
                             iterations=cfg.gating_iterations,
                             record_every=1, seed=derive_seed(seed, _TAG_SGD))
    return optim.projected_gd_gating(W0, ctx, data, tcfg,
                                     truth_gating=truth.gating)


def run_baseline_l2(cfg: ExperimentConfig, data, truth, seed: int):
    init = init_random(cfg.k, cfg.d, cfg.reg.radius,
                       np.random.default_rng(derive_seed(seed, _TAG_INIT)))
    tcfg = optim.TrainConfig(cfg.lr, cfg.batch, cfg.iterations,
                             record_every=cfg.record_every,
                             seed=derive_seed(seed, _TAG_SGD))
    return baselines.l2_joint_sgd(init.regressors, init.gating, data, tcfg,
                                  truth, _kind(cfg))


def run_baseline_em(cfg: ExperimentConfig, data, truth, seed: int):
    init = init_random(cfg.k, cfg.d, cfg.reg.radius,
                       np.random.default_rng(derive_seed(seed, _TAG_INIT)),
                       noise_sigma=cfg.sigma)
    ecfg = baselines.EmConfig(cfg.em_iterations, seed=derive_seed(seed, _TAG_SGD))
    return baselines.run_em(init, data, ecfg, truth, cfg.reg.radius, _kind(cfg))


def _preset_methods(preset: str):
    if preset in ("fig1_regressor",):
        return ("l4", "l2", "em")
    if preset == "fig1_gating":
        return ("l4", "llog", "l2", "em")
    if preset == "fig2_nonortho":
        return ("l4", "llog")
    return ("l4",)


def _run_seed(cfg: ExperimentConfig, seed: int, mixture_p=None):
    """All methods of the preset for one seed; returns {series: (traj, field)}."""
    truth = make_truth(cfg, seed)
    data = make_data(cfg, truth, seed, mixture_p)
    methods = _preset_methods(cfg.preset)
    out = {}
    A_l4 = None
    if "l4" in methods:
        A_l4, traj = run_l4_stage(cfg, data, truth, seed)
        out["l4:e_reg"] = (traj, "metric")
    if "llog" in methods:
        A_fixed = align_to_truth(A_l4, data, truth, cfg.sigma, _kind(cfg))
        _, traj = run_gating_stage(cfg, data, truth, A_fixed, seed)
        out["llog:e_gating"] = (traj, "metric")
    if "l2" in methods:
        _, _, traj = run_baseline_l2(cfg, data, truth, seed)
        out["l2:e_reg"] = (traj, "metric")
        out["l2:e_gating"] = (traj, "metric2")
    if "em" in methods:
        _, traj = run_baseline_em(cfg, data, truth, seed)
        out["em:e_reg"] = (traj, "metric")
        out["em:e_gating"] = (traj, "metric2")
    return out


def run_preset(cfg: ExperimentConfig) -> ResultTable:
    """Execute every seed (and mixture proportion, for that preset) of the
    configured experiment, in parallel worker threads capped by
    MOE_THREADS, and write CSVs when an output directory is set."""
    table = ResultTable(cfg.preset, cfg.seeds)
    jobs = []
    if cfg.preset == "fig2_mixture":
        for p in cfg.mixture_p:
            for seed in cfg.seeds:
                jobs.append((f"l4[p={p:g}]", seed, p))
    else:
        for seed in cfg.seeds:
            jobs.append((None, seed, None))

    def run_job(job):
        prefix, seed, p = job
        result = _run_seed(cfg, seed, p)
        if prefix is not None:
            result = {name.replace("l4", prefix, 1): v
                      for name, v in result.items()}
        return seed, result

    with ThreadPoolExecutor(max_workers=worker_count(len(jobs))) as pool:
        results = list(pool.map(run_job, jobs))
    for seed, named in results:
        for name, (traj, metric_field) in named.items():
            table.add(name, seed, traj, metric_field)
    if cfg.output_dir:
        table.write(cfg.output_dir)
    return table


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    tolerance: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.note})" if self.note else ""
        return (f"[{status}] {self.name}: measured {self.measured:.3e}"
                f" vs tolerance {self.tolerance:.3e}{extra}")


def finite_difference_gradient(f, x0: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of an array."""
    x0 = np.asarray(x0, dtype=float)
    grad = np.zeros_like(x0)
    flat = grad.reshape(-1)
    base = x0.copy().reshape(-1)
    for j in range(base.size):
        orig = base[j]
        base[j] = orig + h
        fp = f(base.reshape(x0.shape))
        base[j] = orig - h
        fm = f(base.reshape(x0.shape))
        base[j] = orig
        flat[j] = (fp - fm) / (2.0 * h)
    return grad


def relative_max_error(approx: np.ndarray, exact: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(exact))), 1e-12)
    return float(np.max(np.abs(approx - exact)) / scale)


def empirical_fourth_tensor(X: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """mean_n w_n * S4(x_n) without materializing per-sample tensors."""
    n, d = X.shape
    m4 = np.zeros((d * d, d * d))
    step = 100_000
    for lo in range(0, n, step):
        chunk = X[lo:lo + step]
        w = weights[lo:lo + step]
        pairs = np.einsum("ni,nj->nij", chunk, chunk).reshape(len(chunk), d * d)
        m4 += (w[:, None] * pairs).T @ pairs
    m4 = (m4 / n).reshape(d, d, d, d)
    m2 = np.einsum("n,ni,nj->ij", weights, X, X) / n
    m0 = weights.mean()
    eye = np.eye(d)
    t = m4.copy()
    t -= (np.einsum("ij,kl->ijkl", m2, eye) + np.einsum("ik,jl->ijkl", m2, eye)
          + np.einsum("il,jk->ijkl", m2, eye) + np.einsum("jk,il->ijkl", m2, eye)
          + np.einsum("jl,ik->ijkl", m2, eye) + np.einsum("kl,ij->ijkl", m2, eye))
    t += m0 * (np.einsum("ij,kl->ijkl", eye, eye)
               + np.einsum("ik,jl->ijkl", eye, eye)
               + np.einsum("il,jk->ijkl", eye, eye))
    return t


def verify_tensor(n: int = 1_000_000, seed: int = 2024) -> list[CheckResult]:
    """Monte-Carlo check that the transformed-output moments recover the
    weighted rank-one tensor sums with constants c4 and c2."""
    k, d, sigma = 2, 4, 0.05
    truth = ground_truth_paper_instance(k, d, sigma)
    profile = transforms.make_profile(IDENTITY, sigma)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    data = datagen.sample_moe(truth, x, rng)
    q4y = transforms.q4(data.outputs, profile.coeffs)
    q2y = transforms.q2(data.outputs, profile.coeffs)

    # gating weights from an independent draw
    x_indep = np.random.default_rng(seed + 1).standard_normal((n, d))
    alphas = datagen.gating_probs(truth.gating, x_indep).mean(axis=0)

    a = truth.regressors
    expected4 = profile.constants.c4 * np.einsum(
        "m,mi,mj,mk,ml->ijkl", alphas, a, a, a, a)
    t4 = empirical_fourth_tensor(data.inputs, q4y)
    rel4 = float(np.linalg.norm((t4 - expected4).ravel())
                 / np.linalg.norm(expected4.ravel()))

    m2 = np.einsum("n,ni,nj->ij", q2y, data.inputs, data.inputs) / n
    t2 = m2 - q2y.mean() * np.eye(d)
    expected2 = profile.constants.c2 * np.einsum("m,mi,mj->ij", alphas, a, a)
    rel2 = float(np.linalg.norm(t2 - expected2) / np.linalg.norm(expected2))

    return [
        CheckResult("fourth-order tensor relative Frobenius error", rel4, 0.05,
                    rel4 <= 0.05, f"n={n}"),
        CheckResult("second-order tensor relative Frobenius error", rel2, 0.02,
                    rel2 <= 0.02, f"n={n}"),
    ]


def verify_gradients(instances: int = 20, seed: int = 7) -> list[CheckResult]:
    """Analytic versus central finite-difference gradients for all three
    losses on small random instances."""
    rng = np.random.default_rng(seed)
    k, d, n = 3, 6, 256
    reg = RegularizationConfig()
    profile = transforms.make_profile(IDENTITY, 0.05)
    worst = {"l4": 0.0, "llog": 0.0, "l2_a": 0.0, "l2_w": 0.0}
    for _ in range(instances):
        truth = init_random(k, d, 1.0, rng, noise_sigma=0.05)
        x = rng.standard_normal((n, d))
        data = datagen.sample_moe(truth, x, rng)
        ctx = losses.L4Context.build(data, profile, reg)
        A = rng.standard_normal((k, d)) / np.sqrt(d)
        W = init_random(k, d, 1.0, rng).gating

        ana = losses.l4_gradient(A, data, ctx)
        fd = finite_difference_gradient(lambda m: losses.l4_value(m, data, ctx), A)
        worst["l4"] = max(worst["l4"], relative_max_error(ana, fd))

        gctx = losses.GatingContext(truth.regressors, 0.05, 1.0)
        ana = losses.llog_gradient_w(W, gctx, data)
        fd = finite_difference_gradient(
            lambda m: losses.llog_value(m, gctx, data), W)
        worst["llog"] = max(worst["llog"], relative_max_error(ana, fd))

        ga, gw = losses.l2_gradients(A, W, data)
        fa = finite_difference_gradient(
            lambda m: losses.l2_value(m, W, data), A)
        fw = finite_difference_gradient(
            lambda m: losses.l2_value(A, m, data), W)
        worst["l2_a"] = max(worst["l2_a"], relative_max_error(ga, fa))
        worst["l2_w"] = max(worst["l2_w"], relative_max_error(gw, fw))

    tol = 1e-5
    return [CheckResult(f"{name} gradient vs finite differences", err, tol,
                        err <= tol, f"{instances} instances")
            for name, err in worst.items()]


def verify_gru(instances: int = 1000, seed: int = 11) -> list[CheckResult]:
    from . import gru_bridge

    rng = np.random.default_rng(seed)
    m, d_x = 8, 6
    worst = 0.0
    for _ in range(instances):
        params = gru_bridge.random_gru_params(m, d_x, rng)
        x = rng.standard_normal(d_x)
        h = rng.standard_normal(m)
        a = gru_bridge.gru_step_binary(x, h, params)
        b = gru_bridge.hmoe_step(x, h, params)
        worst = max(worst, float(np.max(np.abs(a - b))))
    return [CheckResult("GRU step vs hierarchical MoE max deviation", worst,
                        0.0, worst == 0.0, f"{instances} instances")]


def verify_coeffs() -> list[CheckResult]:
    sigma = 0.05
    out = []
    ident = transforms.make_profile(IDENTITY, sigma)
    c = ident.coeffs
    err_ident = max(abs(c.alpha), abs(c.beta + 6.0 * (1.0 + sigma ** 2)),
                    abs(c.gamma), abs(c.delta_q))
    out.append(CheckResult("identity coefficients vs closed form", err_ident,
                           1e-12, err_ident <= 1e-12))

    from .model import RELU, SIGMOID, leaky_relu

    relu = transforms.make_profile(RELU, sigma)
    err_delta = abs(relu.coeffs.delta_q + 2.0 * np.sqrt(2.0 / np.pi))
    out.append(CheckResult("relu delta_q vs -2 sqrt(2/pi)", err_delta, 1e-12,
                           err_delta <= 1e-12))
    for name, profile in (("identity", ident), ("relu", relu),
                          ("sigmoid", transforms.make_profile(SIGMOID, sigma)),
                          ("leaky_relu", transforms.make_profile(leaky_relu(0.1), sigma))):
        report = transforms.check_validity(profile)
        res = max(max(abs(r) for r in report.cond1_residuals),
                  abs(report.cond2_residual))
        out.append(CheckResult(f"{name} orthogonality residuals", res, 1e-10,
                               res <= 1e-10,
                               f"c4={report.c4:.4g}, c2={report.c2:.4g}"))
    return out


def verify_contraction(n: int = 100_000, steps: int = 50,
                       seed: int = 13) -> list[CheckResult]:
    """Fixed-point and contraction behaviour of the gating stage with the
    regressors held at truth."""
    k, d, sigma = 3, 10, 0.05
    truth = ground_truth_paper_instance(k, d, sigma)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    data = datagen.sample_moe(truth, x, rng)
    ctx = losses.GatingContext(truth.regressors, sigma, 1.0)

    grad = losses.llog_gradient_w(truth.gating, ctx, data)
    grad_max = float(np.max(np.abs(grad)))

    W0 = init_random(k, d, 1.0, np.random.default_rng(seed + 1)).gating
    tcfg = optim.TrainConfig(1.0, batch_size=1, iterations=steps,
                             record_every=1, seed=0)
    _, traj = optim.projected_gd_gating(W0, ctx, data, tcfg,
                                        truth_gating=truth.gating)
    report = optim.contraction_diagnostic(traj)
    final = traj.final.param_distance
    return [
        CheckResult("gating gradient max-norm at the true parameters",
                    grad_max, 0.05, grad_max <= 0.05, f"n={n}"),
        CheckResult("geometric-mean contraction ratio (first 10 steps)",
                    report.geometric_mean, 1.0, report.geometric_mean < 1.0),
        CheckResult(f"gating distance after {steps} steps", final, 0.05,
                    final <= 0.05),
    ]


VERIFICATION_SUITES = {
    "tensor": verify_tensor,
    "gradients": verify_gradients,
    "gru": verify_gru,
    "coeffs": verify_coeffs,
    "contraction": verify_contraction,
}


def run_verification(suite: str) -> list[CheckResult]:
    """Run one named suite (or 'all'); print one line per check."""
    names = list(VERIFICATION_SUITES) if suite == "all" else [suite]
    results = []
    for name in names:
        if name not in VERIFICATION_SUITES:
            raise ValueError(f"unknown suite {name!r}; "
                             f"choose from {sorted(VERIFICATION_SUITES)} or 'all'")
        for check in VERIFICATION_SUITES[name]():
            print(check.line())
            results.append(check)
    return results
