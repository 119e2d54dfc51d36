"""Experiments behind the CLI subcommands.

Each experiment takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` with CSV rows and pass/fail metrics.  Replications
own disjoint noise keys and are aggregated in replication order, so the
output does not depend on the thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..coupling import PairedEnsemble, canonical_representation_check, sewing_exponent_study
from ..measures import InitialLawSpec, moment_norm, sample_initial
from ..model import Linear1D, builtin_model, verify_model_consistency
from ..noise import CanonicalNoise, init_rng
from ..parallel import map_reps
from ..partitions import dyadic_partition, on_grid
from ..scheme import LawFlow, compose_scheme, run_levels
from ..stability import discretization_convergence, stability_experiment
from ..stats import loglog_fit, mean_se
from ..wasserstein import MAX_EXACT_N, coupled_distance, w_distance
from .config import ConfigError, ExperimentConfig

# replication key offsets for independent noise families
FRESH_KEY = 1 << 20
CALIB_KEY = 2 << 20
SHIFT_KEY = 3 << 20
FLOW_KEY = 4 << 20


@dataclass
class Metric:
    name: str
    value: float
    stderr: float | None = None
    window: tuple = (None, None)
    passed: bool | None = None

    def __post_init__(self):
        if self.passed is None:
            lo, hi = self.window
            v = self.value
            self.passed = bool(
                v is not None and not (isinstance(v, float) and math.isnan(v))
                and (lo is None or v >= lo) and (hi is None or v <= hi)
            )

    def to_dict(self):
        return {"name": self.name, "value": self.value, "stderr": self.stderr,
                "window": list(self.window), "pass": self.passed}


@dataclass
class ExperimentResult:
    experiment: str
    rows: list
    columns: list
    metrics: list
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.metrics)

    def summary(self, cfg: ExperimentConfig) -> dict:
        return {"experiment": self.experiment, "config_hash": cfg.hash(),
                "metrics": [m.to_dict() for m in self.metrics]}


def _initial(cfg: ExperimentConfig, rep: int, tag: int = 0) -> np.ndarray:
    return np.array(sample_initial(cfg.initial_spec(), init_rng(cfg.seed, rep, tag)).points)


def _w2(a, b) -> float:
    """Exact W2 where affordable, index-coupled upper bound otherwise."""
    if a.shape[1] == 1 or a.shape[0] <= MAX_EXACT_N:
        return w_distance(a, b)
    return coupled_distance(a, b)


# ---------------------------------------------------------------- simulate

def simulate(cfg: ExperimentConfig) -> ExperimentResult:
    """Dyadic scheme at one level; moment summary at every grid time."""
    model = cfg.build_model()
    level = int(cfg.opt("level", cfg.levels[1]))
    pi = dyadic_partition(cfg.s, cfg.t, level)

    def one(rep):
        x0 = _initial(cfg, rep)
        noise = CanonicalNoise.for_model(model, cfg.seed, cfg.N, level, rep=rep)
        traj = compose_scheme(x0, pi, model, noise)
        means = np.stack([e.state.mean(axis=0) for e in traj])
        m2 = np.array([float(np.mean(np.sum(e.state**2, axis=1))) for e in traj])
        growth = max((1 + moment_norm(e.state)) for e in traj) / (1 + moment_norm(x0))
        final = traj[-1].state if rep == 0 else None
        return means, m2, growth, final

    res = map_reps(one, cfg.reps, cfg.threads)
    means, means_se = mean_se(np.stack([r[0] for r in res]))
    m2, m2_se = mean_se(np.stack([r[1] for r in res]))
    growth, growth_se = mean_se([r[2] for r in res])
    d = means.shape[1]
    rows = []
    for k, t in enumerate(pi.times):
        row = {"time": float(t)}
        for j in range(d):
            row[f"mean_{j + 1}"] = means[k, j]
            row[f"mean_{j + 1}_se"] = means_se[k, j]
        row["m2_trace"] = m2[k]
        row["m2_trace_se"] = m2_se[k]
        rows.append(row)
    info = {"final_points": res[0][3], "level": level}
    metrics = [Metric("moment_growth_A", float(growth), float(growth_se), (1.0 - 1e-12, None))]
    return ExperimentResult("simulate", rows, list(rows[0]), metrics, info)


# ---------------------------------------------------------------- rate study

def rate_study(cfg: ExperimentConfig) -> ExperimentResult:
    """Coupled distance of Theta^n to the reference level, globally on [s, t]
    and for a single step of length 2^-n."""
    model = cfg.build_model()
    levels = cfg.level_range()
    ref = cfg.ref_level
    if ref - levels[-1] < 3:
        raise ConfigError("reference level must exceed every study level by at least 3")
    s, t = cfg.s, cfg.t

    def one(rep):
        x0 = _initial(cfg, rep)
        noise = CanonicalNoise.for_model(model, cfg.seed, cfg.N, ref, rep=rep)
        # one step of level n from x0 is the level-n state at s + 2^-n of the same pass
        firsts = [s + 2.0**-n for n in levels]
        out = run_levels(x0, s, t, levels + [ref], model, noise, outputs=firsts)

        def at(n, time):
            return next(e.state for e in out[n] if e.time == time)

        glob = np.array([coupled_distance(out[n][-1].state, out[ref][-1].state) for n in levels])
        single = np.array([coupled_distance(at(n, f), at(ref, f)) for n, f in zip(levels, firsts)])
        return glob, single, moment_norm(x0)

    res = map_reps(one, cfg.reps, cfg.threads)
    glob_all = np.stack([r[0] for r in res])
    single_all = np.stack([r[1] for r in res])
    norm0 = float(np.mean([r[2] for r in res]))
    mesh = 2.0 ** -np.array(levels, dtype=np.float64)
    glob, glob_se = mean_se(glob_all)
    single, single_se = mean_se(single_all)
    rows = []
    for i, n in enumerate(levels):
        rows.append({"level": n, "h": mesh[i], "metric": "global", "value": glob[i], "stderr": glob_se[i]})
    for i, n in enumerate(levels):
        rows.append({"level": n, "h": mesh[i], "metric": "single_step", "value": single[i], "stderr": single_se[i]})
    columns = ["level", "h", "metric", "value", "stderr"]
    if np.all(glob_all == 0) and np.all(single_all == 0):
        nan = float("nan")
        metrics = [Metric("global_slope", nan, None, (0.4, 1.3), True),
                   Metric("single_step_slope", nan, None, (0.8, None), True)]
        return ExperimentResult("rate-study", rows, columns, metrics, {"degenerate": True})

    def slopes(all_rows):
        per = [loglog_fit(mesh, r).slope for r in all_rows]
        return mean_se(per)

    g_slope, g_se = slopes(glob_all)
    s_slope, s_se = slopes(single_all)
    const = glob / ((1 + norm0) * math.sqrt(t - s) * np.sqrt(mesh))
    spread = float(np.max(np.abs(const / const.mean() - 1)))
    fit_g = loglog_fit(mesh, glob)
    fit_s = loglog_fit(mesh, single)
    for name, f in (("global", fit_g), ("single_step", fit_s)):
        rows.append({"level": None, "h": None, "metric": f"{name}_fit_slope", "value": f.slope, "stderr": f.se})
        rows.append({"level": None, "h": None, "metric": f"{name}_fit_r2", "value": f.r2, "stderr": None})
    metrics = [
        Metric("global_slope", float(g_slope), float(g_se), (0.4, 1.3)),
        Metric("global_constant_spread", spread, None, (0.0, 0.3)),
        Metric("global_constant_mean", float(const.mean()), None, (0.0, None)),
        Metric("single_step_slope", float(s_slope), float(s_se), (0.8, None)),
    ]
    return ExperimentResult("rate-study", rows, columns, metrics, {"degenerate": False, "constants": const})


# ---------------------------------------------------------------- sewing check

def sewing_check(cfg: ExperimentConfig) -> ExperimentResult:
    model = cfg.build_model()
    h_levels = cfg.opt("h_levels", cfg.level_range())
    if isinstance(h_levels, str):
        a, b = h_levels.split(":")
        h_levels = list(range(int(a), int(b) + 1))
    mu1 = cfg.initial_spec()
    mu2 = cfg.opt("initial2", None)
    mu2 = None if mu2 is None else InitialLawSpec.from_dict({**mu2, "n": cfg.N})
    est = sewing_exponent_study(model, mu1, mu2, h_levels, cfg.N, int(cfg.opt("M", 64)), cfg.seed, cfg.reps,
                                float(cfg.opt("r_frac", 0.5)), cfg.s, threads=cfg.threads)
    rows = est.rows()
    for name, f in est.fits.items():
        if f is not None:
            rows.append({"h": None, "norm_name": f"{name}_exponent", "value": f.slope, "stderr": est.slope_se[name]})
            rows.append({"h": None, "norm_name": f"{name}_r2", "value": f.r2, "stderr": None})
    windows = {"dEtil": (0.8, 1.2), "dEhat": (1.3, None), "E1til": (0.4, 0.6), "E1hat": (0.85, 1.15)}
    if mu2 is not None:
        windows = {"E1til": (0.4, 0.6), "E1hat": (0.85, 1.15)}
    metrics = []
    for name, win in windows.items():
        f = est.fits[name]
        value = float("nan") if f is None else f.slope
        metrics.append(Metric(f"{name}_slope", value, float(est.slope_se[name]), win))
    metrics.append(Metric("nested_rel_se_max", float(est.nested_rel_se.max()), None, (0.0, 0.1)))
    metrics.append(Metric("L_sew", est.L_sew, None, (0.0, None)))
    metrics.append(Metric("C_sew", est.C_sew, None, (0.0, None)))
    return ExperimentResult("sewing-check", rows, ["h", "norm_name", "value", "stderr"], metrics,
                            {"estimate": est})


# ---------------------------------------------------------------- flow check

def flow_check(cfg: ExperimentConfig) -> ExperimentResult:
    """theta_{s,t} against theta_{r,t} o theta_{s,r} at one fine level."""
    model = cfg.build_model()
    level = int(cfg.opt("level", min(cfg.ref_level, 10)))
    s, t = cfg.s, cfg.t
    r = float(cfg.opt("r", s + 0.5 * (t - s)))
    if not (s < r < t and on_grid(r, level)):
        raise ConfigError(f"restart time r={r} must be a level-{level} grid point inside (s, t)")

    def run(x, a, b, key):
        noise = CanonicalNoise.for_model(model, cfg.seed, cfg.N, level, rep=key)
        return run_levels(x, a, b, [level], model, noise)[level][-1].state

    def one(rep):
        x0 = _initial(cfg, rep)
        full = run(x0, s, t, rep)
        half = run(x0, s, r, rep)
        aligned = run(half, r, t, rep)
        fresh = run(half, r, t, rep + FRESH_KEY)
        calib = run(x0, s, t, rep + CALIB_KEY)
        return float(np.max(np.abs(full - aligned))), _w2(full, fresh), _w2(full, calib)

    res = np.array(map_reps(one, cfg.reps, cfg.threads))
    floor = 5.0 / math.sqrt(cfg.N)
    fresh, fresh_se = mean_se(res[:, 1])
    calib, calib_se = mean_se(res[:, 2])
    rows = [{"rep": k, "aligned_gap": a, "fresh_gap": b, "calibration_gap": c} for k, (a, b, c) in enumerate(res)]
    metrics = [
        Metric("aligned_gap_max", float(res[:, 0].max()), 0.0, (0.0, 0.0)),
        Metric("fresh_gap", float(fresh), float(fresh_se), (0.0, floor),
               passed=bool(res[:, 1].max() <= floor)),
        Metric("calibration_gap", float(calib), float(calib_se), (0.0, floor),
               passed=bool(res[:, 2].max() <= floor)),
        Metric("fresh_over_calibration", float(fresh / calib) if calib > 0 else float("nan"), None, (None, None),
               passed=True),
    ]
    return ExperimentResult("flow-check", rows, ["rep", "aligned_gap", "fresh_gap", "calibration_gap"], metrics,
                            {"level": level, "r": r})


# ---------------------------------------------------------------- Lipschitz check

def _random_law(rng, d, n):
    mean = rng.uniform(-1.0, 1.0, size=d)
    sd = rng.uniform(0.3, 1.0)
    if rng.random() < 0.5:
        return InitialLawSpec("gaussian", dim=d, n=n, mean=mean.tolist(), cov=(sd * sd * np.eye(d)).tolist())
    return InitialLawSpec("uniform-box", dim=d, n=n, lo=(mean - 1.7 * sd).tolist(), hi=(mean + 1.7 * sd).tolist())


def lipschitz_check(cfg: ExperimentConfig) -> ExperimentResult:
    """Output/input W2 ratios of the reference flow on shared noise."""
    model = cfg.build_model()
    level = int(cfg.opt("level", min(cfg.ref_level, 10)))
    pairs = int(cfg.opt("pairs", 10))
    times = sorted(float(v) for v in cfg.opt("times", [0.25, 0.5, 1.0]))
    s = cfg.s
    end = times[-1]
    if times[0] <= s or end > cfg.T or not all(on_grid(v, level) for v in times):
        raise ConfigError("times must be level grid points in (s, T]")
    d = model.dim

    def flow(x, key):
        noise = CanonicalNoise.for_model(model, cfg.seed, cfg.N, level, rep=key)
        out = run_levels(x, s, end, [level], model, noise, outputs=times)[level]
        return {e.time: e.state for e in out}

    def one_pair(p):
        rng = init_rng(cfg.seed, p, tag=11)
        x_mu = np.array(sample_initial(_random_law(rng, d, cfg.N), rng).points)
        x_nu = np.array(sample_initial(_random_law(rng, d, cfg.N), rng).points)
        pair = PairedEnsemble.optimally_paired(x_mu, x_nu)
        w_in = pair.gap()
        a, b = flow(pair.x1, p), flow(pair.x2, p)
        coupled = [coupled_distance(a[v], b[v]) / w_in for v in times]
        exact = [_w2(a[v], b[v]) / w_in for v in times]
        return w_in, coupled, exact

    res = map_reps(one_pair, pairs, cfg.threads)
    rows = []
    for p, (w_in, coupled, exact) in enumerate(res):
        for v, rc, re_ in zip(times, coupled, exact):
            rows.append({"kind": "pair", "pair": p, "time": v, "w_in": w_in, "ratio_coupled": rc,
                         "ratio_w2": re_, "expected": None, "stderr": None})
    ratios = np.array([r[1] for r in res])
    c_t = float(ratios.max())
    lip = model.lipschitz()
    envelope = math.exp((4 * lip["C"] + 18 * lip["Cbar"]) * (end - s) / 2)
    metrics = [Metric("C_T", c_t, None, (0.0, envelope)),
               Metric("w2_le_coupled", float(np.max(np.array([r[2] for r in res]) - ratios)), None, (None, 1e-12))]

    # translated law, linear model: the mean gap is transported by the mean ODE
    if isinstance(model, Linear1D):
        delta = float(cfg.opt("delta", 0.5))
        a_rate = model.bx + model.bm
        h = 2.0**-level

        def shifted(rep):
            x0 = _initial(cfg, rep, tag=13)
            key = rep + SHIFT_KEY
            a, b = flow(x0, key), flow(x0 + delta, key)
            return [float((b[v].mean() - a[v].mean()) / delta) for v in times]

        gaps = np.array(map_reps(shifted, cfg.reps, cfg.threads))
        g_mean, g_se = mean_se(gaps)
        ok = True
        for v, gm, gs in zip(times, g_mean, g_se):
            exact = math.exp(a_rate * (v - s))
            euler = (1 + a_rate * h) ** round((v - s) / h)
            tol = max(4 * gs, abs(exact - euler))
            ok &= abs(gm - exact) <= tol
            rows.append({"kind": "translation", "pair": None, "time": v, "w_in": delta, "ratio_coupled": gm,
                         "ratio_w2": None, "expected": exact, "stderr": gs})
        worst = float(np.max(np.abs(g_mean - np.exp(a_rate * (np.array(times) - s)))))
        metrics.append(Metric("translation_factor_error", worst, float(g_se.max()), (None, None), passed=bool(ok)))

    # continuity at the start time
    rng = init_rng(cfg.seed, 0, tag=17)
    x = np.array(sample_initial(cfg.initial_spec(), rng).points)
    cont_levels = [k for k in range(0, 6) if on_grid(s + (end - s) * 2.0**-k, level)]
    ctimes = [s + (end - s) * 2.0**-k for k in cont_levels]
    out = run_levels(x, s, end, [level], model, CanonicalNoise.for_model(model, cfg.seed, cfg.N, level, rep=FLOW_KEY),
                     outputs=ctimes)[level]
    snaps = {e.time: e.state for e in out}
    dist = np.array([_w2(snaps[v], x) for v in ctimes])
    norm = moment_norm(x)
    c_hat = float(np.max(dist / ((1 + norm) * np.sqrt(np.array(ctimes) - s))))
    for v, dv in zip(ctimes, dist):
        rows.append({"kind": "continuity", "pair": None, "time": v, "w_in": None, "ratio_coupled": dv,
                     "ratio_w2": None, "expected": None, "stderr": None})
    monotone = bool(np.all(np.diff(dist) <= 0))  # ctimes decrease
    metrics.append(Metric("continuity_C", c_hat, None, (0.0, None)))
    metrics.append(Metric("continuity_monotone", float(monotone), None, (1.0, 1.0)))
    columns = ["kind", "pair", "time", "w_in", "ratio_coupled", "ratio_w2", "expected", "stderr"]
    return ExperimentResult("lipschitz-check", rows, columns, metrics, {"envelope": envelope})


# ---------------------------------------------------------------- stability check

def stability_check(cfg: ExperimentConfig) -> ExperimentResult:
    model = cfg.build_model()
    n_list = [int(v) for v in cfg.opt("n_list", [8, 16, 32])]
    pairs = int(cfg.opt("pairs", 20))
    s, t = cfg.s, cfg.t
    ref_factor = 4
    level = int(math.ceil(math.log2(ref_factor * max(n_list))))
    if any(2**round(math.log2(n)) != n for n in n_list):
        raise ConfigError("steps per unit must be powers of two")

    def one(p):
        rng = init_rng(cfg.seed, p, tag=23)
        x0 = np.array(sample_initial(_random_law(rng, model.dim, cfg.N), rng).points)
        base_noise = CanonicalNoise.for_model(model, cfg.seed, cfg.N, level, rep=p + FLOW_KEY)
        fa = LawFlow.from_trajectory(compose_scheme(x0, dyadic_partition(s, t, level), model, base_noise))
        fb = fa.perturbed(shift=rng.uniform(-0.5, 0.5, size=model.dim), scale=rng.uniform(0.7, 1.3),
                          trend=rng.uniform(-0.5, 0.5, size=model.dim))
        noise = CanonicalNoise.for_model(model, cfg.seed, cfg.N, level, rep=p)
        reports = [stability_experiment(model, x0, fa, fb, n, noise, s, t) for n in n_list]
        zero = None
        conv = None
        if p == 0:
            zero = float(stability_experiment(model, x0, fa, fa, n_list[0], noise, s, t).lhs.max())
            conv = discretization_convergence(model, x0, fa, n_list, noise, s, t, ref_factor)
        return reports, zero, conv

    res = map_reps(one, pairs, cfg.threads)
    rows = []
    spreads = []
    all_pass = True
    for p, (reports, _, _) in enumerate(res):
        cs = np.array([rep.C_fitted for rep in reports])
        spreads.append(float(np.max(np.abs(cs / cs.mean() - 1))))
        for rep in reports:
            all_pass &= rep.passed
            for row in rep.rows():
                rows.append({"pair": p, "n": rep.n, **row})
    zero = res[0][1]
    conv = res[0][2]
    c_all = np.array([[rep.C_fitted for rep in r[0]] for r in res])
    metrics = [
        Metric("lhs_le_rhs", float(all_pass), None, (1.0, 1.0)),
        Metric("C_spread_max", float(max(spreads)), None, (0.0, 0.25)),
        Metric("C_mean", float(c_all.mean()), float(c_all.std(ddof=1) / math.sqrt(c_all.size)), (0.0, None)),
        Metric("identical_flow_lhs", zero, None, (0.0, 0.0)),
    ]
    if conv["fit"] is not None:
        metrics.append(Metric("discretization_slope", conv["fit"]["slope"], conv["fit"]["se"], (0.4, None)))
    return ExperimentResult("stability-check", rows, ["pair", "n", "time", "lhs", "rhs", "C_fitted"], metrics,
                            {"C": c_all, "convergence": conv})


# ---------------------------------------------------------------- canonical representation

def _cloud(kind, rng, n, d):
    if kind == "point":
        return np.full((n, d), 0.3)
    if kind == "gaussian":
        return rng.normal(0.1, 0.7, size=(n, d))
    if kind == "exponential":
        return rng.exponential(1.0, size=(n, d)) - 0.5
    if kind == "uniform":
        return rng.uniform(-1.0, 2.0, size=(n, d))
    if kind == "bimodal":
        return np.where(rng.random((n, d)) < 0.3, rng.normal(-1.5, 0.3, (n, d)), rng.normal(1.0, 0.5, (n, d)))
    if kind == "lognormal":
        return rng.lognormal(0.0, 0.6, size=(n, d))
    raise ValueError(kind)


CANONICAL_CASES = [
    ("linear1d", {}, "point"),
    ("linear1d", {}, "gaussian"),
    ("linear1d", {}, "exponential"),
    ("linear1d", {"cv": 1.0, "lambda": 2.0}, "exponential"),
    ("linear1d", {"s0": 0.2, "sv": 1.0, "lambda": 1.0}, "exponential"),
    ("linear1d", {}, "uniform"),
    ("linear1d", {"cv": 1.0, "sv": 0.5, "lambda": 1.5}, "bimodal"),
    ("linear1d", {"cx": 0.5, "cv": 0.5, "s0": 0.3, "lambda": 5.0}, "lognormal"),
    ("attract-d", {"d": 2}, "gaussian"),
    ("attract-d", {"d": 2, "gamma": 0.8}, "exponential"),
]
FAULT_CASE = ("linear1d", {"cv": 1.0, "lambda": 2.0}, "exponential")


def canonical_check(cfg: ExperimentConfig) -> ExperimentResult:
    alpha = float(cfg.opt("alpha", 0.01))
    samples = int(cfg.opt("samples", 20_000))
    cloud = int(cfg.opt("cloud", 200))
    h = float(cfg.opt("h", 0.5))
    cases = [(c, "quantile") for c in CANONICAL_CASES] + [(FAULT_CASE, "reflected")]

    def one(i):
        (name, params, kind), tau = cases[i]
        if name == "linear1d":
            base = {"b0": 0.5, "bx": -0.8, "bm": 0.4, "cx": 0.3, "cv": 0.4, "cm": -0.2,
                    "s0": 0.5, "sx": 0.4, "sv": 0.2, "lambda": 2.0}
            if params:
                base = {"lambda": params.get("lambda", 1.0), **{k: v for k, v in params.items() if k != "lambda"}}
            model = builtin_model(name, **base)
        else:
            model = builtin_model(name, **params)
        pts = _cloud(kind, init_rng(cfg.seed, i, tag=29), cloud, model.dim)
        rep = canonical_representation_check(model, pts, 0.0, h, samples, cfg.seed + i, alpha, tau)
        return name, params, kind, tau, rep

    res = map_reps(one, len(cases), cfg.threads)
    rows, metrics = [], []
    for i, (name, params, kind, tau, rep) in enumerate(res):
        rows.append({"case": i, "model": name, "measure": kind, "tau": tau, "p_value": rep["p_value"],
                     "pass": rep["pass"]})
        if tau == "quantile":
            metrics.append(Metric(f"case{i}_p_value", rep["p_value"], None, (alpha, 1.0)))
        else:
            metrics.append(Metric("fault_p_value", rep["p_value"], None, (0.0, alpha),
                                  passed=bool(rep["p_value"] < alpha)))
    return ExperimentResult("canonical-check", rows, ["case", "model", "measure", "tau", "p_value", "pass"], metrics)


# ---------------------------------------------------------------- model self-check

def model_verify(cfg: ExperimentConfig) -> ExperimentResult:
    model = cfg.build_model()
    samples = int(cfg.opt("samples", 100_000))
    rep = verify_model_consistency(model, samples, init_rng(cfg.seed, 0, tag=31))
    rows = [{"model": rep["model"], "max_rel_deviation": rep["max_rel_deviation"],
             "failures": ";".join(rep["failures"]), "pass": rep["pass"]}]
    metrics = [Metric("consistency", rep["max_rel_deviation"], None, (None, None), passed=rep["pass"])]
    return ExperimentResult("model-verify", rows, list(rows[0]), metrics)


EXPERIMENTS = {
    "simulate": simulate,
    "rate-study": rate_study,
    "sewing-check": sewing_check,
    "flow-check": flow_check,
    "lipschitz-check": lipschitz_check,
    "stability-check": stability_check,
    "canonical-check": canonical_check,
    "model-verify": model_verify,
}
