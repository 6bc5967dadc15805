"""Experiment runner: the robust BO loop over seeds, aggregation and output.

One step of the loop: fit the surrogate on everything seen so far, pick x_t
with the configured acquisition, let the environment draw c_t and the noisy
y_t, score x_t against the oracle, append. Contexts are exogenous: they are
drawn once per (seed, t) from the true law, so every algorithm run on a seed
sees the same c_1..c_T and is scored on the same oracle panel.
"""

import csv
import json
import logging
import time
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from acquisition import (
    AcquisitionProblem,
    AnalyticLipschitz,
    NumericLipschitz,
    gpucb_select,
    maximize,
    stableopt_context_box,
    stableopt_select,
    ucb_context_lipschitz,
)
from ambiguity import (
    AmbiguityModel,
    Constant,
    EmpiricalCenter,
    Explicit,
    InverseSqrt,
    ParametricCenter,
    ParametricDistribution,
    center_at,
    center_samples,
    correction_term,
    radius_at,
)
from config import (
    ConstantRadius,
    ExperimentConfig,
    ExplicitRadius,
    NormalCenter,
    UniformCenter,
)
from environments import Environment, get_environment, observe
from errors import InputError, NumericalError, OutputError
from kernel import KernelFamily, KernelSpec, lipschitz_constant
from optimizer import MultiStartConfig, PatternSearch
from regret import Diagnostics, RegretTrace, expected_values, instantaneous_regret, oracle_best
from surrogate import FixedBeta, TheoreticalBeta, beta, fit, information_gain, mean_norm_bound, update
from svg_output import save_landscape_svg, save_regret_svg


logger = logging.getLogger(__name__)

# Independent rng streams per seed.
CONTEXT_STREAM = 1
NOISE_STREAM = 2
CENTER_STREAM = 3

TRACE_FILE = "seed_{seed}.csv"
SUMMARY_FILE = "summary.csv"
TIMING_FILE = "timing.csv"


def library_version() -> str:
    try:
        return version("wdrbo")
    except PackageNotFoundError:
        return "0.1.0"


# Building blocks from a config


def build_kernel(config: ExperimentConfig, env: Environment, include_context: bool = True) -> KernelSpec:
    """Kernel on raw inputs equivalent to the configured one on the unit box.

    A stationary kernel with lengthscale ℓ on min-max normalized inputs is the
    same kernel with lengthscale ℓ·width on raw inputs.
    """
    bounds = np.vstack([env.x_bounds, env.c_bounds]) if include_context else env.x_bounds
    widths = bounds[:, 1] - bounds[:, 0]
    ell = np.atleast_1d(np.asarray(config.kernel.lengthscale, dtype=float))
    if ell.size == 1:
        ell = np.full(widths.size, ell[0])
    elif ell.size == env.dim_x + env.dim_c:
        ell = ell[: widths.size]
    else:
        raise InputError(
            f"kernel.lengthscale has {ell.size} entries, {env.name} has {env.dim_x + env.dim_c} dimensions"
        )
    raw = ell * np.where(widths > 0, widths, 1.0)
    return KernelSpec(KernelFamily(config.kernel.family), tuple(raw), config.kernel.output_scale)


def build_ambiguity(config: ExperimentConfig, env: Environment) -> AmbiguityModel:
    match config.ambiguity.center:
        case NormalCenter(normal=(mu, sigma)):
            center = ParametricCenter(ParametricDistribution("normal", (mu, sigma), dim=env.dim_c))
        case UniformCenter(uniform=(lo, hi)):
            center = ParametricCenter(ParametricDistribution("uniform", (lo, hi), dim=env.dim_c))
        case "empirical":
            center = EmpiricalCenter()
        case None:
            center = ParametricCenter(env.center) if env.center is not None else EmpiricalCenter()
    match config.ambiguity.radius:
        case ConstantRadius(constant=eps):
            radius = Constant(eps)
        case ExplicitRadius(explicit=radii):
            radius = Explicit(tuple(radii))
        case _:
            radius = InverseSqrt(config.ambiguity.radius.inv_sqrt)
    return AmbiguityModel(center=center, radius=radius, c_bounds=env.c_bounds)


def build_optimizer(config: ExperimentConfig) -> MultiStartConfig:
    opt = config.acquisition.optimizer
    return MultiStartConfig(
        n_starts=opt.starts,
        n_grid_per_dim=opt.grid,
        local_search=PatternSearch(max_iterations=opt.max_iterations, shrink=opt.shrink),
        rng_seed=opt.seed,
    )


def _beta_mode(config: ExperimentConfig):
    if config.acquisition.beta == "theoretical":
        return TheoreticalBeta()
    return FixedBeta(float(config.acquisition.beta))


def _lipschitz_mode(config: ExperimentConfig):
    if config.acquisition.lipschitz == "analytic":
        return AnalyticLipschitz()
    return NumericLipschitz(config.acquisition.lipschitz_grid)


def _empty_model(config: ExperimentConfig, kernel: KernelSpec, dim: int):
    return fit(
        kernel,
        np.zeros((0, dim)),
        np.zeros(0),
        lam=config.lam,
        noise=config.noise_bound,
        norm_bound=config.norm_bound,
        delta=config.delta,
        beta_mode=_beta_mode(config),
        dim=dim,
    )


def context_stream(env: Environment, T: int, seed: int) -> np.ndarray:
    """c_1..c_T for a seed, independent of the algorithm."""
    rng = np.random.default_rng([seed, CONTEXT_STREAM])
    return np.vstack([env.context_at(t).sample(rng, 1) for t in range(1, T + 1)])


def oracle_for(config: ExperimentConfig, env: Environment, t: int = 1):
    return oracle_best(
        env,
        t,
        x_grid_density=config.oracle.grid,
        mc_samples=config.oracle.mc_samples,
        rng_seed=config.oracle.seed,
    )


# The loop


def run_seed(config: ExperimentConfig, algo: str, seed: int, env: Environment | None = None) -> RegretTrace:
    """One full horizon of one algorithm on one seed."""
    env = env or get_environment(config.env, config.noise_std)
    contexts = context_stream(env, config.T, seed)
    noise_rng = np.random.default_rng([seed, NOISE_STREAM])
    center_rng = np.random.default_rng([seed, CENTER_STREAM])

    joint_kernel = build_kernel(config, env)
    kernel_lipschitz = lipschitz_constant(joint_kernel)
    context_aware = algo != "gpucb"
    kernel = joint_kernel if context_aware else build_kernel(config, env, include_context=False)
    dim = env.dim_x + env.dim_c if context_aware else env.dim_x
    ambiguity = build_ambiguity(config, env)
    optimizer = build_optimizer(config)
    lipschitz_mode = _lipschitz_mode(config)

    trace = RegretTrace(algo=algo, seed=seed, oracle=oracle_for(config, env))
    model = None
    pending = None

    for t in range(1, config.T + 1):
        oracle = trace.oracle if env.time_invariant else oracle_for(config, env, t)
        start = time.perf_counter()
        if model is None:
            model = _empty_model(config, kernel, dim)
        elif pending is not None:
            model = update(model, *pending)
        beta_t = beta(model, t)
        eps_t = radius_at(ambiguity, t)
        problem = None

        match algo:
            case "wdrbo" | "erbo":
                samples = center_samples(center_at(ambiguity, t), center_rng, config.acquisition.center_samples)
                problem = AcquisitionProblem(
                    model=model,
                    beta=beta_t,
                    x_bounds=env.x_bounds,
                    c_bounds=env.c_bounds,
                    center_samples=samples,
                    epsilon=eps_t if algo == "wdrbo" else 0.0,
                    lipschitz_mode=lipschitz_mode,
                    optimizer=optimizer,
                )
                x_t, _ = maximize(problem)
            case "stableopt":
                history = np.asarray(contexts[: t - 1])
                box = stableopt_context_box(history, env.c_bounds)
                x_t, _ = stableopt_select(
                    model, beta_t, env.x_bounds, box, optimizer, config.acquisition.stableopt_grid
                )
            case "gpucb":
                x_t, _ = gpucb_select(model, beta_t, env.x_bounds, optimizer)
            case _:
                raise InputError(f"unknown algorithm {algo!r}")
        elapsed_ms = 1000.0 * (time.perf_counter() - start)

        c_t = contexts[t - 1]
        y_t = observe(env, x_t, c_t, noise_rng)
        r_t = instantaneous_regret(env, x_t, oracle)
        trace.append(x_t, c_t, y_t, eps_t if algo == "wdrbo" else 0.0, r_t, elapsed_ms)

        bar_b = mean_norm_bound(model)
        trace.diagnostics.append(
            Diagnostics(
                t=t,
                beta=beta_t,
                bar_b=bar_b,
                info_gain=information_gain(model),
                lipschitz=ucb_context_lipschitz(problem, x_t) if problem is not None else float("nan"),
                rho=correction_term(bar_b, kernel_lipschitz, t),
            )
        )

        z_t = np.concatenate([x_t, c_t]) if context_aware else x_t
        pending = (z_t, y_t)
        ambiguity = ambiguity.with_context(c_t)

    return trace


SeedCallback = Callable[[str, int], None]


def _run_seed_job(job: tuple[ExperimentConfig, str, int]) -> RegretTrace | None:
    config, algo, seed = job
    try:
        return run_seed(config, algo, seed)
    except NumericalError as e:
        logger.error("%s seed %d aborted: %s", algo, seed, e)
        return None


def run(config: ExperimentConfig, algo: str | None = None, on_seed: SeedCallback | None = None) -> list[RegretTrace]:
    """All seeds of one algorithm. Seeds that fail numerically are dropped."""
    algo = algo or config.acquisition.algo
    return compare(config, [algo], on_seed)[algo]


def compare(
    config: ExperimentConfig, algos: list[str] | None = None, on_seed: SeedCallback | None = None
) -> dict[str, list[RegretTrace]]:
    """All seeds of several algorithms on shared context streams and panels.

    `on_seed(algo, seed)` is called before each seed runs (after it finishes
    when seeds run in worker processes).
    """
    algos = algos or config.algorithms
    jobs = [(config, algo, seed) for algo in algos for seed in config.seeds]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            # map yields in submission order, whatever order workers finish in.
            results = []
            for (_, algo, seed), trace in zip(jobs, pool.map(_run_seed_job, jobs)):
                if on_seed:
                    on_seed(algo, seed)
                results.append(trace)
    else:
        env = get_environment(config.env, config.noise_std)
        results = []
        for cfg, algo, seed in jobs:
            if on_seed:
                on_seed(algo, seed)
            try:
                results.append(run_seed(cfg, algo, seed, env))
            except NumericalError as e:
                logger.error("%s seed %d aborted: %s", algo, seed, e)
                results.append(None)

    traces: dict[str, list[RegretTrace]] = {algo: [] for algo in algos}
    for (_, algo, _), trace in zip(jobs, results):
        if trace is not None:
            traces[algo].append(trace)
    return traces


# Aggregation


def _mean_stderr(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and sample-std / sqrt(n) over axis 0; a single row has stderr 0."""
    mean = rows.mean(axis=0)
    if rows.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, rows.std(axis=0, ddof=1) / np.sqrt(rows.shape[0])


@dataclass
class SeriesSummary:
    """Mean ± standard error over seeds for one algorithm."""

    algo: str
    n_seeds: int
    mean_cum: np.ndarray
    stderr_cum: np.ndarray
    mean_inst: np.ndarray
    stderr_inst: np.ndarray
    time_mean: float
    time_stderr: float

    @property
    def horizon(self) -> int:
        return self.mean_cum.size


@dataclass
class RunSummary:
    series: dict[str, SeriesSummary]


def aggregate(traces: list[RegretTrace]) -> SeriesSummary:
    """Pointwise statistics over the seeds of one algorithm."""
    if not traces:
        raise InputError("cannot aggregate an empty set of traces")
    horizons = {trace.horizon for trace in traces}
    if len(horizons) != 1:
        raise InputError(f"traces have mismatched horizons {sorted(horizons)}")
    algos = {trace.algo for trace in traces}
    if len(algos) != 1:
        raise InputError(f"aggregate expects one algorithm, got {sorted(algos)}")
    mean_cum, stderr_cum = _mean_stderr(np.vstack([trace.cumulative() for trace in traces]))
    mean_inst, stderr_inst = _mean_stderr(np.vstack([trace.instantaneous() for trace in traces]))
    time_mean, time_stderr = _mean_stderr(np.array([[trace.total_seconds()] for trace in traces]))
    return SeriesSummary(
        algo=traces[0].algo,
        n_seeds=len(traces),
        mean_cum=mean_cum,
        stderr_cum=stderr_cum,
        mean_inst=mean_inst,
        stderr_inst=stderr_inst,
        time_mean=float(time_mean[0]),
        time_stderr=float(time_stderr[0]),
    )


def summarize(traces: dict[str, list[RegretTrace]]) -> RunSummary:
    """Aggregate every algorithm that kept at least one seed."""
    return RunSummary({algo: aggregate(group) for algo, group in traces.items() if group})


# Output


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e


def trace_rows(trace: RegretTrace, with_timing: bool) -> tuple[list[str], list[list[str]]]:
    dim_x = trace.steps[0].x.size if trace.steps else 0
    dim_c = trace.steps[0].c.size if trace.steps else 0
    header = (
        ["seed", "t"]
        + [f"x_{i}" for i in range(dim_x)]
        + [f"c_{i}" for i in range(dim_c)]
        + ["y", "eps", "r_inst", "r_cum", "elapsed_ms"]
    )
    rows = []
    for s in trace.steps:
        rows.append(
            [str(trace.seed), str(s.t)]
            + [_fmt(v) for v in s.x]
            + [_fmt(v) for v in s.c]
            + [_fmt(s.y), _fmt(s.eps), _fmt(s.r_inst), _fmt(s.r_cum)]
            + [_fmt(s.elapsed_ms if with_timing else 0.0)]
        )
    return header, rows


def emit(
    summary: RunSummary,
    traces: dict[str, list[RegretTrace]],
    outdir: str | Path,
    config: ExperimentConfig | None = None,
    aborted: dict[str, list[int]] | None = None,
) -> list[Path]:
    """Write per-seed traces, the summary, timing, plots and meta.json."""
    if not summary.series or not any(traces.values()):
        raise InputError("nothing to emit: the trace set is empty")
    outdir = Path(outdir)
    with_timing = bool(config and config.timing_in_trace)
    written: list[Path] = []
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create output directory {outdir}: {e}") from e

    for algo, group in traces.items():
        algo_dir = outdir / algo
        try:
            algo_dir.mkdir(exist_ok=True)
        except OSError as e:
            raise OutputError(f"cannot create output directory {algo_dir}: {e}") from e
        for trace in group:
            path = algo_dir / TRACE_FILE.format(seed=trace.seed)
            _write_csv(path, *trace_rows(trace, with_timing))
            written.append(path)

            path = algo_dir / f"seed_{trace.seed}.diag.csv"
            _write_csv(
                path,
                ["seed", "t", "beta", "bar_b", "info_gain", "lipschitz", "rho"],
                [
                    [str(trace.seed), str(d.t), _fmt(d.beta), _fmt(d.bar_b), _fmt(d.info_gain), _fmt(d.lipschitz), _fmt(d.rho)]
                    for d in trace.diagnostics
                ],
            )
            written.append(path)

            path = algo_dir / f"seed_{trace.seed}.elapsed.csv"
            _write_csv(path, ["t", "elapsed_ms"], [[str(s.t), _fmt(s.elapsed_ms)] for s in trace.steps])
            written.append(path)

    rows = []
    for algo, s in summary.series.items():
        for i in range(s.horizon):
            rows.append(
                [algo, str(i + 1), str(s.n_seeds), _fmt(s.mean_cum[i]), _fmt(s.stderr_cum[i]), _fmt(s.mean_inst[i]), _fmt(s.stderr_inst[i])]
            )
    path = outdir / SUMMARY_FILE
    _write_csv(path, ["algo", "t", "n_seeds", "mean_r_cum", "stderr_r_cum", "mean_r_inst", "stderr_r_inst"], rows)
    written.append(path)

    path = outdir / TIMING_FILE
    _write_csv(
        path,
        ["algo", "n_seeds", "mean_seconds", "stderr_seconds"],
        [[algo, str(s.n_seeds), _fmt(s.time_mean), _fmt(s.time_stderr)] for algo, s in summary.series.items()],
    )
    written.append(path)

    title = config.env if config else ""
    path = outdir / "regret.svg"
    save_regret_svg({a: (s.mean_cum, s.stderr_cum) for a, s in summary.series.items()}, path, title=title)
    written.append(path)
    path = outdir / "instant.svg"
    save_regret_svg(
        {a: (s.mean_inst, s.stderr_inst) for a, s in summary.series.items()},
        path,
        ylabel="Instantaneous expected regret",
        title=title,
    )
    written.append(path)

    env = get_environment(config.env, config.noise_std) if config else None
    meta = {
        "version": library_version(),
        "created": datetime.now(timezone.utc).isoformat(),
        "config": config.resolved() if config else None,
        "context_law": env.true_context.describe() if env else None,
        "aborted_seeds": aborted or {},
    }
    path = outdir / "meta.json"
    try:
        path.write_text(json.dumps(meta, indent=2) + "\n")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    written.append(path)
    return written


def load_summary(outdir: str | Path) -> RunSummary:
    """Read summary.csv and timing.csv back into a RunSummary."""
    outdir = Path(outdir)
    columns: dict[str, dict[str, list]] = {}
    try:
        with open(outdir / SUMMARY_FILE, newline="") as f:
            for row in csv.DictReader(f):
                col = columns.setdefault(row["algo"], {"n": int(row["n_seeds"]), "rows": []})
                col["rows"].append(
                    [float(row[k]) for k in ("mean_r_cum", "stderr_r_cum", "mean_r_inst", "stderr_r_inst")]
                )
        with open(outdir / TIMING_FILE, newline="") as f:
            timing = {row["algo"]: row for row in csv.DictReader(f)}
    except OSError as e:
        raise OutputError(f"cannot read summary from {outdir}: {e}") from e

    series = {}
    for algo, col in columns.items():
        data = np.array(col["rows"])
        series[algo] = SeriesSummary(
            algo=algo,
            n_seeds=col["n"],
            mean_cum=data[:, 0],
            stderr_cum=data[:, 1],
            mean_inst=data[:, 2],
            stderr_inst=data[:, 3],
            time_mean=float(timing[algo]["mean_seconds"]),
            time_stderr=float(timing[algo]["stderr_seconds"]),
        )
    return RunSummary(series)


def aborted_seeds(config: ExperimentConfig, traces: dict[str, list[RegretTrace]]) -> dict[str, list[int]]:
    return {
        algo: sorted(set(config.seeds) - {trace.seed for trace in group}) for algo, group in traces.items()
    }


# Oracle table and landscape


def oracle_table(config: ExperimentConfig) -> list[tuple[int, np.ndarray, float]]:
    """(t, x*_t, E[f(x*_t, c)]) rows; a time-invariant environment gives one row."""
    env = get_environment(config.env, config.noise_std)
    steps = [1] if env.time_invariant else range(1, config.T + 1)
    rows = []
    for t in steps:
        result = oracle_for(config, env, t)
        rows.append((t, result.x, result.value))
    return rows


@dataclass
class Landscape:
    x: np.ndarray
    curves: dict[str, np.ndarray]
    optima: dict[str, tuple[float, float]]


def landscape(config: ExperimentConfig, n_points: int = 401) -> Landscape:
    """f at the centre's mean context and its expectations under the centre and the truth.

    Needs a one-dimensional decision and context. A learner without a
    parametric centre is drawn against the true law alone.
    """
    env = get_environment(config.env, config.noise_std)
    if env.dim_x != 1 or env.dim_c != 1:
        raise InputError(f"landscape needs d_x = d_c = 1, {env.name} has {env.dim_x} and {env.dim_c}")
    x = np.linspace(env.x_bounds[0, 0], env.x_bounds[0, 1], n_points)
    X = x[:, None]
    truth = oracle_for(config, env)

    laws: dict[str, np.ndarray] = {}
    match build_ambiguity(config, env).center:
        case ParametricCenter(distribution=distribution):
            panel = distribution.sample(np.random.default_rng([config.oracle.seed, CENTER_STREAM]), config.oracle.mc_samples)
            mean_context = distribution.mean()
            laws["expected under centre"] = panel
        case _:
            mean_context = env.true_context.mean()
    laws["expected under truth"] = truth.panel

    curves = {"f at mean context": env.evaluate(X, np.repeat(np.atleast_2d(mean_context), n_points, axis=0))}
    optima = {}
    for label, panel in laws.items():
        values = expected_values(env, X, panel)
        curves[label] = values
        best = int(np.argmax(values))
        optima[label] = (float(x[best]), float(values[best]))
    return Landscape(x=x, curves=curves, optima=optima)


def emit_landscape(config: ExperimentConfig, path: str | Path) -> Path:
    view = landscape(config)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create output directory {path.parent}: {e}") from e
    save_landscape_svg(view.x, view.curves, view.optima, path, title=config.env)
    return path
