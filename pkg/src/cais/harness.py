"""Config-driven experiment suites: parse INI specs, run seeded Monte
Carlo replicates (optionally across worker processes), and emit CSVs.

Outputs are deterministic for a given (config, seed): replicate results
are merged in replicate order no matter how workers schedule them, floats
are serialized with repr (shortest round-trip form), and the manifest
carries no timestamps.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .adaptation import AdaptationConfig
from .diagnostics import MetricRecord, mse_of_mean, self_normalized_estimate, z_estimate
from .distributions import TargetModel, make_example1_target, make_example2_target
from .errors import (
    AllWeightsZeroError,
    BudgetExceededError,
    InvalidConstraintError,
    ParseError,
)
from .rng import SeedStreams, target_rng
from .samplers import SamplerOutput, basic_ais_run, cais_run, npmc_baseline_run

SECTION = "experiment"

CONFIG_KEYS = (
    "preset",
    "sampler",
    "transform",
    "dimension",
    "D",
    "N",
    "I",
    "n_t",
    "sigma",
    "runs",
    "seed",
    "kl_direction",
    "mean_center",
    "gamma_eps",
    "budget",
    # extras beyond the core interface
    "output_path",
    "init",
    "init_mean",
    "init_low",
    "init_high",
    "estimator_pool",
    "jitter0",
    "fallback",
)

_ENUMS = {
    "preset": {"example1": "example1", "example2": "example2", "custom": "custom"},
    "sampler": {"cais": "cais", "basicais": "basic_ais", "npmcstyle": "npmc_style"},
    "transform": {"clip": "clip", "temper": "temper"},
    "kl_direction": {
        "targetproposal": "target_proposal",
        "proposaltarget": "proposal_target",
    },
    "mean_center": {
        "weightedmean": "weighted_mean",
        "samplingmean": "sampling_mean",
    },
    "init": {"fixed": "fixed", "uniform": "uniform"},
    "estimator_pool": {"all": "all", "last": "last"},
    "fallback": {"keepprevious": "keep_previous", "repair": "repair"},
}

_COMMON_DEFAULTS = {
    "sampler": "cais",
    "transform": "temper",
    "kl_direction": "target_proposal",
    "mean_center": "weighted_mean",
    "seed": "7",
    "budget": "1000000000",
    "output_path": "out",
    "estimator_pool": "all",
    "fallback": "keep_previous",
}

_PRESET_DEFAULTS = {
    "example1": {
        "dimension": "10",
        "D": "1",
        "N": "500",
        "I": "50",
        "n_t": "50",
        "sigma": "2",
        "runs": "20",
        "init": "fixed",
        "init_mean": "0",
    },
    "example2": {
        "dimension": "10",
        "D": "25",
        "N": "400",
        "I": "40",
        "n_t": "0.1",
        "sigma": "1",
        "runs": "25",
        "init": "uniform",
        "init_low": "-10",
        "init_high": "10",
    },
    "custom": {
        "dimension": "10",
        "D": "1",
        "N": "500",
        "I": "50",
        "n_t": "50",
        "sigma": "2",
        "runs": "10",
        "init": "fixed",
        "init_mean": "0",
    },
}

PRESET_TEXTS = {
    name: "[experiment]\npreset = {}\n".format(name)
    + "".join(f"{k} = {v}\n" for k, v in sorted(values.items()))
    + "".join(f"{k} = {v}\n" for k, v in sorted(_COMMON_DEFAULTS.items()))
    for name, values in _PRESET_DEFAULTS.items()
}


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully resolved experiment: every field concrete and validated."""

    preset: str
    sampler: str
    transform: str
    dimension: int
    D: int
    N: int
    I: int
    n_t: int
    sigma: float
    runs: int
    seed: int
    kl_direction: str
    mean_center: str
    gamma_eps: float
    budget: int
    output_path: str
    init: str
    init_mean: float
    init_low: float
    init_high: float
    estimator_pool: str
    jitter0: Optional[float]
    fallback: str

    @property
    def evaluations(self) -> int:
        return self.N * self.D * self.I * self.runs


def _canon(key: str, raw: str) -> str:
    table = _ENUMS[key]
    folded = raw.strip().lower().replace("-", "").replace("_", "")
    if folded not in table:
        raise ParseError(
            f"key {key!r}: unknown value {raw!r} (accepted: "
            f"{', '.join(sorted(set(table.values())))})"
        )
    return table[folded]


def _to_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ParseError(f"key {key!r}: expected an integer, got {raw!r}") from exc


def _to_float(key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError as exc:
        raise ParseError(f"key {key!r}: expected a number, got {raw!r}") from exc
    if not np.isfinite(value):
        raise ParseError(f"key {key!r}: value must be finite, got {raw!r}")
    return value


def read_config(path) -> dict:
    """Read the [experiment] section of an INI file into a raw string map."""
    text = Path(path).read_text()
    return read_config_text(text)


def read_config_text(text: str) -> dict:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ParseError(f"malformed config: {exc}") from exc
    if SECTION not in parser:
        raise ParseError(f"config must contain an [{SECTION}] section")
    raw = dict(parser[SECTION])
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise ParseError(
            f"unknown config keys: {', '.join(unknown)} "
            f"(accepted: {', '.join(CONFIG_KEYS)})"
        )
    return raw


def resolve_spec(raw: dict, overrides: Optional[dict] = None) -> ExperimentSpec:
    """Fill preset defaults, apply overrides, coerce and validate every field."""
    merged = dict(raw)
    if overrides:
        merged.update({k: str(v) for k, v in overrides.items() if v is not None})
    preset = _canon("preset", merged.get("preset", "custom"))
    values = dict(_COMMON_DEFAULTS)
    values.update(_PRESET_DEFAULTS[preset])
    values.update(merged)
    values["preset"] = preset

    dimension = _to_int("dimension", values["dimension"])
    big_d = _to_int("D", values["D"])
    big_n = _to_int("N", values["N"])
    big_i = _to_int("I", values["I"])
    runs = _to_int("runs", values["runs"])
    seed = _to_int("seed", values["seed"])
    budget = _to_int("budget", values["budget"])
    sigma = _to_float("sigma", values["sigma"])
    for key, val in (
        ("dimension", dimension),
        ("D", big_d),
        ("N", big_n),
        ("I", big_i),
        ("runs", runs),
        ("budget", budget),
    ):
        if val < 1:
            raise InvalidConstraintError(f"key {key!r} must be >= 1, got {val}")
    if sigma <= 0:
        raise InvalidConstraintError(f"sigma must be positive, got {sigma}")
    if seed < 0:
        raise InvalidConstraintError(f"seed must be a nonnegative integer, got {seed}")

    n_t = _resolve_n_t(values["n_t"], dimension, big_n)

    gamma_eps_raw = values.get("gamma_eps")
    if gamma_eps_raw is None:
        gamma_eps = max(1.0, 0.01 * big_n)
    else:
        gamma_eps = _to_float("gamma_eps", gamma_eps_raw)
        if gamma_eps <= 0:
            raise InvalidConstraintError("gamma_eps must be positive")

    jitter0_raw = values.get("jitter0")
    jitter0 = None if jitter0_raw is None else _to_float("jitter0", jitter0_raw)
    if jitter0 is not None and jitter0 <= 0:
        raise InvalidConstraintError("jitter0 must be positive")

    init = _canon("init", values["init"])
    init_mean = _to_float("init_mean", values.get("init_mean", "0"))
    init_low = _to_float("init_low", values.get("init_low", "-10"))
    init_high = _to_float("init_high", values.get("init_high", "10"))
    if init == "uniform" and init_low >= init_high:
        raise InvalidConstraintError(
            f"init range must satisfy init_low < init_high, "
            f"got [{init_low}, {init_high}]"
        )

    return ExperimentSpec(
        preset=preset,
        sampler=_canon("sampler", values["sampler"]),
        transform=_canon("transform", values["transform"]),
        dimension=dimension,
        D=big_d,
        N=big_n,
        I=big_i,
        n_t=n_t,
        sigma=sigma,
        runs=runs,
        seed=seed,
        kl_direction=_canon("kl_direction", values["kl_direction"]),
        mean_center=_canon("mean_center", values["mean_center"]),
        gamma_eps=gamma_eps,
        budget=budget,
        output_path=str(values["output_path"]),
        init=init,
        init_mean=init_mean,
        init_low=init_low,
        init_high=init_high,
        estimator_pool=_canon("estimator_pool", values["estimator_pool"]),
        jitter0=jitter0,
        fallback=_canon("fallback", values["fallback"]),
    )


def _resolve_n_t(raw: str, dimension: int, big_n: int) -> int:
    value = _to_float("n_t", raw)
    if 0 < value < 1:
        n_t = int(round(value * big_n))
    elif value >= 1 and float(value).is_integer():
        n_t = int(value)
    else:
        raise ParseError(
            f"key 'n_t': expected an integer >= 1 or a fraction in (0, 1), got {raw!r}"
        )
    if not dimension < n_t < big_n:
        raise InvalidConstraintError(
            f"n_t={n_t} violates the threshold constraint "
            f"dimension < n_t < N ({dimension} < {n_t} < {big_n})"
        )
    return n_t


def parse_spec(path) -> ExperimentSpec:
    """Load and fully resolve an experiment config file."""
    return resolve_spec(read_config(path))


def make_target(spec: ExperimentSpec) -> TargetModel:
    """Draw the suite's target once, from the dedicated target stream.

    The draw depends only on (seed, dimension, preset), so every sampler
    run under one seed faces the identical target.
    """
    rng = target_rng(spec.seed)
    if spec.preset == "example2":
        return make_example2_target(rng, spec.dimension)
    return make_example1_target(rng, spec.dimension)


def _adaptation_config(spec: ExperimentSpec, transform: str) -> AdaptationConfig:
    return AdaptationConfig(
        n_t=spec.n_t,
        transform=transform,
        gamma_eps=spec.gamma_eps,
        mean_center=spec.mean_center,
        jitter0=spec.jitter0,
        fallback=spec.fallback,
    )


def run_replicate(spec: ExperimentSpec, target: TargetModel, run_id: int) -> SamplerOutput:
    """One seeded replicate of the configured sampler."""
    streams = SeedStreams(spec.seed, run_id)
    if spec.sampler == "cais":
        cfg = _adaptation_config(spec, spec.transform)
        return cais_run(spec, target, cfg, streams, spec.kl_direction)
    if spec.sampler == "basic_ais":
        cfg = _adaptation_config(spec, "direct")
        return basic_ais_run(
            spec, target, streams, spec.kl_direction, base_cfg=cfg
        )
    cfg = _adaptation_config(spec, "npmc_clip")
    return npmc_baseline_run(
        spec, target, spec.n_t, streams, spec.kl_direction, base_cfg=cfg
    )


@dataclass
class ReplicateResult:
    """Per-replicate digest kept after the raw pairs are discarded."""

    run_id: int
    records: list
    estimate: Optional[np.ndarray]
    z_hat: float
    kl_initial: Optional[float]
    kl_final: Optional[float]
    min_eig_final: float
    repair_events: int
    degenerate_batches: int
    mse: Optional[float] = None


def _mean_kl(records: list, iteration: int) -> Optional[float]:
    kls = [
        r.kl_to_target
        for r in records
        if r.iteration == iteration and r.kl_to_target is not None
    ]
    if not kls:
        return None
    return float(np.mean(kls))


def _digest_replicate(
    spec: ExperimentSpec, target: TargetModel, run_id: int
) -> ReplicateResult:
    output = run_replicate(spec, target, run_id)
    if spec.estimator_pool == "last":
        tail = spec.D * spec.N
        pool_x = output.samples[-tail:]
        pool_lw = output.log_weights[-tail:]
    else:
        pool_x = output.samples
        pool_lw = output.log_weights

    try:
        estimate = np.atleast_1d(self_normalized_estimate(pool_x, pool_lw))
    except AllWeightsZeroError:
        estimate = None
    z_hat = z_estimate(pool_lw, pool_lw.shape[0])

    records = [replace(r, run_id=run_id) for r in output.records]
    final_recs = [r for r in records if r.iteration == spec.I]
    min_eig_final = min(r.min_eig for r in final_recs)
    mse = None
    if estimate is not None and target.truth is not None:
        mse = mse_of_mean([estimate], target.truth.mean)
    return ReplicateResult(
        run_id=run_id,
        records=records,
        estimate=estimate,
        z_hat=z_hat,
        kl_initial=_mean_kl(records, 1),
        kl_final=_mean_kl(records, spec.I),
        min_eig_final=min_eig_final,
        repair_events=sum(1 for r in records if r.repair_event),
        degenerate_batches=sum(1 for r in records if r.degenerate),
        mse=mse,
    )


def _replicate_task(spec: ExperimentSpec, run_id: int) -> ReplicateResult:
    # Worker-process entry point: rebuilds the (deterministic) target
    # locally instead of pickling density closures across the boundary.
    return _digest_replicate(spec, make_target(spec), run_id)


@dataclass
class SuiteResult:
    """All replicate digests plus suite-level aggregates and file paths."""

    spec: ExperimentSpec
    truth_mean: Optional[np.ndarray]
    replicates: list
    mse_mean: Optional[float]
    z_hat_mean: float
    kl_initial_mean: Optional[float]
    kl_final_mean: Optional[float]
    min_eig_final_median: float
    repair_events: int
    degenerate_batches: int
    out_dir: Optional[Path] = None


def compute_suite(spec: ExperimentSpec, workers: int = 1) -> SuiteResult:
    """Run all replicates (optionally in parallel) and aggregate.

    Raises
    ------
    BudgetExceededError
        Before any sampling when N*D*I*runs exceeds spec.budget.
    """
    if spec.evaluations > spec.budget:
        raise BudgetExceededError(
            f"suite needs {spec.evaluations} target evaluations, "
            f"budget is {spec.budget}"
        )
    target = make_target(spec)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_replicate_task, spec, r) for r in range(spec.runs)
            ]
            results = [f.result() for f in futures]
    else:
        results = [_digest_replicate(spec, target, r) for r in range(spec.runs)]
    results.sort(key=lambda res: res.run_id)

    mses = [res.mse for res in results if res.mse is not None]
    z_hats = [res.z_hat for res in results]
    kl_inits = [res.kl_initial for res in results if res.kl_initial is not None]
    kl_finals = [res.kl_final for res in results if res.kl_final is not None]
    return SuiteResult(
        spec=spec,
        truth_mean=None if target.truth is None else target.truth.mean,
        replicates=results,
        mse_mean=float(np.mean(mses)) if mses else None,
        z_hat_mean=float(np.mean(z_hats)),
        kl_initial_mean=float(np.mean(kl_inits)) if kl_inits else None,
        kl_final_mean=float(np.mean(kl_finals)) if kl_finals else None,
        min_eig_final_median=float(
            np.median([res.min_eig_final for res in results])
        ),
        repair_events=sum(res.repair_events for res in results),
        degenerate_batches=sum(res.degenerate_batches for res in results),
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _iterations_csv(result: SuiteResult) -> str:
    buf = io.StringIO()
    buf.write("run,iter,component,ess,branch,gamma,kl,min_eig\n")
    for res in result.replicates:
        for r in res.records:
            buf.write(
                f"{r.run_id},{r.iteration},{r.component},{_fmt(r.ess)},"
                f"{r.branch},{_fmt(r.gamma)},{_fmt(r.kl_to_target)},"
                f"{_fmt(r.min_eig)}\n"
            )
    return buf.getvalue()


def _summary_csv(result: SuiteResult) -> str:
    buf = io.StringIO()
    buf.write(
        "run,mse_mean,z_hat,kl_initial,kl_final,min_eig_final,"
        "repair_events,degenerate_batches\n"
    )
    for res in result.replicates:
        buf.write(
            f"{res.run_id},{_fmt(res.mse)},{_fmt(res.z_hat)},"
            f"{_fmt(res.kl_initial)},{_fmt(res.kl_final)},"
            f"{_fmt(res.min_eig_final)},{res.repair_events},"
            f"{res.degenerate_batches}\n"
        )
    buf.write(
        f"all,{_fmt(result.mse_mean)},{_fmt(result.z_hat_mean)},"
        f"{_fmt(result.kl_initial_mean)},{_fmt(result.kl_final_mean)},"
        f"{_fmt(result.min_eig_final_median)},{result.repair_events},"
        f"{result.degenerate_batches}\n"
    )
    return buf.getvalue()


def spec_lines(spec: ExperimentSpec) -> str:
    # output_path is excluded: the manifest identifies the experiment,
    # not the directory it landed in.
    return "".join(
        f"{f.name}={_fmt(getattr(spec, f.name))}\n"
        for f in sorted(fields(spec), key=lambda f: f.name)
        if f.name != "output_path"
    )


def _manifest(spec: ExperimentSpec) -> str:
    body = spec_lines(spec)
    digest = hashlib.sha256(body.encode()).hexdigest()
    return (
        f"version={__version__}\n"
        f"seed={spec.seed}\n"
        f"spec_sha256={digest}\n"
        f"evaluations={spec.evaluations}\n"
        f"{body}"
    )


def run_suite(
    spec: ExperimentSpec, workers: int = 1, out_dir=None
) -> SuiteResult:
    """Compute the suite and write iterations.csv, summary.csv, manifest.txt."""
    result = compute_suite(spec, workers=workers)
    out = Path(out_dir) if out_dir is not None else Path(spec.output_path)
    out.mkdir(parents=True, exist_ok=True)
    (out / "iterations.csv").write_text(_iterations_csv(result))
    (out / "summary.csv").write_text(_summary_csv(result))
    (out / "manifest.txt").write_text(_manifest(spec))
    result.out_dir = out
    return result


SWEEP_PARAMETERS = ("sigma", "n_t", "D", "transform", "sampler")


def _method_label(spec: ExperimentSpec) -> str:
    if spec.sampler == "cais":
        return f"cais-{spec.transform}"
    return spec.sampler


def sweep(
    raw: dict,
    parameter: str,
    values: list,
    overrides: Optional[dict] = None,
    workers: int = 1,
) -> Path:
    """Run one suite per parameter value; accumulate a cross-method table.

    Writes each suite under <out>/<parameter>-<value>/ and appends one row
    per swept method to <out>/sweep.csv (rows: method label; columns: the
    swept values; cells: suite mean MSE). Re-running with another sampler
    and the same values grows the table one row at a time.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ParseError(
            f"sweep parameter must be one of {', '.join(SWEEP_PARAMETERS)}"
        )
    if not values:
        raise ParseError("sweep needs at least one value")
    base = resolve_spec(raw, overrides)
    out_root = Path(base.output_path)
    out_root.mkdir(parents=True, exist_ok=True)

    cells = []
    labels = set()
    for value in values:
        sub_overrides = dict(overrides or {})
        sub_overrides[parameter] = value
        sub_overrides["output_path"] = str(out_root / f"{parameter}-{value}")
        spec = resolve_spec(raw, sub_overrides)
        result = run_suite(spec, workers=workers)
        labels.add(_method_label(spec))
        cells.append(_fmt(result.mse_mean))

    if parameter in ("sampler", "transform"):
        label = "sweep"
    else:
        label = _method_label(base) if len(labels) > 1 else labels.pop()
    header = "method," + ",".join(str(v) for v in values) + "\n"
    row = label + "," + ",".join(cells) + "\n"

    table = out_root / "sweep.csv"
    if table.exists():
        existing = table.read_text()
        if existing.startswith(header):
            table.write_text(existing + row)
            return table
    table.write_text(header + row)
    return table
