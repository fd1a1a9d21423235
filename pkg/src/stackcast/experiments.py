"""Monte Carlo harness: experiment configs, deterministic parallel runs, CSV.

Each (n, r2) cell runs a fixed number of replications. A replication owns
its RNG streams, derived from (base_seed, cell index, replication index),
so results are independent of the parallelism degree; losses are
accumulated in replication order after the parallel gather.

Desk-scale defaults (200 replications, 20-point grids) stand in for the
reference design's 10,000 replications and denser grids; the full-scale
values are one flag away.
"""

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from .crossval import CvScheme
from .data import DgpConfig, generate
from .models import (
    CandidateSpec,
    GPrior,
    IsoNormalLogistic,
    IsotropicNormal,
    MultiT,
)
from .stack import (
    LossRatioAccumulator,
    candidate_predictions,
    fit_stack,
    predict,
)

CSV_HEADER = (
    "family,prior_family,n,r2,replications,ratio,mc_se,"
    "mean_stacked_loss,mean_best_loss,wall_seconds"
)
ORACLE_SLACK_SCALE = 1e-9


def default_threads() -> int:
    raw = os.environ.get("STACKCAST_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"STACKCAST_THREADS must be an integer, got {raw!r}")
    return max(value, 1)


@dataclass(frozen=True)
class GridSpec:
    """Candidate grid: g/gamma/lambda ranges or a T-prior nu list.

    Scalar grids are equally spaced between lo and hi, linearly by default
    (spacing="log" switches to log spacing). The T grid carries the nu list
    plus a scale parameter, optionally resolved per r2 value.
    """

    kind: str
    lo: float = 0.0
    hi: float = 0.0
    count: int = 0
    spacing: str = "linear"
    nus: tuple = ()
    lam: float = 1.0
    lam_by_r2: dict | None = None

    def __post_init__(self):
        if self.kind not in ("g", "gamma", "lambda", "t"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.kind == "t":
            if not self.nus:
                raise ValueError("t grid needs a nonempty nu list")
            if any(nu <= 0 for nu in self.nus):
                raise ValueError("degrees of freedom must be positive")
        else:
            if self.count < 1:
                raise ValueError("grid needs count >= 1")
            if not 0.0 < self.lo <= self.hi:
                raise ValueError("grid needs 0 < lo <= hi")
            if self.spacing not in ("linear", "log"):
                raise ValueError("spacing must be linear or log")

    def values(self) -> np.ndarray:
        if self.kind == "t":
            return np.asarray(self.nus, dtype=np.float64)
        if self.spacing == "log":
            return np.logspace(np.log10(self.lo), np.log10(self.hi), self.count)
        return np.linspace(self.lo, self.hi, self.count)

    def scale_for(self, r2: float) -> float:
        if self.lam_by_r2 is None:
            return self.lam
        for key, value in self.lam_by_r2.items():
            if abs(key - r2) <= 1e-9:
                return value
        raise KeyError(f"no T-prior scale configured for r2 = {r2}")


def build_candidates(grid: GridSpec, family: str, p_fit: int, sigma2: float,
                     r2: float) -> list:
    """Materialize the candidate list for one grid at one r2 value."""
    if grid.kind == "g":
        if family != "linear":
            raise ValueError("g grids define linear-family candidates")
        return [
            CandidateSpec("linear", GPrior(float(g)), sigma2, f"g={g:.6g}")
            for g in grid.values()
        ]
    if grid.kind == "gamma":
        if family != "linear":
            raise ValueError("gamma grids define linear-family candidates")
        return [
            CandidateSpec("linear", IsotropicNormal(float(v)), sigma2,
                          f"gamma2={v:.6g}")
            for v in grid.values()
        ]
    if grid.kind == "lambda":
        if family != "logistic":
            raise ValueError("lambda grids define logistic-family candidates")
        return [
            CandidateSpec("logistic", IsoNormalLogistic(float(v)), 1.0,
                          f"lambda={v:.6g}")
            for v in grid.values()
        ]
    # T-prior candidates need an iterative fit and a per-point refit CV path
    # that only the logistic pipeline provides
    if family != "logistic":
        raise ValueError("t grids define logistic-family candidates")
    lam = grid.scale_for(r2)
    scale = lam * np.eye(p_fit)
    return [
        CandidateSpec("logistic", MultiT(float(nu), scale), 1.0, f"nu={nu:.6g}")
        for nu in grid.values()
    ]


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one Monte Carlo experiment."""

    family: str
    grid: GridSpec
    n_values: tuple = (50, 100)
    r2_grid: tuple = ()
    replications: int = 200
    folds: int = 10
    test_size: int = 500
    base_seed: int = 0
    parallelism: int = 0
    q: int = 1000
    p_fit: int = 14
    sigma2: float = 1.0
    record_timing: bool = True

    def __post_init__(self):
        if self.family not in ("linear", "logistic"):
            raise ValueError(f"unknown family {self.family!r}")
        if not self.n_values or not self.r2_grid:
            raise ValueError("n_values and r2_grid must be nonempty")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.parallelism < 0:
            raise ValueError("parallelism must be >= 0 (0 = env default)")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "r2_grid", tuple(float(r) for r in self.r2_grid))

    @property
    def workers(self) -> int:
        return self.parallelism if self.parallelism > 0 else default_threads()


def linear_defaults(**overrides) -> ExperimentConfig:
    """Desk-scale linear experiment: 20-point g grid on [1e-2, 1e3]."""
    cfg = ExperimentConfig(
        family="linear",
        grid=GridSpec(kind="g", lo=1e-2, hi=1e3, count=20),
        r2_grid=tuple(np.round(np.arange(0.2, 0.81, 0.1), 10)),
    )
    return replace(cfg, **overrides) if overrides else cfg


def logistic_defaults(**overrides) -> ExperimentConfig:
    """Desk-scale logistic experiment: 20-point lambda grid on [1e-3, 10]."""
    cfg = ExperimentConfig(
        family="logistic",
        grid=GridSpec(kind="lambda", lo=1e-3, hi=10.0, count=20),
        r2_grid=tuple(np.round(np.arange(0.2, 0.71, 0.1), 10)),
    )
    return replace(cfg, **overrides) if overrides else cfg


@dataclass(frozen=True)
class ResultRow:
    """Aggregated outcome of one (n, r2) cell."""

    family: str
    prior_family: str
    n: int
    r2: float
    replications: int
    ratio: float
    mc_se: float
    mean_stacked_loss: float
    mean_best_loss: float
    wall_seconds: float
    oracle_ok: int = 0
    error_count: int = 0


@dataclass(frozen=True)
class ExperimentResult:
    rows: tuple

    @property
    def total_replications(self) -> int:
        return sum(row.replications for row in self.rows)

    @property
    def total_oracle_ok(self) -> int:
        return sum(row.oracle_ok for row in self.rows)


def _replication_task(task):
    (family, n, q, p_fit, sigma2, r2, test_size, grid, folds,
     data_seed, fold_seed) = task
    try:
        dgp = DgpConfig(family=family, n=n, r2=r2, q=q, p_fit=p_fit,
                        sigma2=sigma2, seed=data_seed)
        train, test = generate(dgp, test_size=test_size)
        specs = build_candidates(grid, family, p_fit, sigma2, r2)
        if family == "linear":
            scheme = CvScheme("loo_closed_form")
        else:
            scheme = CvScheme("kfold", folds=folds, seed=fold_seed)
        model = fit_stack(train, specs, scheme)
        stacked = predict(model, test.x)
        best = candidate_predictions(model, test.x)[:, model.best_index]
        stacked_loss = float(np.sum((test.truth - stacked) ** 2))
        best_loss = float(np.sum((test.truth - best) ** 2))
        slack = ORACLE_SLACK_SCALE * (1.0 + float(np.sum(model.cv_errors)))
        ok = model.weights.objective <= model.cv_errors[model.best_index] + slack
        return stacked_loss, best_loss, bool(ok), None
    except Exception as exc:
        return float("nan"), float("nan"), False, f"{type(exc).__name__}: {exc}"


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every (n, r2) cell; deterministic for a fixed base_seed.

    A cell aborts only when more than 1% of its replications error; below
    that the failing replications are dropped from the averages and counted
    in the row's error_count.
    """
    rows = []
    cells = list(product(config.n_values, config.r2_grid))
    workers = config.workers
    for cell_index, (n, r2) in enumerate(cells):
        t0 = time.perf_counter()
        tasks = []
        for rep in range(config.replications):
            ss = np.random.SeedSequence((config.base_seed, cell_index, rep))
            state = ss.generate_state(2, np.uint64)
            tasks.append(
                (config.family, n, config.q, config.p_fit, config.sigma2,
                 r2, config.test_size, config.grid, config.folds,
                 int(state[0]), int(state[1]))
            )
        if workers > 1 and len(tasks) > 1:
            chunk = max(1, len(tasks) // (4 * workers))
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_replication_task, tasks, chunksize=chunk))
        else:
            results = [_replication_task(task) for task in tasks]
        failures = [err for *_ , err in results if err is not None]
        if len(failures) > 0.01 * config.replications:
            raise RuntimeError(
                f"cell (n={n}, r2={r2}): {len(failures)} of "
                f"{config.replications} replications failed; first: {failures[0]}"
            )
        acc = LossRatioAccumulator()
        ok_count = 0
        for stacked_loss, best_loss, ok, err in results:
            if err is None:
                acc.add(stacked_loss, best_loss)
                ok_count += int(ok)
        wall = time.perf_counter() - t0 if config.record_timing else 0.0
        rows.append(
            ResultRow(
                family=config.family,
                prior_family=config.grid.kind,
                n=n,
                r2=r2,
                replications=acc.count,
                ratio=acc.ratio,
                mc_se=acc.mc_se,
                mean_stacked_loss=acc.mean_stacked,
                mean_best_loss=acc.mean_best,
                wall_seconds=wall,
                oracle_ok=ok_count,
                error_count=len(failures),
            )
        )
    return ExperimentResult(rows=tuple(rows))


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def emit_csv(result: ExperimentResult, path):
    """Write the result table; fixed header, 10 significant digits, LF endings."""
    try:
        with open(path, "w", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            for row in result.rows:
                fh.write(
                    ",".join(
                        (
                            row.family,
                            row.prior_family,
                            str(row.n),
                            _fmt(row.r2),
                            str(row.replications),
                            _fmt(row.ratio),
                            _fmt(row.mc_se),
                            _fmt(row.mean_stacked_loss),
                            _fmt(row.mean_best_loss),
                            _fmt(row.wall_seconds),
                        )
                    )
                    + "\n"
                )
    except OSError as exc:
        raise OSError(f"cannot write result CSV to {path}: {exc}") from exc


def load_result_csv(path) -> ExperimentResult:
    """Parse a CSV written by emit_csv back into an ExperimentResult."""
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != 10:
                raise ValueError(f"{path}: malformed row {line!r}")
            rows.append(
                ResultRow(
                    family=parts[0],
                    prior_family=parts[1],
                    n=int(parts[2]),
                    r2=float(parts[3]),
                    replications=int(parts[4]),
                    ratio=float(parts[5]),
                    mc_se=float(parts[6]),
                    mean_stacked_loss=float(parts[7]),
                    mean_best_loss=float(parts[8]),
                    wall_seconds=float(parts[9]),
                )
            )
    return ExperimentResult(rows=tuple(rows))


_CONFIG_SCHEMA = {
    "family": str,
    "n_values": "int_list",
    "r2_grid": "float_list",
    "replications": int,
    "folds": int,
    "test_size": int,
    "base_seed": int,
    "parallelism": int,
    "q": int,
    "p_fit": int,
    "sigma2": float,
    "record_timing": "bool",
    "grid": str,
    "grid_min": float,
    "grid_max": float,
    "grid_count": int,
    "grid_spacing": str,
    "t_nus": "float_list",
    "t_lambda": float,
    "t_lambda_by_r2": "float_map",
}


def _parse_value(key: str, raw: str):
    kind = _CONFIG_SCHEMA[key]
    raw = raw.strip()
    if kind is str:
        return raw
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    if kind == "bool":
        if raw.lower() in ("true", "yes", "1"):
            return True
        if raw.lower() in ("false", "no", "0"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    if kind == "int_list":
        return tuple(int(x) for x in raw.split(","))
    if kind == "float_list":
        return tuple(float(x) for x in raw.split(","))
    if kind == "float_map":
        out = {}
        for item in raw.split(","):
            lhs, _, rhs = item.partition(":")
            out[float(lhs)] = float(rhs)
        return out
    raise AssertionError(kind)


def load_config_file(path) -> dict:
    """Parse a flat `key = value` config file into an override dict.

    Blank lines and lines starting with '#' are skipped; every key mirrors
    an ExperimentConfig or grid field.
    """
    overrides = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            key, sep, value = stripped.partition("=")
            key = key.strip()
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            if key not in _CONFIG_SCHEMA:
                raise ValueError(
                    f"{path}:{lineno}: unknown key {key!r}; valid keys: "
                    + ", ".join(sorted(_CONFIG_SCHEMA))
                )
            try:
                overrides[key] = _parse_value(key, value)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return overrides


def config_from_overrides(family: str, overrides: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from family defaults plus flat overrides."""
    base = linear_defaults() if family == "linear" else logistic_defaults()
    grid = base.grid
    grid_kind = overrides.get("grid", grid.kind)
    if grid_kind == "t":
        grid = GridSpec(
            kind="t",
            nus=overrides.get("t_nus", (1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 30.0)),
            lam=overrides.get("t_lambda", 0.1),
            lam_by_r2=overrides.get("t_lambda_by_r2"),
        )
    else:
        grid = GridSpec(
            kind=grid_kind,
            lo=overrides.get("grid_min", grid.lo),
            hi=overrides.get("grid_max", grid.hi),
            count=overrides.get("grid_count", grid.count),
            spacing=overrides.get("grid_spacing", grid.spacing),
        )
    kwargs = {
        key: overrides[key]
        for key in (
            "n_values", "r2_grid", "replications", "folds", "test_size",
            "base_seed", "parallelism", "q", "p_fit", "sigma2", "record_timing",
        )
        if key in overrides
    }
    return replace(base, grid=grid, **kwargs)
