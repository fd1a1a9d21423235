"""Data model, synthetic data generation, and CSV ingestion.

Two synthetic designs are provided: a Gaussian-outcome regression with
polynomially decaying coefficients, and a Bernoulli-outcome design with
alternating-sign decaying coefficients. Both draw covariates as independent
standard normals and scale the linear predictor so the theoretical R^2
(signal variance over signal-plus-noise variance) hits a requested target.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import CsvParseError, DegenerateSignalError

# variance of the standard logistic distribution, the latent noise scale
# implied by a Bernoulli outcome with expit link
LOGISTIC_NOISE_VAR = math.pi**2 / 3.0


@dataclass(frozen=True)
class Dataset:
    """A fitted design matrix, outcome vector, and optional ground truth.

    ``truth`` holds the conditional mean E[y|Z] for continuous outcomes and
    the success probability for binary outcomes; it is populated by the
    synthetic generators and absent for ingested data.
    """

    x: np.ndarray
    y: np.ndarray
    family: str = "linear"
    truth: np.ndarray | None = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.float64)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("x must be an n x p matrix with n, p >= 1")
        if y.shape != (x.shape[0],):
            raise ValueError(
                f"y has length {y.shape}, expected ({x.shape[0]},)"
            )
        if self.family not in ("linear", "logistic"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.truth is not None:
            truth = np.asarray(self.truth, dtype=np.float64)
            object.__setattr__(self, "truth", truth)
            if truth.shape != y.shape:
                raise ValueError("truth must have the same length as y")
        if self.family == "logistic":
            if not np.isin(y, (0.0, 1.0)).all():
                raise ValueError("binary outcomes must lie in {0, 1}")
            if self.truth is not None and not (
                (self.truth > 0.0) & (self.truth < 1.0)
            ).all():
                raise ValueError("binary truth must lie strictly inside (0, 1)")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class DgpConfig:
    """Configuration of a synthetic data-generating process.

    ``q`` is the generating dimension (number of covariates driving the
    outcome), ``p_fit`` the number of columns exposed to the candidate
    models (the first, largest-coefficient ones). ``sigma2`` only applies
    to the linear family.
    """

    family: str
    n: int
    r2: float
    q: int = 1000
    p_fit: int = 14
    sigma2: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.family not in ("linear", "logistic"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 < self.r2 < 1.0:
            raise ValueError("r2 must lie strictly inside (0, 1)")
        if not 1 <= self.p_fit <= self.q:
            raise ValueError("need 1 <= p_fit <= q")
        if self.sigma2 <= 0.0:
            raise ValueError("sigma2 must be positive")


def coef_linear(j, c: float):
    """Decaying coefficient c * sqrt(2) * j**-1.5 for index j >= 1."""
    j = np.asarray(j, dtype=np.float64)
    if np.any(j < 1):
        raise ValueError("coefficient index starts at 1")
    out = c * math.sqrt(2.0) * j**-1.5
    return float(out) if out.ndim == 0 else out


def coef_logistic(j):
    """Alternating-sign decaying coefficient (-1)**(j+1) * sqrt(2) * j**-1.5."""
    j = np.asarray(j)
    if np.any(j < 1):
        raise ValueError("coefficient index starts at 1")
    sign = np.where(j % 2 == 1, 1.0, -1.0)
    out = sign * math.sqrt(2.0) * np.asarray(j, dtype=np.float64) ** -1.5
    return float(out) if out.ndim == 0 else out


def signal_scale(beta, noise_var: float, r2: float) -> float:
    """Scaling c such that Var[c X beta] / (Var[c X beta] + noise_var) = r2.

    Assumes covariates drawn as independent standard normals, for which
    Var[X beta] = ||beta||^2.
    """
    if not 0.0 < r2 < 1.0:
        raise ValueError("r2 must lie strictly inside (0, 1)")
    if noise_var <= 0.0:
        raise ValueError("noise_var must be positive")
    b2 = float(np.sum(np.square(np.asarray(beta, dtype=np.float64))))
    if b2 == 0.0:
        raise DegenerateSignalError("cannot scale an all-zero coefficient vector")
    return math.sqrt(r2 * noise_var / ((1.0 - r2) * b2))


def _scaled_coefficients(config: DgpConfig) -> np.ndarray:
    j = np.arange(1, config.q + 1)
    if config.family == "linear":
        beta = coef_linear(j, 1.0)
        return signal_scale(beta, config.sigma2, config.r2) * beta
    beta = coef_logistic(j)
    return signal_scale(beta, LOGISTIC_NOISE_VAR, config.r2) * beta


def _draw_block(seed_seq, rows: int, config: DgpConfig, cbeta: np.ndarray) -> Dataset:
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    x_full = rng.standard_normal((rows, config.q))
    if config.family == "linear":
        truth = x_full @ cbeta
        y = truth + math.sqrt(config.sigma2) * rng.standard_normal(rows)
    else:
        truth = _expit_stable(x_full @ cbeta)
        y = (rng.random(rows) < truth).astype(np.float64)
    return Dataset(
        x=x_full[:, : config.p_fit], y=y, family=config.family, truth=truth
    )


def generate(config: DgpConfig, test_size: int | None = None):
    """Draw a Dataset from the configured process; deterministic in the seed.

    With ``test_size`` set, returns (train, test). The blocks use separate
    child streams of the seed, so the training draw is unchanged by the
    request for a test set.
    """
    cbeta = _scaled_coefficients(config)
    children = np.random.SeedSequence(config.seed).spawn(2)
    train = _draw_block(children[0], config.n, config, cbeta)
    if not test_size:
        return train
    test = _draw_block(children[1], int(test_size), config, cbeta)
    return train, test


def _expit_stable(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    et = np.exp(t[~pos])
    out[~pos] = et / (1.0 + et)
    return out


def load_csv(path, outcome_column: str) -> Dataset:
    """Read a rectangular numeric CSV with a header row into a Dataset.

    The outcome column is selected by name; remaining columns form the
    design matrix in header order. The family is binary when the outcome
    contains only values in {0, 1}.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if outcome_column not in header:
            raise CsvParseError(
                f"{path}: outcome column {outcome_column!r} not in header {header}"
            )
        y_idx = header.index(outcome_column)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise CsvParseError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            parsed = []
            for col, cell in zip(header, row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise CsvParseError(
                        f"{path}:{lineno}: column {col!r}: non-numeric value {cell!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise CsvParseError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=np.float64)
    y = data[:, y_idx]
    x = np.delete(data, y_idx, axis=1)
    if x.shape[1] == 0:
        raise CsvParseError(f"{path}: no covariate columns besides the outcome")
    family = "logistic" if np.isin(y, (0.0, 1.0)).all() else "linear"
    return Dataset(x=x, y=y, family=family)
