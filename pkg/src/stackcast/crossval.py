"""Out-of-sample candidate predictions: closed-form LOO and K-fold refits.

For linear-Gaussian candidates the leave-one-out predictions follow from a
rank-one downdate of the penalized normal equations, so only the full-data
fit and the hat diagonal are needed. Logistic candidates have no closed
form and are refitted per fold.
"""

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import FoldError, LeverageError, SingularSystemError
from .models import (
    CandidateSpec,
    expit,
    hat_diag,
    map_logistic,
    penalized_normal_matrix,
    posterior_mean_linear,
)

LEVERAGE_CUTOFF = 1.0 - 1e-12
MAX_FOLD_ATTEMPTS = 10


@dataclass(frozen=True)
class CvScheme:
    """Cross-validation scheme tag: loo_closed_form, loo_refit, or kfold."""

    kind: str
    folds: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("loo_closed_form", "loo_refit", "kfold"):
            raise ValueError(f"unknown cv scheme {self.kind!r}")
        if self.kind == "kfold":
            if self.folds is None or self.folds < 2:
                raise ValueError("kfold needs folds >= 2")
            if self.seed is None:
                raise ValueError("kfold needs a seed")


@dataclass(frozen=True)
class CvPredictionMatrix:
    """n x K matrix of out-of-sample predictions, one column per candidate."""

    values: np.ndarray
    scheme: CvScheme
    labels: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", tuple(self.labels))
        if values.ndim != 2 or values.shape[1] != len(self.labels):
            raise ValueError("values must be n x K with one label per column")
        if not np.isfinite(values).all():
            raise ValueError("predictions must be finite")


@dataclass(frozen=True)
class ResidualMatrix:
    """Jackknife residuals y - y_tilde, one column per candidate."""

    values: np.ndarray


def loo_linear_closed_form(dataset: Dataset, spec: CandidateSpec) -> np.ndarray:
    """LOO predictions (y_hat_i - h_i y_i) / (1 - h_i) from the full-data fit."""
    fit = posterior_mean_linear(dataset, spec)
    yhat = dataset.x @ fit.beta
    h = hat_diag(dataset, spec)
    bad = np.nonzero(h >= LEVERAGE_CUTOFF)[0]
    if bad.size:
        raise LeverageError(
            f"candidate {spec.label!r}: leverage within 1e-12 of 1 at row {bad[0]}"
        )
    return (yhat - h * dataset.y) / (1.0 - h)


def loo_linear_refit(dataset: Dataset, spec: CandidateSpec) -> np.ndarray:
    """Literal n-fold refit; the oracle for the closed form. O(n p^3).

    The prior matrix is held fixed at its full-data value (only the
    likelihood term loses the held-out row), matching the closed form.
    """
    import scipy.linalg

    x, y = dataset.x, dataset.y
    a_full = penalized_normal_matrix(x, spec)
    rhs_full = x.T @ y
    out = np.empty(dataset.n)
    for i in range(dataset.n):
        xi = x[i]
        a = a_full - np.outer(xi, xi)
        rhs = rhs_full - y[i] * xi
        try:
            cf = scipy.linalg.cho_factor(a, lower=True)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise SingularSystemError(
                f"candidate {spec.label!r}: leave-one-out system singular at row {i}"
            ) from exc
        out[i] = xi @ scipy.linalg.cho_solve(cf, rhs)
    return out


def _fold_assignment(n: int, folds: int, seed: int, attempt: int) -> np.ndarray:
    ss = np.random.SeedSequence((seed, attempt))
    rng = np.random.Generator(np.random.PCG64(ss))
    perm = rng.permutation(n)
    assignment = np.empty(n, dtype=np.intp)
    for fold_id, block in enumerate(np.array_split(perm, folds)):
        assignment[block] = fold_id
    return assignment


def kfold_logistic(
    dataset: Dataset, spec: CandidateSpec, folds: int, seed: int
) -> np.ndarray:
    """K-fold out-of-sample probabilities for one logistic candidate.

    Folds are a seeded permutation cut into contiguous blocks (sizes differ
    by at most one). If some training fold is single-class the assignment is
    re-drawn deterministically with an incremented sub-seed, at most
    MAX_FOLD_ATTEMPTS times. Fold fits warm start from the full-data MAP.
    """
    if not 2 <= folds <= dataset.n:
        raise ValueError("need 2 <= folds <= n")
    y = dataset.y
    assignment = None
    for attempt in range(MAX_FOLD_ATTEMPTS):
        candidate = _fold_assignment(dataset.n, folds, seed, attempt)
        ok = all(
            np.unique(y[candidate != fold_id]).size == 2 for fold_id in range(folds)
        )
        if ok:
            assignment = candidate
            break
    if assignment is None:
        raise FoldError(
            f"candidate {spec.label!r}: could not build {folds} folds with "
            f"two-class training sets in {MAX_FOLD_ATTEMPTS} attempts"
        )
    full_fit = map_logistic(dataset, spec)
    out = np.empty(dataset.n)
    for fold_id in range(folds):
        test_mask = assignment == fold_id
        train = Dataset(
            x=dataset.x[~test_mask], y=y[~test_mask], family="logistic"
        )
        fit = map_logistic(train, spec, beta0=full_fit.beta)
        out[test_mask] = expit(dataset.x[test_mask] @ fit.beta)
    return out


def cv_matrix(
    dataset: Dataset, specs: list, scheme: CvScheme
) -> CvPredictionMatrix:
    """Assemble the n x K out-of-sample prediction matrix, candidate by candidate."""
    cols = []
    for spec in specs:
        if scheme.kind == "loo_closed_form":
            cols.append(loo_linear_closed_form(dataset, spec))
        elif scheme.kind == "loo_refit":
            cols.append(loo_linear_refit(dataset, spec))
        else:
            cols.append(kfold_logistic(dataset, spec, scheme.folds, scheme.seed))
    return CvPredictionMatrix(
        values=np.column_stack(cols),
        scheme=scheme,
        labels=tuple(spec.label for spec in specs),
    )


def residuals(y: np.ndarray, predictions: CvPredictionMatrix) -> ResidualMatrix:
    """Jackknife residual matrix: the outcome minus each prediction column."""
    y = np.asarray(y, dtype=np.float64)
    values = predictions.values
    if values.shape[0] != y.shape[0]:
        raise ValueError(
            f"predictions have {values.shape[0]} rows, outcome has {y.shape[0]}"
        )
    return ResidualMatrix(values=y[:, None] - values)
