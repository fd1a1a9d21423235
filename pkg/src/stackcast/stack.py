"""Stacked models: weight estimation, prediction, and evaluation ratios.

A stack is fitted in four steps: out-of-sample predictions per candidate,
jackknife residuals, simplex-QP weights, and full-data fits. Predictions
combine candidate outputs (probabilities for the logistic family, never
coefficients). The evaluation ratio divides the mean stacked test loss by
the mean loss of the CV-best candidate, means taken across replications
before dividing.
"""

import json
from dataclasses import dataclass

import numpy as np

from .crossval import CvScheme, cv_matrix, residuals
from .data import Dataset
from .errors import StackcastError
from .models import (
    CandidateSpec,
    FitResult,
    GeneralNormal,
    GPrior,
    IsoNormalLogistic,
    IsotropicNormal,
    MultiT,
    expit,
    map_logistic,
    posterior_mean_linear,
)
from .weights import WeightVector, gram, solve


@dataclass(frozen=True)
class StackModel:
    """A fitted stack: specs, full-data fits, weights, and CV diagnostics."""

    specs: tuple
    fits: tuple
    weights: WeightVector
    best_index: int
    cv_errors: np.ndarray

    @property
    def family(self) -> str:
        return self.specs[0].family

    @property
    def labels(self) -> tuple:
        return tuple(spec.label for spec in self.specs)


def fit_stack(dataset: Dataset, specs, cv_scheme: CvScheme | None = None) -> StackModel:
    """Fit all candidates, estimate simplex weights from CV error, pick the best.

    The default scheme is closed-form LOO for the linear family and seeded
    10-fold CV for the logistic family. Ties for the best candidate go to
    the lowest index.
    """
    specs = tuple(specs)
    if not specs:
        raise ValueError("need at least one candidate")
    family = specs[0].family
    if any(spec.family != family for spec in specs):
        raise ValueError("all candidates must share one family")
    if cv_scheme is None:
        cv_scheme = (
            CvScheme("loo_closed_form")
            if family == "linear"
            else CvScheme("kfold", folds=10, seed=0)
        )
    preds = cv_matrix(dataset, specs, cv_scheme)
    res = residuals(dataset.y, preds)
    s = gram(res)
    wv = solve(s)
    cv_errors = np.diag(s).copy()
    fits = []
    for spec in specs:
        try:
            if family == "linear":
                fits.append(posterior_mean_linear(dataset, spec))
            else:
                fits.append(map_logistic(dataset, spec))
        except StackcastError:
            raise
        except Exception as exc:
            raise RuntimeError(f"candidate {spec.label!r}: fit failed") from exc
    return StackModel(
        specs=specs,
        fits=tuple(fits),
        weights=wv,
        best_index=int(np.argmin(cv_errors)),
        cv_errors=cv_errors,
    )


def candidate_predictions(model: StackModel, x_new: np.ndarray) -> np.ndarray:
    """Per-candidate predictions on new rows, one column per candidate."""
    x_new = np.atleast_2d(np.asarray(x_new, dtype=np.float64))
    p = model.fits[0].beta.shape[0]
    if x_new.shape[1] != p:
        raise ValueError(f"x_new has {x_new.shape[1]} columns, model expects {p}")
    linpred = np.column_stack([x_new @ fit.beta for fit in model.fits])
    return expit(linpred) if model.family == "logistic" else linpred


def predict(model: StackModel, x_new: np.ndarray) -> np.ndarray:
    """Weighted compromise prediction; probabilities are combined, not betas."""
    w = model.weights.w
    vertex = np.nonzero(w == 1.0)[0]
    preds = candidate_predictions(model, x_new)
    if vertex.size == 1 and np.count_nonzero(w) == 1:
        return preds[:, vertex[0]]
    return preds @ w


class LossRatioAccumulator:
    """Running ratio of mean stacked loss to mean best-candidate loss.

    Per replication, add the two squared-error losses; the ratio divides the
    two means (ratio of means, not mean of ratios). The Monte Carlo standard
    error of the ratio comes from the delta method on the two loss means.
    """

    def __init__(self):
        self._stacked = []
        self._best = []

    def add(self, stacked_loss: float, best_loss: float):
        self._stacked.append(float(stacked_loss))
        self._best.append(float(best_loss))

    @property
    def count(self) -> int:
        return len(self._stacked)

    @property
    def mean_stacked(self) -> float:
        return float(np.sum(self._stacked) / len(self._stacked))

    @property
    def mean_best(self) -> float:
        return float(np.sum(self._best) / len(self._best))

    @property
    def ratio(self) -> float:
        denom = self.mean_best
        if denom == 0.0:
            raise ZeroDivisionError("mean best-candidate loss is zero")
        return self.mean_stacked / denom

    @property
    def mc_se(self) -> float:
        r = len(self._stacked)
        if r < 2:
            return 0.0
        a = np.asarray(self._stacked)
        b = np.asarray(self._best)
        cov = np.cov(a, b, ddof=1)
        rat = self.ratio
        var = (cov[0, 0] - 2.0 * rat * cov[0, 1] + rat * rat * cov[1, 1]) / (
            r * self.mean_best**2
        )
        return float(np.sqrt(max(var, 0.0)))


def _add_ratio(truth, stacked_pred, best_pred, acc: LossRatioAccumulator) -> float:
    truth = np.asarray(truth, dtype=np.float64)
    stacked_pred = np.asarray(stacked_pred, dtype=np.float64)
    best_pred = np.asarray(best_pred, dtype=np.float64)
    if truth.shape != stacked_pred.shape or truth.shape != best_pred.shape:
        raise ValueError("truth and prediction vectors must share one shape")
    acc.add(
        float(np.sum((truth - stacked_pred) ** 2)),
        float(np.sum((truth - best_pred) ** 2)),
    )
    return acc.ratio


def ratio_linear(truth_mu, stacked_pred, best_pred, acc: LossRatioAccumulator) -> float:
    """Accumulate one replication of mean-prediction losses; return the ratio."""
    return _add_ratio(truth_mu, stacked_pred, best_pred, acc)


def ratio_logistic(truth_p, stacked_p, best_p, acc: LossRatioAccumulator) -> float:
    """Accumulate one replication of probability losses; return the ratio."""
    return _add_ratio(truth_p, stacked_p, best_p, acc)


def _encode_prior(prior) -> dict:
    if isinstance(prior, IsotropicNormal):
        return {"kind": "isotropic_normal", "gamma2": prior.gamma2}
    if isinstance(prior, GPrior):
        return {"kind": "g_prior", "g": prior.g}
    if isinstance(prior, GeneralNormal):
        return {"kind": "general_normal", "cov": prior.cov.tolist()}
    if isinstance(prior, IsoNormalLogistic):
        return {"kind": "iso_normal_logistic", "lam": prior.lam}
    if isinstance(prior, MultiT):
        return {"kind": "multi_t", "nu": prior.nu, "scale": prior.scale.tolist()}
    raise ValueError(f"cannot serialize prior {prior!r}")


def _decode_prior(doc: dict):
    kind = doc["kind"]
    if kind == "isotropic_normal":
        return IsotropicNormal(doc["gamma2"])
    if kind == "g_prior":
        return GPrior(doc["g"])
    if kind == "general_normal":
        return GeneralNormal(np.asarray(doc["cov"]))
    if kind == "iso_normal_logistic":
        return IsoNormalLogistic(doc["lam"])
    if kind == "multi_t":
        return MultiT(doc["nu"], np.asarray(doc["scale"]))
    raise ValueError(f"unknown prior kind {kind!r}")


def to_document(model: StackModel) -> str:
    """Serialize a fitted stack (labels, priors, weights, coefficients) to JSON."""
    doc = {
        "family": model.family,
        "candidates": [
            {
                "label": spec.label,
                "sigma2": spec.sigma2,
                "prior": _encode_prior(spec.prior),
                "beta": fit.beta.tolist(),
            }
            for spec, fit in zip(model.specs, model.fits)
        ],
        "weights": model.weights.w.tolist(),
        "weight_objective": model.weights.objective,
        "weight_kkt_residual": model.weights.kkt_residual,
        "cv_errors": model.cv_errors.tolist(),
        "best_index": model.best_index,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def from_document(text: str) -> StackModel:
    """Rebuild a StackModel from its JSON document (prediction-ready)."""
    doc = json.loads(text)
    specs = []
    fits = []
    for cand in doc["candidates"]:
        specs.append(
            CandidateSpec(
                family=doc["family"],
                prior=_decode_prior(cand["prior"]),
                sigma2=cand["sigma2"],
                label=cand["label"],
            )
        )
        beta = np.asarray(cand["beta"], dtype=np.float64)
        fits.append(FitResult(beta=beta, iterations=0, grad_norm=0.0, converged=True))
    w = np.asarray(doc["weights"], dtype=np.float64)
    wv = WeightVector(
        w=w,
        objective=float(doc["weight_objective"]),
        kkt_residual=float(doc["weight_kkt_residual"]),
        iterations=0,
    )
    return StackModel(
        specs=tuple(specs),
        fits=tuple(fits),
        weights=wv,
        best_index=int(doc["best_index"]),
        cv_errors=np.asarray(doc["cv_errors"], dtype=np.float64),
    )
