"""Linear SVMs trained by dual coordinate descent, sigmoid-calibrated to
probabilities, and assembled into one-vs-rest multi-label scorers.

The binary trainer solves the L1-loss (hinge) primal

    min_v  (1/2) ||v||^2 + C * sum_i max(0, 1 - y_i (v . a_i))

over bias-augmented points a_i = [x_i, 1], so the bias is the last
component of v and is regularized along with the weights. All reported
objectives use this augmented form.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._rng import XorShift64Star, mix_seed
from .corpus import LabelCatalog
from .errors import InputError


@dataclass(frozen=True)
class PlattScaling:
    """Sigmoid map decision -> probability: p = 1 / (1 + exp(A*f + B))."""

    A: float
    B: float
    converged: bool = True


@dataclass(frozen=True)
class BinarySvm:
    weights: np.ndarray
    bias: float
    C: float
    platt: PlattScaling | None = None

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def decision(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.weights.shape:
            raise InputError(f"dimension mismatch: {x.shape} vs {self.weights.shape}")
        return float(self.weights @ x + self.bias)

    def probability(self, x) -> float:
        """Calibrated positive-class probability.

        Falls back to a plain logistic of the raw decision (A=-1, B=0)
        when no calibration was fitted; callers get a warning once per call.
        """
        f = self.decision(x)
        if self.platt is None:
            warnings.warn("BinarySvm has no Platt calibration; using logistic of "
                          "the raw decision", stacklevel=2)
            return _sigmoid_probability(-1.0, 0.0, f)
        return _sigmoid_probability(self.platt.A, self.platt.B, f)


def primal_objective(weights, bias: float, X, y, C: float) -> float:
    """Hinge-loss objective in the bias-augmented formulation."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    margins = y * (X @ np.asarray(weights) + bias)
    hinge = np.maximum(0.0, 1.0 - margins)
    reg = 0.5 * (float(np.dot(weights, weights)) + bias * bias)
    return reg + C * float(np.sum(hinge))


def fit_binary(X, y, C: float = 1.0, tol: float = 1e-4, max_iter: int = 1000,
               seed: int = 0, on_sweep=None) -> BinarySvm:
    """Train a binary linear SVM by dual coordinate descent.

    One dual variable is updated at a time with closed-form clipping to
    [0, C]; coordinates are visited in a seeded random order each sweep,
    and the loop stops once the largest projected-gradient violation in a
    sweep drops below ``tol`` (or after ``max_iter`` sweeps). Deterministic
    for a fixed seed.

    ``on_sweep(sweep_index, weights, bias, alpha)`` is called after every
    sweep when provided (used by diagnostics and tests; each update can
    only lower the dual objective 0.5*||v||^2 - sum(alpha), while the
    primal objective may fluctuate between snapshots).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise InputError(f"X must be 2-d, got shape {X.shape}")
    n, d = X.shape
    if y.shape != (n,):
        raise InputError(f"y has shape {y.shape}, expected ({n},)")
    if n < 2:
        raise InputError("need at least two training points")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InputError("training data contains non-finite values")
    if set(np.unique(y)) != {-1.0, 1.0}:
        raise InputError("y must contain both classes, encoded as -1 and +1")
    if C <= 0:
        raise InputError(f"C must be positive, got {C}")
    if tol <= 0:
        raise InputError(f"tol must be positive, got {tol}")

    Xa = np.hstack([X, np.ones((n, 1))])  # bias as constant feature
    q_diag = np.einsum("ij,ij->i", Xa, Xa)
    alpha = np.zeros(n)
    v = np.zeros(d + 1)
    rng = XorShift64Star(seed)
    order = list(range(n))

    for sweep in range(max_iter):
        rng.shuffle(order)
        worst = 0.0
        for i in order:
            g = y[i] * float(Xa[i] @ v) - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= C:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                worst = max(worst, abs(pg))
                new_a = min(max(a - g / q_diag[i], 0.0), C)
                if new_a != a:
                    v += (new_a - a) * y[i] * Xa[i]
                    alpha[i] = new_a
        if on_sweep is not None:
            on_sweep(sweep, v[:d].copy(), float(v[d]), alpha.copy())
        if worst < tol:
            break

    return BinarySvm(weights=v[:d].copy(), bias=float(v[d]), C=float(C))


# ---------------------------------------------------------------------------
# Platt calibration


def _sigmoid_probability(A: float, B: float, f: float) -> float:
    x = A * f + B
    if x >= 0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


def _platt_nll(x: np.ndarray, t: np.ndarray, comp: np.ndarray) -> float:
    # Branches are exact mirrors of one another so that flipping every label
    # (t <-> comp, x -> -x) negates the trajectory bit-for-bit.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = t[pos] * x[pos] + np.log1p(np.exp(-x[pos]))
    out[~pos] = -(comp[~pos] * x[~pos]) + np.log1p(np.exp(x[~pos]))
    return float(np.sum(out))


def _platt_pq(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.empty_like(x)
    q = np.empty_like(x)
    pos = x >= 0
    e_pos = np.exp(-x[pos])
    p[pos] = e_pos / (1.0 + e_pos)
    q[pos] = 1.0 / (1.0 + e_pos)
    e_neg = np.exp(x[~pos])
    p[~pos] = 1.0 / (1.0 + e_neg)
    q[~pos] = e_neg / (1.0 + e_neg)
    return p, q


def fit_platt(decisions, y, max_iter: int = 100) -> PlattScaling:
    """Fit the sigmoid p = 1/(1+exp(A*f+B)) by damped Newton iterations.

    Targets are smoothed counts t+ = (N+ + 1)/(N+ + 2) and
    t- = 1/(N- + 2); the start point is A = 0,
    B = log(N- + 1) - log(N+ + 1). A failed line search or running out of
    iterations returns the last iterate flagged ``converged=False``.
    """
    f = np.asarray(decisions, dtype=np.float64)
    yy = np.asarray(y, dtype=np.float64)
    if f.shape != yy.shape or f.ndim != 1:
        raise InputError("decisions and labels must be equal-length 1-d arrays")
    n_pos = int(np.sum(yy > 0))
    n_neg = int(np.sum(yy <= 0))
    if n_pos == 0 or n_neg == 0:
        raise InputError("calibration requires both classes")

    t = np.where(yy > 0, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    comp = np.where(yy > 0, 1.0 / (n_pos + 2.0), (n_neg + 1.0) / (n_neg + 2.0))

    sigma = 1e-12  # Hessian ridge for near-degenerate decision sets
    grad_eps = 1e-5
    min_step = 1e-10
    A = 0.0
    B = math.log(n_neg + 1.0) - math.log(n_pos + 1.0)
    fval = _platt_nll(A * f + B, t, comp)

    for _ in range(max_iter):
        x = A * f + B
        p, q = _platt_pq(x)
        d2 = p * q
        d1 = t * q - comp * p
        g1 = float(np.sum(f * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < grad_eps and abs(g2) < grad_eps:
            return PlattScaling(A=A, B=B, converged=True)
        h11 = sigma + float(np.sum(f * f * d2))
        h22 = sigma + float(np.sum(d2))
        h21 = float(np.sum(f * d2))
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(h11 * g2 - h21 * g1) / det
        gd = g1 * dA + g2 * dB

        step = 1.0
        while step >= min_step:
            new_A = A + step * dA
            new_B = B + step * dB
            new_f = _platt_nll(new_A * f + new_B, t, comp)
            if new_f < fval + 1e-4 * step * gd:
                A, B, fval = new_A, new_B, new_f
                break
            step /= 2.0
        else:
            return PlattScaling(A=A, B=B, converged=False)

    return PlattScaling(A=A, B=B, converged=False)


# ---------------------------------------------------------------------------
# One-vs-rest assembly


@dataclass(frozen=True)
class OneVsRestSvm:
    """One calibrated binary machine per label that had both classes in
    training; the rest are recorded in ``skipped`` and score zero."""

    labels: tuple[str, ...]
    machines: Mapping[str, BinarySvm]
    dim: int

    @property
    def skipped(self) -> tuple[str, ...]:
        return tuple(lab for lab in self.labels if lab not in self.machines)

    @property
    def uncalibrated(self) -> tuple[str, ...]:
        return tuple(lab for lab, m in self.machines.items() if m.platt is None)


def fit_one_vs_rest(X, gold_label_sets: Sequence, catalog: LabelCatalog,
                    C: float = 1.0, tol: float = 1e-4, max_iter: int = 1000,
                    seed: int = 0) -> OneVsRestSvm:
    """Train one binary machine per catalog label (positive iff the label is
    in the article's gold set) and Platt-calibrate it on its own training
    decisions. Labels without at least one positive and one negative
    example are skipped.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InputError(f"X must be 2-d, got shape {X.shape}")
    n = X.shape[0]
    if len(gold_label_sets) != n:
        raise InputError("one gold label set per training vector required")
    gold_sets = [frozenset(s) for s in gold_label_sets]

    machines: dict[str, BinarySvm] = {}
    for idx, label in enumerate(catalog.ids()):
        y = np.where([label in s for s in gold_sets], 1.0, -1.0)
        pos = int(np.sum(y > 0))
        if pos == 0 or pos == n:
            continue
        machine = fit_binary(X, y, C=C, tol=tol, max_iter=max_iter,
                             seed=mix_seed(seed, idx))
        decisions = X @ machine.weights + machine.bias
        platt = fit_platt(decisions, y)
        machines[label] = BinarySvm(weights=machine.weights, bias=machine.bias,
                                    C=machine.C, platt=platt)

    return OneVsRestSvm(labels=catalog.ids(), machines=machines, dim=X.shape[1])


def predict_proba(model: OneVsRestSvm, x) -> dict[str, float]:
    """Per-label calibrated probability; skipped labels score 0.

    Probabilities are NOT normalized across labels (an article may carry
    several issues); use :func:`predict_proba_normalized` for the
    single-label view.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise InputError(f"dimension mismatch: {x.shape} vs ({model.dim},)")
    return {label: (model.machines[label].probability(x)
                    if label in model.machines else 0.0)
            for label in model.labels}


def predict_proba_normalized(model: OneVsRestSvm, x) -> dict[str, float]:
    """Per-label probabilities divided by their sum (sums to 1)."""
    raw = predict_proba(model, x)
    total = sum(raw.values())
    if total <= 0.0:
        raise InputError("cannot normalize: no label received positive probability")
    return {label: p / total for label, p in raw.items()}


# ---------------------------------------------------------------------------
# Serialization


def one_vs_rest_to_dict(model: OneVsRestSvm) -> dict:
    machines = {}
    for label, m in model.machines.items():
        platt = None if m.platt is None else {"A": m.platt.A, "B": m.platt.B}
        machines[label] = {"w": [float(w) for w in m.weights], "b": m.bias,
                           "C": m.C, "platt": platt}
    return {"dim": model.dim, "labels": list(model.labels), "machines": machines}


def one_vs_rest_from_dict(doc: Mapping) -> OneVsRestSvm:
    try:
        machines = {}
        for label, rec in doc["machines"].items():
            platt = rec.get("platt")
            machines[label] = BinarySvm(
                weights=np.asarray(rec["w"], dtype=np.float64),
                bias=float(rec["b"]), C=float(rec["C"]),
                platt=None if platt is None else PlattScaling(A=float(platt["A"]),
                                                              B=float(platt["B"])),
            )
        return OneVsRestSvm(labels=tuple(doc["labels"]), machines=machines,
                            dim=int(doc["dim"]))
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed SVM model document: {exc}") from exc


def save_one_vs_rest(model: OneVsRestSvm, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(one_vs_rest_to_dict(model), fh, sort_keys=True)
        fh.write("\n")


def load_one_vs_rest(path) -> OneVsRestSvm:
    with open(path, encoding="utf-8") as fh:
        return one_vs_rest_from_dict(json.load(fh))
