"""Truncated-Newton (Newton-CG) training for the multinomial logistic model."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

from opinion_detect.classifier.objective import _hvp, _loss_grad, pack, unpack
from opinion_detect.labels import CLASS_ORDER

logger = logging.getLogger(__name__)

DEFAULT_C = 0.9474722736821756
DEFAULT_TOL = 0.1
DEFAULT_MAX_ITER = 100


@dataclass(frozen=True)
class Hyperparams:
    """Solver settings. ``cg_max_iter=None`` means ``min(20 * n_params, 1000)``."""

    C: float = DEFAULT_C
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    cg_max_iter: int | None = None
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_halvings: int = 30
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.cg_max_iter is not None and self.cg_max_iter < 1:
            raise ValueError("cg_max_iter must be at least 1")
        if not 0 < self.armijo_c1 < 1 or not 0 < self.backtrack < 1:
            raise ValueError("line-search constants must lie in (0, 1)")

    def cg_limit(self, n_params: int) -> int:
        return self.cg_max_iter if self.cg_max_iter is not None else min(20 * n_params, 1000)


@dataclass(frozen=True)
class TrainReport:
    iterations: int
    objective: float
    grad_inf_norm: float
    converged: bool
    objective_trace: tuple[float, ...] = field(default_factory=tuple)
    cg_iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "objective": self.objective,
            "grad_inf_norm": self.grad_inf_norm,
            "converged": self.converged,
            "cg_iterations": self.cg_iterations,
            "objective_trace": list(self.objective_trace),
        }


def conjugate_gradient(
    hvp: Callable[[np.ndarray], np.ndarray],
    g: np.ndarray,
    max_iter: int,
) -> tuple[np.ndarray, int]:
    """Approximately solve ``H s = -g``; returns ``(s, iterations)``.

    Stops once the residual norm drops below ``min(0.5, sqrt(|g|)) * |g|``.
    On a direction of non-positive curvature it returns the current iterate,
    or ``-g`` if that happens on the first step.
    """
    gnorm = float(np.linalg.norm(g))
    tol = min(0.5, math.sqrt(gnorm)) * gnorm
    s = np.zeros_like(g)
    r = -g
    p = r.copy()
    rr = float(r @ r)
    eps = np.finfo(np.float64).eps
    for i in range(max_iter):
        if math.sqrt(rr) <= tol:
            return s, i
        Hp = hvp(p)
        curv = float(p @ Hp)
        if curv <= eps * float(p @ p):
            return (-g.copy(), i) if i == 0 else (s, i)
        alpha = rr / curv
        s += alpha * p
        r -= alpha * Hp
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return s, max_iter


def _encode(y: Sequence[Hashable], classes: Sequence[Hashable]) -> np.ndarray:
    lookup = {c: k for k, c in enumerate(classes)}
    try:
        return np.array([lookup[label] for label in y], dtype=np.intp)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} is not one of {list(classes)}") from None


def fit_newton_cg(X: np.ndarray, y_idx: np.ndarray, n_classes: int, hyper: Hyperparams):
    """Minimize the objective from ``W = 0, b = 0``; returns ``(W, b, TrainReport)``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, d = X.shape
    K = n_classes
    C = hyper.C
    theta = np.zeros(K * d + K)

    def evaluate(t):
        W, b = unpack(t, K, d)
        J, gW, gb, P = _loss_grad(W, b, X, y_idx, C)
        return float(J), pack(gW, gb), P

    def objective_only(t):
        W, b = unpack(t, K, d)
        return float(_loss_grad(W, b, X, y_idx, C)[0])

    f, g, P = evaluate(theta)
    trace = [f]
    iterations = cg_total = 0
    cg_limit = hyper.cg_limit(theta.size)
    converged = False
    while True:
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= hyper.tol:
            converged = True
            break
        if iterations >= hyper.max_iter:
            break

        def hvp(v, P=P):
            VW, vb = unpack(v, K, d)
            return pack(*_hvp(P, X, C, VW, vb))

        step, used = conjugate_gradient(hvp, g, cg_limit)
        cg_total += used
        slope = float(g @ step)
        if not slope < 0:
            step, slope = -g, -float(g @ g)

        t = 1.0
        for _ in range(hyper.max_halvings + 1):
            f_new = objective_only(theta + t * step)
            if f_new <= f + hyper.armijo_c1 * t * slope:
                break
            t *= hyper.backtrack
        else:
            logger.warning("line search failed after %d halvings; keeping best iterate", hyper.max_halvings)
            break

        theta = theta + t * step
        f, g, P = evaluate(theta)
        trace.append(f)
        iterations += 1

    W, b = unpack(theta, K, d)
    report = TrainReport(iterations, f, gnorm, converged, tuple(trace), cg_total)
    if not converged:
        logger.warning("Newton-CG stopped without meeting tol=%g (|g|_inf=%.3g)", hyper.tol, gnorm)
    return W.copy(), b.copy(), report


def resolve_classes(y: Sequence[Hashable], classes: Sequence[Hashable] | None) -> tuple:
    if classes is not None:
        return tuple(classes)
    present = set(y)
    if present <= set(CLASS_ORDER):
        return CLASS_ORDER
    return tuple(sorted(present))
