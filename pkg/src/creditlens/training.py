"""Constrained training for the two-layer model.

Each subscale is a weighted, L2-regularized logistic regression whose
interval coefficients are kept non-negative by projection; the second
layer is the same problem over subscale probabilities with non-negative
weights.  Optimization is full-batch projected gradient descent with
Armijo backtracking, deterministic from an all-zero start.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binarize import (
    BinarizationScheme,
    BinaryMatrix,
    CATEGORY,
    ONE_SIDED_GE,
    ONE_SIDED_LT,
    TWO_SIDED,
)

#: Probability clamp that keeps log-loss finite.
PROB_EPS = 1e-12

DEFAULT_LAMBDA = 1e-3
DEFAULT_MAX_ITERS = 5000
DEFAULT_TOL = 1e-9
#: First-order optimality target; an order tighter than the 1e-5 the
#: trained models are audited against.
DEFAULT_GRAD_TOL = 1e-6
ARMIJO_C = 1e-4
FINE_TUNE_LR = 1e-5


@dataclass(frozen=True)
class FitInfo:
    """Outcome of one optimization run."""

    converged: bool
    iterations: int
    objective: float
    message: str = ""


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_gradient(
    bias: float,
    beta: np.ndarray,
    design: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    lam: float,
    reg_mask: np.ndarray,
) -> tuple[float, float, np.ndarray]:
    """Weighted logistic loss with a selective L2 penalty, plus gradients.

    loss = (1/N) sum_i w_i * (-y_i log p_i - (1-y_i) log(1-p_i))
           + lam * sum_{j in reg} beta_j^2

    Probabilities are clamped to [eps, 1-eps] inside the log only; the
    gradient uses the exact analytic form.  The bias is never penalized.
    """
    n = len(labels)
    z = bias + design @ beta
    p = _sigmoid(z)
    pc = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    data_term = float(
        np.sum(weights * -(labels * np.log(pc) + (1.0 - labels) * np.log(1.0 - pc))) / n
    )
    loss = data_term + lam * float(np.sum(beta[reg_mask] ** 2))
    g = weights * (p - labels) / n
    grad_bias = float(np.sum(g))
    grad_beta = design.T @ g
    grad_beta[reg_mask] += 2.0 * lam * beta[reg_mask]
    return loss, grad_bias, grad_beta


def kkt_residual(beta: np.ndarray, grad_beta: np.ndarray, grad_bias: float,
                 nonneg_mask: np.ndarray) -> float:
    """First-order optimality violation under the sign constraints.

    Free coordinates (and constrained ones strictly inside the feasible
    region) must have zero gradient; constrained coordinates sitting at
    zero only violate optimality if the gradient pushes them upward.
    """
    res = np.abs(grad_beta).copy()
    at_bound = nonneg_mask & (beta <= 0.0)
    res[at_bound] = np.maximum(0.0, -grad_beta[at_bound])
    return max(float(res.max(initial=0.0)), abs(grad_bias))


def projected_gradient_fit(
    design: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    lam: float,
    reg_mask: np.ndarray,
    nonneg_mask: np.ndarray,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    grad_tol: float = DEFAULT_GRAD_TOL,
) -> tuple[float, np.ndarray, FitInfo]:
    """Minimize the selective-L2 logistic objective under sign constraints.

    Projected gradient descent with backtracking (initial step 1.0,
    halving), plus Nesterov extrapolation between steps; the momentum
    resets whenever it would push the objective up, so accepted iterates
    never worsen.  After every step the masked coefficients are clipped
    to be non-negative.  Converged when the first-order residual drops
    below ``grad_tol``, or when the relative objective improvement falls
    below ``tol`` with the residual already near optimal.  Starts from
    all zeros, so the fit is deterministic.  The objective is convex and
    projection preserves feasibility, so a non-converged run still
    returns the best iterate (flagged in the returned info).
    """
    design = np.ascontiguousarray(design, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    d = design.shape[1]

    def f(bias, beta):
        return loss_and_gradient(bias, beta, design, labels, weights, lam, reg_mask)

    def project(beta):
        beta[nonneg_mask] = np.maximum(beta[nonneg_mask], 0.0)
        return beta

    x_bias, x_beta = 0.0, np.zeros(d, dtype=np.float64)
    x_obj, x_gb, x_gB = f(x_bias, x_beta)
    y_bias, y_beta = x_bias, x_beta
    y_obj, y_gb, y_gB = x_obj, x_gb, x_gB
    momentum = 0.0
    k = 0  # accepted steps since the last momentum restart
    step = 1.0
    iterations = 0
    for iterations in range(1, max_iters + 1):
        residual = kkt_residual(x_beta, x_gB, x_gb, nonneg_mask)
        if residual < grad_tol:
            return x_bias, x_beta, FitInfo(True, iterations, x_obj)
        step = min(step * 2.0, 1e8)  # warm-started backtracking
        accepted = False
        while step >= 1e-20:
            cand_bias = y_bias - step * y_gb
            cand_beta = project(y_beta - step * y_gB)
            cand_obj, cand_gb, cand_gB = f(cand_bias, cand_beta)
            db = cand_bias - y_bias
            dB = cand_beta - y_beta
            quad = y_obj + y_gb * db + float(y_gB @ dB) + (
                db * db + float(dB @ dB)
            ) / (2.0 * step)
            if cand_obj <= quad + 1e-15 * max(1.0, abs(quad)):
                accepted = True
                break
            step *= 0.5
        if not accepted or cand_obj > x_obj:
            if momentum == 0.0:
                # no extrapolation active and still no progress: done
                return x_bias, x_beta, FitInfo(True, iterations, x_obj, "step size exhausted")
            # restart: drop momentum and retry from the best iterate
            momentum = 0.0
            k = 0
            y_bias, y_beta = x_bias, x_beta
            y_obj, y_gb, y_gB = x_obj, x_gb, x_gB
            continue
        improvement = x_obj - cand_obj
        prev_bias, prev_beta = x_bias, x_beta
        x_bias, x_beta, x_obj, x_gb, x_gB = cand_bias, cand_beta, cand_obj, cand_gb, cand_gB
        if improvement < tol * max(1.0, abs(x_obj)) and momentum > 0.0:
            # momentum is stalling; retry plain steps from the best iterate
            momentum = 0.0
            k = 0
            y_bias, y_beta = x_bias, x_beta
            y_obj, y_gb, y_gB = x_obj, x_gb, x_gB
            continue
        k += 1
        momentum = (k - 1.0) / (k + 2.0)
        y_bias = x_bias + momentum * (x_bias - prev_bias)
        y_beta = x_beta + momentum * (x_beta - prev_beta)
        y_obj, y_gb, y_gB = f(y_bias, y_beta)
    return x_bias, x_beta, FitInfo(False, iterations, x_obj, "iteration limit reached")


def subscale_column_indices(scheme: BinarizationScheme, tag: str) -> np.ndarray:
    """Scheme column indices owned by one subscale, in layout order."""
    members = {f.name for f in scheme.schema.subscale_members(tag)}
    return np.asarray([c.index for c in scheme.columns if c.feature in members], dtype=np.int64)


def constrained_mask_for(scheme: BinarizationScheme, col_indices: np.ndarray) -> np.ndarray:
    """Non-negativity applies exactly to one-sided interval columns."""
    kinds = [scheme.columns[i].kind for i in col_indices]
    return np.asarray([k in (ONE_SIDED_LT, ONE_SIDED_GE) for k in kinds], dtype=bool)


def regularized_mask_for(scheme: BinarizationScheme, col_indices: np.ndarray) -> np.ndarray:
    """L2 applies to interval and category columns; sentinel and
    not-missing indicators act as per-feature offsets and stay free."""
    kinds = [scheme.columns[i].kind for i in col_indices]
    return np.asarray(
        [k in (ONE_SIDED_LT, ONE_SIDED_GE, TWO_SIDED, CATEGORY) for k in kinds], dtype=bool
    )
