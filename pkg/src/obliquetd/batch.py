"""Batch solvers: state-aggregated two-stage optimal TD (SOTD), LSTD, and the
diagonal-scaling oracle used to audit the online learner's relaxation.

SOTD stage 1 fits projection directions X by least squares against the feature
second-moment matrix; stage 2 solves for the weights through those directions.
Both stages use a closed-form solve when well conditioned and fall back to
Nesterov-accelerated gradient descent otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotTabularError, SingularMatrixError
from .mdp import FeatureMap, InducedChain, Sample, StateDistribution

COND_LIMIT = 1e10
GRAD_TOL = 1e-9
MAX_ITER = 100_000


@dataclass(frozen=True)
class AggregatedModel:
    """Per-state conditional means plus the pooled feature second moment.

    diff_features[j] is the mean of rho * (phi - gamma * phi_next) over all
    samples observed at states[j]; rewards[j] the mean of rho * r there.
    feature_gram is the plain (unweighted) mean of phi phi^T over all samples.
    """

    states: np.ndarray
    diff_features: np.ndarray
    rewards: np.ndarray
    feature_gram: np.ndarray
    counts: np.ndarray

    @property
    def n_groups(self) -> int:
        return self.states.shape[0]

    @property
    def n_samples(self) -> int:
        return int(self.counts.sum())


def aggregate(samples: list[Sample], gamma: float) -> AggregatedModel:
    """Group samples by state and form the aggregated estimates."""
    if not samples:
        raise ValueError("need at least one sample")
    for smp in samples:
        if not isinstance(smp.s, (int, np.integer)):
            raise NotTabularError("state aggregation requires discrete state ids")
    state_ids = np.array([smp.s for smp in samples], dtype=int)
    phis = np.array([smp.phi for smp in samples], dtype=float)
    phi_nexts = np.array([smp.phi_next for smp in samples], dtype=float)
    rhos = np.array([smp.rho for smp in samples], dtype=float)
    rs = np.array([smp.r for smp in samples], dtype=float)

    states, inverse = np.unique(state_ids, return_inverse=True)
    m, d = states.shape[0], phis.shape[1]
    weighted_diff = rhos[:, None] * (phis - gamma * phi_nexts)

    diff_sums = np.zeros((m, d))
    np.add.at(diff_sums, inverse, weighted_diff)
    reward_sums = np.zeros(m)
    np.add.at(reward_sums, inverse, rhos * rs)
    counts = np.bincount(inverse, minlength=m)

    return AggregatedModel(
        states=states,
        diff_features=diff_sums / counts[:, None],
        rewards=reward_sums / counts,
        feature_gram=(phis.T @ phis) / len(samples),
        counts=counts,
    )


def save_aggregated_text(model: AggregatedModel, path) -> None:
    """Dump an aggregated model in the whitespace-delimited text format."""
    lines = [
        "# aggregated model",
        "# n_groups d",
        f"{model.n_groups} {model.diff_features.shape[1]}",
        "# state ids",
        " ".join(str(int(s)) for s in model.states),
        "# counts",
        " ".join(str(int(c)) for c in model.counts),
        "# diff_features rows",
    ]
    for row in model.diff_features:
        lines.append(" ".join(repr(float(v)) for v in row))
    lines.append("# rewards")
    lines.append(" ".join(repr(float(v)) for v in model.rewards))
    lines.append("# feature_gram rows")
    for row in model.feature_gram:
        lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _power_iteration_largest(gram: np.ndarray, iters: int = 200, tol: float = 1e-12) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    n = gram.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    for _ in range(iters):
        w = gram @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        new_lam = float(v @ (gram @ v))
        if abs(new_lam - lam) <= tol * max(1.0, abs(new_lam)):
            return new_lam
        lam = new_lam
    return lam


def nesterov_least_squares(
    a: np.ndarray,
    b: np.ndarray,
    tol: float = GRAD_TOL,
    max_iter: int = MAX_ITER,
    track_objective: bool = False,
):
    """Minimize 0.5 * ||a z - b||_F^2 from z = 0 by Nesterov's accelerated gradient.

    Step size 1/L with L the largest eigenvalue of a^T a (power-iteration
    estimate); momentum t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2, no restarts.
    Stops when the gradient Frobenius norm at the iterate drops below ``tol``.

    Returns (z, converged, objectives) where objectives is the per-iteration
    objective trace when tracking is on (empty list otherwise).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    z = np.zeros((a.shape[1],) + b.shape[1:])
    lip = _power_iteration_largest(a.T @ a)
    objectives: list[float] = []
    if lip == 0.0:
        return z, True, objectives
    step = 1.0 / lip
    y = z
    t = 1.0
    for _ in range(max_iter):
        z_new = y - step * (a.T @ (a @ y - b))
        resid = a @ z_new - b
        if track_objective:
            objectives.append(0.5 * float(np.sum(resid * resid)))
        grad_norm = np.linalg.norm(a.T @ resid)
        if grad_norm < tol:
            return z_new, True, objectives
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = z_new + ((t - 1.0) / t_new) * (z_new - z)
        z, t = z_new, t_new
    return z, False, objectives


def sotd_directions(model: AggregatedModel, tol: float = GRAD_TOL, max_iter: int = MAX_ITER):
    """Stage 1: least-squares directions fitting diff_features^T X to the feature gram.

    Closed form (D D^T)^-1 (D G) via a linear solve when D D^T is well
    conditioned; otherwise Nesterov-accelerated gradient descent from zero.
    Each column is an independent least-squares problem; the matrix iteration
    preserves that independence.

    Returns (directions, converged).
    """
    d_hat = model.diff_features
    outer = d_hat @ d_hat.T
    cond = np.linalg.cond(outer)
    if np.isfinite(cond) and cond < COND_LIMIT:
        return np.linalg.solve(outer, d_hat @ model.feature_gram), True
    x, converged, _ = nesterov_least_squares(d_hat.T, model.feature_gram, tol, max_iter)
    return x, converged


def sotd_weights(
    directions: np.ndarray,
    model: AggregatedModel,
    tol: float = GRAD_TOL,
    max_iter: int = MAX_ITER,
):
    """Stage 2: weights minimizing ||X^T (D theta - R)||^2.

    One-shot solve (X^T D)^-1 X^T R when well conditioned, else the same
    accelerated gradient scheme as stage 1.

    Returns (theta, converged).
    """
    m = directions.T @ model.diff_features
    rhs = directions.T @ model.rewards
    cond = np.linalg.cond(m)
    if np.isfinite(cond) and cond < COND_LIMIT:
        return np.linalg.solve(m, rhs), True
    theta, converged, _ = nesterov_least_squares(m, rhs, tol, max_iter)
    return theta, converged


@dataclass(frozen=True)
class SOTDResult:
    """Both SOTD stages plus their residuals and convergence flags."""

    directions: np.ndarray
    theta: np.ndarray
    stage1_residual: float
    stage2_residual: float
    stage1_converged: bool
    stage2_converged: bool


def sotd(model: AggregatedModel, tol: float = GRAD_TOL, max_iter: int = MAX_ITER) -> SOTDResult:
    """Run both SOTD stages on an aggregated model."""
    directions, conv1 = sotd_directions(model, tol, max_iter)
    theta, conv2 = sotd_weights(directions, model, tol, max_iter)
    stage1_res = float(
        np.linalg.norm(model.diff_features.T @ directions - model.feature_gram)
    )
    stage2_res = float(
        np.linalg.norm(directions.T @ (model.diff_features @ theta - model.rewards))
    )
    return SOTDResult(
        directions=directions,
        theta=theta,
        stage1_residual=stage1_res,
        stage2_residual=stage2_res,
        stage1_converged=conv1,
        stage2_converged=conv2,
    )


def lstd_weights(samples: list[Sample], gamma: float, ridge: float = 0.0) -> np.ndarray:
    """LSTD: theta = A^-1 b with A and b the importance-weighted sample means.

    A = mean of rho * phi (phi - gamma phi_next)^T, b = mean of rho * r * phi.
    An optional ridge term eps * I stabilizes singular A; with ridge 0 a
    singular A raises SingularMatrixError.
    """
    if not samples:
        raise ValueError("need at least one sample")
    phis = np.array([smp.phi for smp in samples], dtype=float)
    phi_nexts = np.array([smp.phi_next for smp in samples], dtype=float)
    rhos = np.array([smp.rho for smp in samples], dtype=float)
    rs = np.array([smp.r for smp in samples], dtype=float)
    n, d = phis.shape
    a_mat = (rhos[:, None] * phis).T @ (phis - gamma * phi_nexts) / n
    b_vec = (rhos * rs) @ phis / n
    if ridge:
        a_mat = a_mat + ridge * np.eye(d)
    cond = np.linalg.cond(a_mat)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularMatrixError("LSTD matrix is numerically singular", cond=float(cond))
    return np.linalg.solve(a_mat, b_vec)


def optimal_diagonal_scaling(
    chain: InducedChain,
    xi: StateDistribution,
    features: FeatureMap,
) -> np.ndarray:
    """Exact-model oracle: best per-state diagonal scaling of the TD directions.

    Finds the vector w minimizing || Delta^T diag(w) Xi Phi - C ||_F^2 with
    Delta = L Phi and C = Phi^T Xi Phi, solved as a linear least-squares
    problem in w (the objective is quadratic). Intended for small state
    spaces; the design matrix has d^2 rows and |S| columns.
    """
    phi = features.require_matrix()
    delta = chain.bellman_linear_part() @ phi
    target = phi.T @ (xi.xi[:, None] * phi)
    # column s of the design = vec(xi_s * outer(delta_s, phi_s))
    design = np.einsum("s,si,sj->ijs", xi.xi, delta, phi).reshape(-1, chain.n_states)
    w, *_ = np.linalg.lstsq(design, target.ravel(), rcond=None)
    return w


def diagonal_scaling_objective(
    w,
    chain: InducedChain,
    xi: StateDistribution,
    features: FeatureMap,
) -> float:
    """Objective value of the diagonal-scaling problem at w."""
    phi = features.require_matrix()
    delta = chain.bellman_linear_part() @ phi
    target = phi.T @ (xi.xi[:, None] * phi)
    fitted = delta.T @ (np.asarray(w, dtype=float)[:, None] * xi.xi[:, None] * phi)
    diff = fitted - target
    return 0.5 * float(np.sum(diff * diff))
