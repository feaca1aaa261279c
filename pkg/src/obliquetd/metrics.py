"""Error measurements: MSE, MSPBE, their root forms, and Monte-Carlo values.

An EvaluationContext freezes everything a metric needs: the reference value
function, the state weights, the feature matrix over evaluation states, and
the one-step Bellman data (expected reward and expected next-state features)
used by MSPBE.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import FeatureMap, InducedChain, StateDistribution, true_value

# Rank-deficient feature Grams (overcomplete features) fall back to a
# minimum-norm least-squares projection, which computes the same projected
# vector whenever the normal equations are consistent.
_GRAM_COND_LIMIT = 1e10


@dataclass(frozen=True)
class EvaluationContext:
    """Precomputed quantities for evaluating a weight vector.

    bellman_reward and bellman_next_phi describe one application of the
    target-policy Bellman operator at each evaluation state:
    (T Phi theta)[i] = bellman_reward[i] + gamma * bellman_next_phi[i] @ theta.
    """

    v_true: np.ndarray
    xi_weights: np.ndarray
    phi_eval: np.ndarray
    bellman_reward: np.ndarray
    bellman_next_phi: np.ndarray
    gamma: float

    def __post_init__(self):
        w = np.asarray(self.xi_weights, dtype=float)
        if abs(w.sum() - 1.0) > 1e-10:
            raise ValueError("evaluation weights must sum to 1 within 1e-10")
        if np.any(w < 0):
            raise ValueError("evaluation weights must be nonnegative")
        if not np.all(np.isfinite(self.v_true)):
            raise ValueError("reference values must be finite")
        gram = self.phi_eval.T @ (w[:, None] * self.phi_eval)
        object.__setattr__(self, "_gram", gram)
        object.__setattr__(self, "_gram_cond", float(np.linalg.cond(gram)))

    @classmethod
    def tabular(
        cls,
        chain: InducedChain,
        xi: StateDistribution,
        features: FeatureMap,
        v_true: np.ndarray | None = None,
    ) -> "EvaluationContext":
        """Exact context for a tabular chain (V from a dense solve unless given)."""
        phi = features.require_matrix()
        if v_true is None:
            v_true = true_value(chain)
        return cls(
            v_true=np.asarray(v_true, dtype=float),
            xi_weights=xi.xi,
            phi_eval=phi,
            bellman_reward=chain.r_pi,
            bellman_next_phi=chain.p_pi @ phi,
            gamma=chain.gamma,
        )

    def project_coeffs(self, target: np.ndarray) -> np.ndarray:
        """Coefficients of the xi-weighted orthogonal projection of ``target``."""
        rhs = self.phi_eval.T @ (self.xi_weights * target)
        if np.isfinite(self._gram_cond) and self._gram_cond <= _GRAM_COND_LIMIT:
            return np.linalg.solve(self._gram, rhs)
        return np.linalg.lstsq(self._gram, rhs, rcond=None)[0]


def mse(theta, ctx: EvaluationContext) -> float:
    """xi-weighted mean squared error of Phi theta against the reference values."""
    diff = ctx.phi_eval @ np.asarray(theta, dtype=float) - ctx.v_true
    return float(np.dot(ctx.xi_weights, diff * diff))


def mspbe(theta, ctx: EvaluationContext) -> float:
    """Mean squared projected Bellman error at theta.

    || Phi theta - Pi(R + gamma P Phi theta) ||^2 weighted by xi, with Pi the
    xi-weighted orthogonal projection onto span(Phi). Zero exactly at the TD
    fixed point.
    """
    theta = np.asarray(theta, dtype=float)
    v = ctx.phi_eval @ theta
    bellman_residual = ctx.bellman_reward + ctx.gamma * (ctx.bellman_next_phi @ theta) - v
    projected = ctx.phi_eval @ ctx.project_coeffs(bellman_residual)
    return float(np.dot(ctx.xi_weights, projected * projected))


def rms(x: float) -> float:
    """Root of a nonnegative squared-error value."""
    if x < 0:
        raise ValueError(f"rms expects a nonnegative input, got {x}")
    return float(np.sqrt(x))


def monte_carlo_value(
    step_fn,
    policy_fn,
    eval_states,
    n_rollouts: int,
    horizon: int,
    gamma: float,
    seed: int,
):
    """Truncated-return Monte-Carlo estimate of the value at each evaluation state.

    step_fn(state, action, rng) -> (next_state, reward, done);
    policy_fn(state, rng) -> action. Each (state, rollout) pair gets its own
    PCG64 stream keyed by (seed, state index, rollout index), so results are
    independent of execution order.

    Returns (values, standard_errors).
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    values = np.zeros(len(eval_states))
    errs = np.zeros(len(eval_states))
    for i, s0 in enumerate(eval_states):
        returns = np.empty(n_rollouts)
        for k in range(n_rollouts):
            rng = np.random.default_rng([seed, i, k])
            s = s0
            total = 0.0
            disc = 1.0
            for _ in range(horizon):
                a = policy_fn(s, rng)
                s, r, done = step_fn(s, a, rng)
                total += disc * r
                disc *= gamma
                if done:
                    break
            returns[k] = total
        values[i] = returns.mean()
        errs[i] = returns.std(ddof=1) / np.sqrt(n_rollouts) if n_rollouts > 1 else 0.0
    return values, errs


def default_horizon(gamma: float, r_max: float, tol: float = 1e-3) -> int:
    """Smallest H with gamma^H * r_max / (1 - gamma) below the truncation tolerance."""
    if not (0.0 <= gamma < 1.0):
        raise ValueError("gamma must lie in [0, 1)")
    if gamma == 0.0 or r_max == 0.0:
        return 1
    h = int(np.ceil(np.log(tol * (1.0 - gamma) / r_max) / np.log(gamma)))
    return max(h, 1)


def tabular_step_fn(mdp):
    """Adapt a TabularMDP to the (state, action, rng) -> (s', r, done) interface."""
    cum = np.cumsum(mdp.transition, axis=-1)
    cum[..., -1] = 1.0

    def step(s, a, rng):
        s_next = int(np.searchsorted(cum[s, a], rng.random(), side="right"))
        return s_next, float(mdp.reward[s, a]), False

    return step


def tabular_policy_fn(policy):
    """Adapt a Policy table to the (state, rng) -> action interface."""
    cum = np.cumsum(policy.probs, axis=-1)
    cum[..., -1] = 1.0

    def act(s, rng):
        return int(np.searchsorted(cum[s], rng.random(), side="right"))

    return act
