"""Oblique projectors, canonical projection directions, and exact fixed points.

This is the ground-truth layer: everything here works on the full tabular
model, with every matrix inverse realized as a partially pivoted linear solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrixError
from .mdp import FeatureMap, InducedChain, StateDistribution

COND_LIMIT = 1e10

DIRECTION_KINDS = ("td", "rg", "optimal")


def _solve_checked(a: np.ndarray, b: np.ndarray, what: str) -> np.ndarray:
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularMatrixError(f"{what} is numerically singular", cond=float(cond))
    return np.linalg.solve(a, b)


@dataclass(frozen=True)
class ObliqueProjector:
    """Projection onto span(phi) orthogonal to span(directions).

    Applying it computes phi @ (directions^T phi)^-1 directions^T v.
    Construction fails when directions^T phi has condition estimate above
    ``COND_LIMIT``.
    """

    phi: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        x = np.asarray(self.directions, dtype=float)
        if phi.shape != x.shape:
            raise ValueError(f"directions shape {x.shape} must match features {phi.shape}")
        gram = x.T @ phi
        cond = float(np.linalg.cond(gram))
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise SingularMatrixError("directions^T phi is numerically singular", cond=cond)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "directions", x)
        object.__setattr__(self, "_gram", gram)
        object.__setattr__(self, "cond", cond)

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.phi.shape[0]:
            raise ValueError(f"vector length {v.shape[0]} does not match {self.phi.shape[0]} states")
        return self.phi @ np.linalg.solve(self._gram, self.directions.T @ v)


def apply_projection(projector: ObliqueProjector, v) -> np.ndarray:
    """Apply an oblique projector to a value vector."""
    return projector.apply(v)


@dataclass(frozen=True)
class FixedPointSolution:
    """Weights and value estimate solving a projected Bellman fixed point."""

    theta: np.ndarray
    v_hat: np.ndarray


def canonical_directions(
    kind: str,
    chain: InducedChain,
    xi: StateDistribution,
    features: FeatureMap,
) -> np.ndarray:
    """Canonical projection directions for a tabular chain.

    kind "td"      -> Xi Phi                (the weighted least-squares projection)
    kind "rg"      -> Xi L Phi              (the residual-gradient directions)
    kind "optimal" -> L^-T Xi Phi           (directions whose fixed point is the
                                             xi-weighted orthogonal projection of V)
    where L = I - gamma * P. The optimal case is computed by a dense solve
    against L^T, never an explicit inverse.
    """
    phi = features.require_matrix()
    if phi.shape[0] != chain.n_states or xi.n_states != chain.n_states:
        raise ValueError("chain, xi, and features disagree on the number of states")
    weighted = xi.xi[:, None] * phi
    if kind == "td":
        return weighted
    l_mat = chain.bellman_linear_part()
    if kind == "rg":
        return xi.xi[:, None] * (l_mat @ phi)
    if kind == "optimal":
        return _solve_checked(l_mat.T, weighted, "transposed Bellman linear part")
    raise ValueError(f"unknown direction kind {kind!r}; expected one of {DIRECTION_KINDS}")


def fixed_point(
    directions: np.ndarray,
    chain: InducedChain,
    features: FeatureMap,
) -> FixedPointSolution:
    """Solve the oblique projected Bellman fixed point for given directions.

    theta solves (X^T Delta) theta = X^T R with Delta = L Phi, and
    v_hat = Phi theta.
    """
    phi = features.require_matrix()
    x = np.asarray(directions, dtype=float)
    if x.shape != phi.shape:
        raise ValueError(f"directions shape {x.shape} must match features {phi.shape}")
    delta = chain.bellman_linear_part() @ phi
    theta = _solve_checked(x.T @ delta, x.T @ chain.r_pi, "directions^T Delta")
    return FixedPointSolution(theta=theta, v_hat=phi @ theta)
