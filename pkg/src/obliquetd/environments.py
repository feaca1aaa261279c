"""The three benchmark domains: the 7-state star counterexample, seeded random
MDPs, and mountain car with Fourier features.

Star-domain constants (features, initial weights, policies, discount) follow
the standard off-policy counterexample configuration and are collected here in
one place:

  * 7 states: six spokes (ids 0..5) and a hub (id 6)
  * actions: 0 = solid (always to the hub), 1 = dash (uniform over spokes)
  * behavior policy: dash with probability 6/7, solid with probability 1/7
  * target policy: always solid
  * all rewards zero, discount 0.99
  * features (7 x 8): spoke i has value 2 on component i and 1 on the last;
    the hub has value 1 on component 6 and 2 on the last
  * initial weights (1, 1, 1, 1, 1, 1, 10, 1)
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from itertools import product
from typing import NamedTuple

import numpy as np

from .mdp import FeatureMap, Policy, StateDistribution, TabularMDP

BAIRD_GAMMA = 0.99
BAIRD_N_STATES = 7
BAIRD_THETA0 = (1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0, 1.0)


class BairdDomain(NamedTuple):
    mdp: TabularMDP
    behavior: Policy
    target: Policy
    features: FeatureMap
    theta0: np.ndarray


def build_baird() -> BairdDomain:
    """Construct the star counterexample domain."""
    n, hub = BAIRD_N_STATES, BAIRD_N_STATES - 1
    transition = np.zeros((n, 2, n))
    transition[:, 0, hub] = 1.0          # solid: straight to the hub
    transition[:, 1, :hub] = 1.0 / (n - 1)  # dash: uniform over the spokes
    reward = np.zeros((n, 2))
    mdp = TabularMDP(transition=transition, reward=reward, gamma=BAIRD_GAMMA)

    behavior = Policy(probs=np.tile([1.0 / n, (n - 1.0) / n], (n, 1)))
    target = Policy(probs=np.tile([1.0, 0.0], (n, 1)))

    phi = np.zeros((n, n + 1))
    for s in range(hub):
        phi[s, s] = 2.0
        phi[s, n] = 1.0
    phi[hub, hub] = 1.0
    phi[hub, n] = 2.0

    return BairdDomain(
        mdp=mdp,
        behavior=behavior,
        target=target,
        features=FeatureMap.tabular(phi),
        theta0=np.array(BAIRD_THETA0),
    )


@dataclass(frozen=True)
class RandomMDPSpec:
    """Parameters of the seeded random-MDP generator."""

    n_states: int = 400
    n_actions: int = 10
    n_features: int = 201
    gamma: float = 0.95
    seed: int = 0


class RandomMDPDomain(NamedTuple):
    mdp: TabularMDP
    behavior: Policy
    target: Policy
    start: StateDistribution
    features: FeatureMap


def _positive_rows(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform draws offset by 1e-5 and normalized rows: strictly positive kernels."""
    raw = rng.random(shape) + 1e-5
    return raw / raw.sum(axis=-1, keepdims=True)


def build_random_mdp(spec: RandomMDPSpec) -> RandomMDPDomain:
    """Seeded random MDP: positive transition kernel, random policies and rewards,
    uniform random features with one constant column.

    Draw order (transitions, behavior, target, start, rewards, features) is
    fixed, so equal seeds reproduce bit-identical domains.
    """
    rng = np.random.default_rng(spec.seed)
    s, a = spec.n_states, spec.n_actions
    transition = _positive_rows(rng, (s, a, s))
    behavior = Policy(probs=_positive_rows(rng, (s, a)))
    target = Policy(probs=_positive_rows(rng, (s, a)))
    start = StateDistribution(xi=_positive_rows(rng, (s,)))
    reward = rng.random((s, a))
    phi = np.ones((s, spec.n_features))
    phi[:, : spec.n_features - 1] = rng.random((s, spec.n_features - 1))
    return RandomMDPDomain(
        mdp=TabularMDP(transition=transition, reward=reward, gamma=spec.gamma),
        behavior=behavior,
        target=target,
        start=start,
        features=FeatureMap.tabular(phi),
    )


# --- mountain car ---------------------------------------------------------

MC_POSITION_BOUNDS = (-1.2, 0.6)
MC_VELOCITY_BOUNDS = (-0.07, 0.07)
MC_GOAL_POSITION = 0.5
MC_START_POSITION_RANGE = (-0.6, -0.4)
MC_N_ACTIONS = 3


def mountain_car_step(state, action: int):
    """One step of the standard underpowered-car dynamics.

    state is (position, velocity); actions 0/1/2 mean reverse/coast/forward.
    Velocity is zeroed on hitting the left bound. Reward is -1 every step;
    the episode ends when the position reaches the goal.
    """
    position, velocity = float(state[0]), float(state[1])
    if not (MC_POSITION_BOUNDS[0] <= position <= MC_POSITION_BOUNDS[1]):
        raise ValueError(f"position {position} out of bounds {MC_POSITION_BOUNDS}")
    if not (MC_VELOCITY_BOUNDS[0] <= velocity <= MC_VELOCITY_BOUNDS[1]):
        raise ValueError(f"velocity {velocity} out of bounds {MC_VELOCITY_BOUNDS}")
    if action not in (0, 1, 2):
        raise ValueError(f"action must be 0, 1, or 2, got {action}")
    velocity = velocity + 0.001 * (action - 1) - 0.0025 * np.cos(3.0 * position)
    velocity = float(np.clip(velocity, *MC_VELOCITY_BOUNDS))
    position = float(np.clip(position + velocity, *MC_POSITION_BOUNDS))
    if position <= MC_POSITION_BOUNDS[0] and velocity < 0.0:
        velocity = 0.0
    done = position >= MC_GOAL_POSITION
    return (position, velocity), -1.0, done


def energy_pumping_policy(state) -> int:
    """Accelerate in the direction of the current velocity (forward at rest)."""
    return 2 if state[1] >= 0.0 else 0


def mountain_car_start(rng: np.random.Generator):
    """Standard start: position uniform in [-0.6, -0.4], velocity zero."""
    lo, hi = MC_START_POSITION_RANGE
    return (float(lo + (hi - lo) * rng.random()), 0.0)


def fourier_features(x, order: int) -> np.ndarray:
    """Fourier cosine basis over the unit cube.

    x must already be normalized to [0, 1]^m; the basis is cos(pi * c . x) for
    every coefficient vector c in {0, ..., order}^m, giving (order + 1)^m
    features, all in [-1, 1]. The all-zero coefficient yields the constant 1.
    """
    x = np.asarray(x, dtype=float)
    coeffs = np.array(list(product(range(order + 1), repeat=x.shape[0])), dtype=float)
    return np.cos(np.pi * (coeffs @ x))


def _normalize_mc_state(state) -> np.ndarray:
    p = (state[0] - MC_POSITION_BOUNDS[0]) / (MC_POSITION_BOUNDS[1] - MC_POSITION_BOUNDS[0])
    v = (state[1] - MC_VELOCITY_BOUNDS[0]) / (MC_VELOCITY_BOUNDS[1] - MC_VELOCITY_BOUNDS[0])
    return np.array([p, v])


def _mc_phi(state, order: int) -> np.ndarray:
    return fourier_features(_normalize_mc_state(state), order)


def mountain_car_features(order: int = 3) -> FeatureMap:
    """Fourier feature map over the normalized (position, velocity) box."""
    return FeatureMap.continuous(partial(_mc_phi, order=order), d=(order + 1) ** 2, bound=1.0)
