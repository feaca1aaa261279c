"""Shared builders and independent numeric oracles for the test suite."""

import numpy as np
import pytest

from obliquetd.mdp import (
    FeatureMap,
    InducedChain,
    Policy,
    StateDistribution,
    TabularMDP,
    induce_chain,
    stationary_distribution,
)

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def random_tabular_mdp(rng, n_states=6, n_actions=3, gamma=0.9, reward_scale=1.0):
    """Ergodic random MDP (strictly positive kernel)."""
    t = rng.random((n_states, n_actions, n_states)) + 1e-5
    t /= t.sum(axis=-1, keepdims=True)
    r = reward_scale * rng.random((n_states, n_actions))
    return TabularMDP(transition=t, reward=r, gamma=gamma)


def random_policy(rng, n_states, n_actions):
    p = rng.random((n_states, n_actions)) + 1e-5
    return Policy(probs=p / p.sum(axis=-1, keepdims=True))


def random_chain(rng, n_states=6, gamma=0.9):
    p = rng.random((n_states, n_states)) + 1e-5
    p /= p.sum(axis=-1, keepdims=True)
    return InducedChain(p_pi=p, r_pi=rng.normal(size=n_states), gamma=gamma)


def random_instance(rng, n_states=6, d=3, gamma=0.9):
    """(chain, xi, features) with xi the chain's own stationary distribution."""
    chain = random_chain(rng, n_states, gamma)
    xi = stationary_distribution(chain.p_pi)
    features = FeatureMap.tabular(rng.normal(size=(n_states, d)))
    return chain, xi, features


def off_policy_instance(rng, n_states=6, n_actions=3, d=3, gamma=0.9):
    """(mdp, behavior, target, features, xi) with xi behavior-stationary."""
    mdp = random_tabular_mdp(rng, n_states, n_actions, gamma)
    behavior = random_policy(rng, n_states, n_actions)
    target = random_policy(rng, n_states, n_actions)
    features = FeatureMap.tabular(rng.random((n_states, d)))
    xi = stationary_distribution(induce_chain(mdp, behavior).p_pi)
    return mdp, behavior, target, features, xi


def golden_section_minimize(f, lo, hi, tol=1e-9, max_iter=10_000):
    """Golden-section search for the minimizer of a unimodal scalar function."""
    a, b = float(lo), float(hi)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def uniform_dist(n):
    return StateDistribution(xi=np.full(n, 1.0 / n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
