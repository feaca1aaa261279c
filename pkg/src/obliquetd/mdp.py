"""Finite MDPs, policy-induced chains, exact value functions, and sample generation.

All types are immutable after construction (arrays are defensively copied and
marked read-only), so instances can be shared freely across threads. Sample
generators own their RNG: NumPy's PCG64 via ``np.random.default_rng(seed)``,
which replays bit-exactly for a fixed seed on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NonErgodicError, NotTabularError

ROW_SUM_TOL = 1e-12
DIST_SUM_TOL = 1e-10


def _frozen(a, dtype=float) -> np.ndarray:
    """Copy to a C-contiguous read-only array."""
    out = np.array(a, dtype=dtype, order="C")
    out.flags.writeable = False
    return out


def _check_rows_stochastic(p: np.ndarray, what: str) -> None:
    if np.any(p < 0):
        raise ValueError(f"{what} has negative entries")
    sums = p.sum(axis=-1)
    if np.max(np.abs(sums - 1.0)) > ROW_SUM_TOL:
        raise ValueError(f"{what} rows must sum to 1 within {ROW_SUM_TOL}")


@dataclass(frozen=True)
class TabularMDP:
    """Finite MDP: transition tensor (s, a, s'), reward table (s, a), discount."""

    transition: np.ndarray
    reward: np.ndarray
    gamma: float

    def __post_init__(self):
        t = _frozen(self.transition)
        r = _frozen(self.reward)
        if t.ndim != 3 or t.shape[0] != t.shape[2]:
            raise ValueError(f"transition must have shape (S, A, S), got {t.shape}")
        if r.shape != t.shape[:2]:
            raise ValueError(f"reward shape {r.shape} does not match transition {t.shape[:2]}")
        _check_rows_stochastic(t, "transition")
        if not np.all(np.isfinite(r)):
            raise ValueError("reward has non-finite entries")
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "reward", r)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def r_max(self) -> float:
        return float(np.max(np.abs(self.reward)))


@dataclass(frozen=True)
class Policy:
    """Stationary stochastic policy: probs[s, a] = probability of a in s."""

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 2:
            raise ValueError(f"policy table must be 2-D, got shape {p.shape}")
        _check_rows_stochastic(p, "policy")
        object.__setattr__(self, "probs", p)

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    @property
    def n_actions(self) -> int:
        return self.probs.shape[1]


@dataclass(frozen=True)
class InducedChain:
    """Markov chain a policy induces: kernel p_pi, expected rewards r_pi, discount."""

    p_pi: np.ndarray
    r_pi: np.ndarray
    gamma: float

    def __post_init__(self):
        p = _frozen(self.p_pi)
        r = _frozen(self.r_pi)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"chain kernel must be square, got {p.shape}")
        if r.shape != (p.shape[0],):
            raise ValueError(f"reward vector shape {r.shape} does not match kernel {p.shape}")
        _check_rows_stochastic(p, "chain kernel")
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        object.__setattr__(self, "p_pi", p)
        object.__setattr__(self, "r_pi", r)

    @property
    def n_states(self) -> int:
        return self.p_pi.shape[0]

    def bellman_linear_part(self) -> np.ndarray:
        """I - gamma * P, the linear part of the Bellman operator. Nonsingular for gamma < 1."""
        return np.eye(self.n_states) - self.gamma * self.p_pi


@dataclass(frozen=True)
class FeatureMap:
    """Linear value-function features.

    Tabular domains carry the full (S, d) matrix; continuous domains carry a
    function state -> length-d vector. ``bound`` is the max absolute feature value.
    """

    d: int
    matrix: np.ndarray | None = None
    func: Callable[..., np.ndarray] | None = field(default=None, compare=False)
    bound: float = 1.0

    @classmethod
    def tabular(cls, matrix) -> "FeatureMap":
        m = _frozen(matrix)
        if m.ndim != 2:
            raise ValueError(f"feature matrix must be 2-D, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("feature matrix has non-finite entries")
        return cls(d=m.shape[1], matrix=m, bound=float(np.max(np.abs(m))) if m.size else 0.0)

    @classmethod
    def continuous(cls, func, d: int, bound: float) -> "FeatureMap":
        return cls(d=d, func=func, bound=bound)

    @property
    def is_tabular(self) -> bool:
        return self.matrix is not None

    def require_matrix(self) -> np.ndarray:
        if self.matrix is None:
            raise NotTabularError("operation requires a tabular feature matrix")
        return self.matrix

    def phi(self, state) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix[state]
        return self.func(state)


@dataclass(frozen=True)
class StateDistribution:
    """Probability weights over states."""

    xi: np.ndarray

    def __post_init__(self):
        x = _frozen(self.xi)
        if x.ndim != 1:
            raise ValueError("state distribution must be a vector")
        if np.any(x < 0):
            raise ValueError("state distribution has negative entries")
        if abs(x.sum() - 1.0) > DIST_SUM_TOL:
            raise ValueError(f"state distribution must sum to 1 within {DIST_SUM_TOL}")
        object.__setattr__(self, "xi", x)

    @property
    def n_states(self) -> int:
        return self.xi.shape[0]


@dataclass(frozen=True, slots=True)
class Sample:
    """One transition record with features and importance ratio.

    ``terminal`` marks the end of an episode (continuous domains); the next
    sample in a sequential stream then starts a fresh episode.
    """

    s: object
    a: int
    r: float
    s_next: object
    phi: np.ndarray
    phi_next: np.ndarray
    rho: float
    terminal: bool = False

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("importance ratio must be nonnegative")
        if np.shape(self.phi) != np.shape(self.phi_next):
            raise ValueError("phi and phi_next must have the same length")


def induce_chain(mdp: TabularMDP, policy: Policy) -> InducedChain:
    """Collapse an MDP and a policy into the induced Markov chain.

    p_pi[s, s'] = sum_a policy[s, a] * transition[s, a, s'];
    r_pi[s] = sum_a policy[s, a] * reward[s, a].
    """
    if policy.probs.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError(
            f"policy shape {policy.probs.shape} does not match "
            f"MDP ({mdp.n_states}, {mdp.n_actions})"
        )
    p_pi = np.einsum("sa,sat->st", policy.probs, mdp.transition)
    r_pi = np.einsum("sa,sa->s", policy.probs, mdp.reward)
    return InducedChain(p_pi=p_pi, r_pi=r_pi, gamma=mdp.gamma)


def true_value(chain: InducedChain) -> np.ndarray:
    """Exact value function: solve (I - gamma * P) V = R densely."""
    return np.linalg.solve(chain.bellman_linear_part(), chain.r_pi)


def stationary_distribution(p, tol: float = 1e-12, max_iter: int = 10**6) -> StateDistribution:
    """Stationary distribution of a row-stochastic kernel by power iteration.

    Starts from uniform and iterates xi <- xi P until the max-abs change is
    below ``tol``. Non-convergence within ``max_iter`` raises NonErgodicError
    (periodic or reducible chains land here).
    """
    p = np.asarray(p, dtype=float)
    _check_rows_stochastic(p, "kernel")
    n = p.shape[0]
    xi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = xi @ p
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - xi)) < tol:
            return StateDistribution(xi=nxt)
        xi = nxt
    raise NonErgodicError(
        f"power iteration did not converge within {max_iter} iterations; "
        "kernel may be periodic or reducible"
    )


def _cumulative_rows(p: np.ndarray) -> np.ndarray:
    c = np.cumsum(p, axis=-1)
    c[..., -1] = 1.0
    return c


def _draw(cum_row: np.ndarray, rng: np.random.Generator) -> int:
    # side="right" skips zero-width intervals, so zero-probability entries
    # are never selected.
    return int(np.searchsorted(cum_row, rng.random(), side="right"))


def _importance_table(target: Policy, behavior: Policy) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(behavior.probs > 0, target.probs / behavior.probs, 0.0)
    return rho


def _check_sampler_args(mdp, behavior, target, phi, dist) -> None:
    shape = (mdp.n_states, mdp.n_actions)
    if behavior.probs.shape != shape or target.probs.shape != shape:
        raise ValueError(
            f"policy shapes {behavior.probs.shape}, {target.probs.shape} "
            f"do not match MDP {shape}"
        )
    if phi.shape[0] != mdp.n_states:
        raise ValueError(f"feature matrix has {phi.shape[0]} rows for {mdp.n_states} states")
    if dist.n_states != mdp.n_states:
        raise ValueError(
            f"state distribution covers {dist.n_states} states, MDP has {mdp.n_states}"
        )


def generate_sequential(
    mdp: TabularMDP,
    behavior: Policy,
    target: Policy,
    features: FeatureMap,
    start: StateDistribution,
    n: int,
    seed: int,
) -> list[Sample]:
    """One behavior-policy trajectory of n chained transitions.

    Consecutive samples satisfy samples[t].s_next == samples[t + 1].s. The
    importance ratio is target(a|s) / behavior(a|s). Deterministic given seed.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    phi = features.require_matrix()
    _check_sampler_args(mdp, behavior, target, phi, start)
    rng = np.random.default_rng(seed)
    cum_start = _cumulative_rows(start.xi)
    cum_beh = _cumulative_rows(behavior.probs)
    cum_trans = _cumulative_rows(mdp.transition)
    rho_table = _importance_table(target, behavior)

    out: list[Sample] = []
    s = _draw(cum_start, rng)
    for _ in range(n):
        a = _draw(cum_beh[s], rng)
        s_next = _draw(cum_trans[s, a], rng)
        out.append(
            Sample(
                s=s,
                a=a,
                r=float(mdp.reward[s, a]),
                s_next=s_next,
                phi=phi[s],
                phi_next=phi[s_next],
                rho=float(rho_table[s, a]),
            )
        )
        s = s_next
    return out


def generate_iid(
    mdp: TabularMDP,
    behavior: Policy,
    target: Policy,
    features: FeatureMap,
    state_dist: StateDistribution,
    n: int,
    seed: int,
) -> list[Sample]:
    """n independent transitions: s ~ state_dist, a ~ behavior, s' ~ kernel.

    Sampling is with replacement; samples do not chain. Deterministic given seed.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    phi = features.require_matrix()
    _check_sampler_args(mdp, behavior, target, phi, state_dist)
    rng = np.random.default_rng(seed)
    cum_xi = _cumulative_rows(state_dist.xi)
    cum_beh = _cumulative_rows(behavior.probs)
    cum_trans = _cumulative_rows(mdp.transition)
    rho_table = _importance_table(target, behavior)

    out: list[Sample] = []
    for _ in range(n):
        s = _draw(cum_xi, rng)
        a = _draw(cum_beh[s], rng)
        s_next = _draw(cum_trans[s, a], rng)
        out.append(
            Sample(
                s=s,
                a=a,
                r=float(mdp.reward[s, a]),
                s_next=s_next,
                phi=phi[s],
                phi_next=phi[s_next],
                rho=float(rho_table[s, a]),
            )
        )
    return out


def save_mdp_text(mdp: TabularMDP, path) -> None:
    """Write an MDP in the plain-text format (see load_mdp_text)."""
    lines = [
        "# tabular MDP",
        "# n_states n_actions gamma",
        f"{mdp.n_states} {mdp.n_actions} {mdp.gamma!r}",
        "# transition rows, one line per (state, action), state-major",
    ]
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            lines.append(" ".join(repr(float(v)) for v in mdp.transition[s, a]))
    lines.append("# reward rows, one line per state, one entry per action")
    for s in range(mdp.n_states):
        lines.append(" ".join(repr(float(v)) for v in mdp.reward[s]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mdp_text(path) -> TabularMDP:
    """Read an MDP from the whitespace-delimited text format.

    Layout (blank lines and '#' comments are skipped):
      line 1: n_states n_actions gamma
      next n_states * n_actions lines: transition[s, a, :], state-major then action
      next n_states lines: reward[s, :]
    """
    with open(path, "r", encoding="utf-8") as fh:
        rows = [ln.split() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty MDP file")
    header = rows[0]
    if len(header) != 3:
        raise ValueError(f"{path}: header must be 'n_states n_actions gamma'")
    n_states, n_actions, gamma = int(header[0]), int(header[1]), float(header[2])
    need = 1 + n_states * n_actions + n_states
    if len(rows) != need:
        raise ValueError(f"{path}: expected {need} data lines, found {len(rows)}")
    body = rows[1:]
    transition = np.array(
        [[body[s * n_actions + a] for a in range(n_actions)] for s in range(n_states)],
        dtype=float,
    )
    reward = np.array(body[n_states * n_actions:], dtype=float)
    return TabularMDP(transition=transition, reward=reward, gamma=gamma)
