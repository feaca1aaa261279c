"""Config-driven experiment runner.

Each run r uses seed = base_seed + r for sample generation; the domain itself
is built deterministically from the config (random MDPs take their own build
seed from [domain]), so every run of a config reproduces byte-identical CSVs.
Runs are independent and may execute on a bounded worker pool; results are
collected in run order, so parallelism never changes the output.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..environments import (
    BAIRD_THETA0,
    RandomMDPSpec,
    build_baird,
    build_random_mdp,
    energy_pumping_policy,
    mountain_car_features,
    mountain_car_start,
    mountain_car_step,
    MC_POSITION_BOUNDS,
    MC_VELOCITY_BOUNDS,
)
from ..mdp import (
    FeatureMap,
    Policy,
    Sample,
    StateDistribution,
    TabularMDP,
    generate_iid,
    generate_sequential,
    induce_chain,
    stationary_distribution,
)
from ..metrics import EvaluationContext, default_horizon, monte_carlo_value, mse, mspbe, rms
from ..online import make_learner
from .config import ExperimentConfig
from .csvio import write_aggregate_csv, write_runs_csv

EPISODE_CAP = 10_000


class CurvePoint(NamedTuple):
    step: int
    run: int
    rmspbe: float
    rmse: float


@dataclass(frozen=True)
class Prepared:
    """Domain pieces shared by all runs; picklable for worker processes."""

    d: int
    gamma: float
    theta0: np.ndarray
    context: EvaluationContext
    # tabular domains
    mdp: TabularMDP | None = None
    behavior: Policy | None = None
    target: Policy | None = None
    features: FeatureMap | None = None
    start: StateDistribution | None = None
    xi: StateDistribution | None = None
    # mountain car
    mc_order: int | None = None


def prepare(config: ExperimentConfig) -> Prepared:
    """Build the domain and the evaluation context for a config."""
    if config.domain == "baird":
        dom = build_baird()
        chain_b = induce_chain(dom.mdp, dom.behavior)
        xi = stationary_distribution(chain_b.p_pi)
        chain_t = induce_chain(dom.mdp, dom.target)
        ctx = EvaluationContext.tabular(chain_t, xi, dom.features)
        n = dom.mdp.n_states
        return Prepared(
            d=dom.features.d,
            gamma=dom.mdp.gamma,
            theta0=np.array(BAIRD_THETA0),
            context=ctx,
            mdp=dom.mdp,
            behavior=dom.behavior,
            target=dom.target,
            features=dom.features,
            start=StateDistribution(xi=np.full(n, 1.0 / n)),
            xi=xi,
        )
    if config.domain == "random-mdp":
        p = config.domain_params
        spec = RandomMDPSpec(
            n_states=p["n_states"],
            n_actions=p["n_actions"],
            n_features=p["n_features"],
            gamma=p["gamma"],
            seed=p["seed"],
        )
        dom = build_random_mdp(spec)
        chain_b = induce_chain(dom.mdp, dom.behavior)
        xi = stationary_distribution(chain_b.p_pi)
        chain_t = induce_chain(dom.mdp, dom.target)
        ctx = EvaluationContext.tabular(chain_t, xi, dom.features)
        return Prepared(
            d=dom.features.d,
            gamma=dom.mdp.gamma,
            theta0=np.zeros(dom.features.d),
            context=ctx,
            mdp=dom.mdp,
            behavior=dom.behavior,
            target=dom.target,
            features=dom.features,
            start=dom.start,
            xi=xi,
        )
    if config.domain == "mountain-car":
        p = config.domain_params
        features = mountain_car_features(p["order"])
        ctx = mountain_car_context(
            features,
            gamma=p["gamma"],
            grid=p["grid"],
            rollouts=p["rollouts"],
            visit_episodes=p["visit_episodes"],
            seed=p["context_seed"],
        )
        return Prepared(
            d=features.d,
            gamma=p["gamma"],
            theta0=np.zeros(features.d),
            context=ctx,
            mc_order=p["order"],
        )
    raise ValueError(f"unknown domain {config.domain!r}")


def _mc_step_adapter(state, action, rng):
    del rng  # dynamics are deterministic
    return mountain_car_step(state, action)


def _mc_policy_adapter(state, rng):
    del rng
    return energy_pumping_policy(state)


def mountain_car_context(
    features: FeatureMap,
    gamma: float,
    grid: int,
    rollouts: int,
    visit_episodes: int,
    seed: int,
) -> EvaluationContext:
    """Evaluation context over the visited cells of a position x velocity lattice.

    Cell weights are the empirical on-policy visitation frequencies; reference
    values are truncated-return Monte-Carlo estimates from each visited cell
    center (exact here, since policy and dynamics are deterministic).
    """
    rng = np.random.default_rng(seed)
    p_lo, p_hi = MC_POSITION_BOUNDS
    v_lo, v_hi = MC_VELOCITY_BOUNDS
    counts = np.zeros((grid, grid))
    for _ in range(visit_episodes):
        s = mountain_car_start(rng)
        for _ in range(EPISODE_CAP):
            i = min(int((s[0] - p_lo) / (p_hi - p_lo) * grid), grid - 1)
            j = min(int((s[1] - v_lo) / (v_hi - v_lo) * grid), grid - 1)
            counts[i, j] += 1
            s, _, done = mountain_car_step(s, energy_pumping_policy(s))
            if done:
                break
    visited = np.argwhere(counts > 0)
    centers = [
        (
            p_lo + (i + 0.5) * (p_hi - p_lo) / grid,
            v_lo + (j + 0.5) * (v_hi - v_lo) / grid,
        )
        for i, j in visited
    ]
    weights = counts[counts > 0]
    weights = weights / weights.sum()

    horizon = default_horizon(gamma, 1.0)
    v_true, _ = monte_carlo_value(
        _mc_step_adapter,
        _mc_policy_adapter,
        centers,
        n_rollouts=rollouts,
        horizon=horizon,
        gamma=gamma,
        seed=seed,
    )

    d = features.d
    phi_eval = np.array([features.phi(c) for c in centers])
    bell_r = np.empty(len(centers))
    bell_next = np.empty((len(centers), d))
    for k, c in enumerate(centers):
        s2, r, done = mountain_car_step(c, energy_pumping_policy(c))
        bell_r[k] = r
        bell_next[k] = np.zeros(d) if done else features.phi(s2)

    return EvaluationContext(
        v_true=v_true,
        xi_weights=weights,
        phi_eval=phi_eval,
        bellman_reward=bell_r,
        bellman_next_phi=bell_next,
        gamma=gamma,
    )


def collect_mountain_car_samples(n: int, features: FeatureMap, seed: int) -> list[Sample]:
    """On-policy episodic transitions, chained within episodes, terminal-flagged."""
    rng = np.random.default_rng(seed)
    zeros = np.zeros(features.d)
    out: list[Sample] = []
    while len(out) < n:
        s = mountain_car_start(rng)
        phi = features.phi(s)
        for t in range(EPISODE_CAP):
            a = energy_pumping_policy(s)
            s2, r, done = mountain_car_step(s, a)
            truncated = t == EPISODE_CAP - 1
            phi2 = zeros if done else features.phi(s2)
            out.append(
                Sample(
                    s=s,
                    a=a,
                    r=r,
                    s_next=s2,
                    phi=phi,
                    phi_next=phi2,
                    rho=1.0,
                    terminal=done or truncated,
                )
            )
            if done or len(out) >= n:
                break
            s, phi = s2, phi2
    return out[:n]


def generate_run_samples(prepared: Prepared, config: ExperimentConfig, run_seed: int) -> list[Sample]:
    """The sample stream one run feeds to every learner."""
    n = config.steps
    if prepared.mdp is not None:
        if config.sampling == "sequential":
            return generate_sequential(
                prepared.mdp,
                prepared.behavior,
                prepared.target,
                prepared.features,
                prepared.start,
                n,
                run_seed,
            )
        return generate_iid(
            prepared.mdp,
            prepared.behavior,
            prepared.target,
            prepared.features,
            prepared.xi,
            n,
            run_seed,
        )
    features = mountain_car_features(prepared.mc_order)
    samples = collect_mountain_car_samples(n, features, run_seed)
    if config.sampling == "sequential" or not samples:
        return samples
    rng = np.random.default_rng([run_seed, 1])
    return [samples[i] for i in rng.integers(0, len(samples), size=n)]


def _eval_steps(config: ExperimentConfig) -> list[int]:
    steps = {0, config.steps}
    steps.update(range(0, config.steps + 1, config.eval_every))
    return sorted(steps)


def run_single(prepared: Prepared, config: ExperimentConfig, run_idx: int):
    """One run: shared sample stream, every learner stepped, metrics on cadence.

    Returns (points, diverged) where points maps learner index to its curve
    and diverged maps learner index to the divergence step (if any).
    """
    run_seed = config.seed + run_idx
    samples = generate_run_samples(prepared, config, run_seed)
    learners = [
        make_learner(
            spec.kind, prepared.d, spec.alpha, prepared.gamma, prepared.theta0, spec.beta
        )
        for spec in config.learners
    ]
    eval_at = set(_eval_steps(config))
    points: dict[int, list[CurvePoint]] = {i: [] for i in range(len(learners))}

    def record(step):
        for i, lrn in enumerate(learners):
            if lrn.diverged_at is None:
                p = rms(mspbe(lrn.state.theta, prepared.context))
                e = rms(mse(lrn.state.theta, prepared.context))
            else:
                p = e = float("nan")
            points[i].append(CurvePoint(step=step, run=run_idx, rmspbe=p, rmse=e))

    record(0)
    for t, sample in enumerate(samples, start=1):
        for lrn in learners:
            lrn.step(sample)
        if t in eval_at:
            record(t)
    diverged = {
        i: lrn.diverged_at for i, lrn in enumerate(learners) if lrn.diverged_at is not None
    }
    return points, diverged


def _run_single_task(args):
    return run_single(*args)


@dataclass
class LearnerResult:
    """Curves for one configured learner across all runs."""

    name: str
    kind: str
    points: list[CurvePoint]
    aggregate: list[tuple]
    diverged: dict[int, int]

    @property
    def final_rmspbe_mean(self) -> float:
        return self.aggregate[-1][1]

    @property
    def final_rmse_mean(self) -> float:
        return self.aggregate[-1][3]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    learners: list[LearnerResult]

    def learner(self, kind: str) -> LearnerResult:
        for lr in self.learners:
            if lr.kind == kind:
                return lr
        raise KeyError(kind)


def _aggregate(points: list[CurvePoint], n_runs: int) -> list[tuple]:
    by_step: dict[int, list[CurvePoint]] = {}
    for p in points:
        by_step.setdefault(p.step, []).append(p)
    rows = []
    for step in sorted(by_step):
        ps = np.array([p.rmspbe for p in by_step[step]])
        es = np.array([p.rmse for p in by_step[step]])
        if n_runs > 1:
            rows.append(
                (step, ps.mean(), ps.std(ddof=1), es.mean(), es.std(ddof=1))
            )
        else:
            rows.append((step, ps.mean(), 0.0, es.mean(), 0.0))
    return rows


def run_experiment(
    config: ExperimentConfig,
    jobs: int = 1,
    out_dir: str | None = None,
    plot: bool = False,
    write: bool = True,
) -> ExperimentResult:
    """Run all configured runs, aggregate, and (optionally) write CSV output.

    ``jobs`` > 1 dispatches runs to a process pool; collection is ordered by
    run index, so outputs are identical to a serial execution.
    """
    prepared = prepare(config)
    tasks = [(prepared, config, r) for r in range(config.runs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_single_task, tasks))
    else:
        outcomes = [run_single(*t) for t in tasks]

    learners = []
    for i, spec in enumerate(config.learners):
        pts: list[CurvePoint] = []
        diverged: dict[int, int] = {}
        for run_idx, (points, div) in enumerate(outcomes):
            pts.extend(points[i])
            if i in div:
                diverged[run_idx] = div[i]
        learners.append(
            LearnerResult(
                name=f"{i}_{spec.kind}",
                kind=spec.kind,
                points=pts,
                aggregate=_aggregate(pts, config.runs),
                diverged=diverged,
            )
        )
    result = ExperimentResult(config=config, learners=learners)

    if write:
        target_dir = out_dir if out_dir is not None else config.out_dir
        os.makedirs(target_dir, exist_ok=True)
        for lr in result.learners:
            write_runs_csv(os.path.join(target_dir, f"{lr.name}_runs.csv"), lr.points)
            write_aggregate_csv(
                os.path.join(target_dir, f"{lr.name}_aggregate.csv"), lr.aggregate
            )
        if plot:
            from .figures import render_figures

            render_figures(result, target_dir)
    return result
