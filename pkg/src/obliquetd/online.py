"""Per-step learners sharing one step interface.

All learners mutate their own LearnerState and never share it. A step that
would produce non-finite weights (or push them past the divergence bound) is
rejected: the weights keep their pre-step values and the learner freezes with
``diverged_at`` set, so the harness can record the divergence step instead of
crashing the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSampleError, SequentialSamplingError
from .mdp import Sample

DIVERGENCE_LIMIT = 1e12
DEGENERATE_NORM_SQ = 1e-12


@dataclass
class LearnerState:
    """Mutable per-run learner state."""

    theta: np.ndarray
    aux: np.ndarray = field(default_factory=lambda: np.zeros(0))
    follow_on: float = 1.0
    step: int = 0


@dataclass(frozen=True)
class StepRecord:
    """What one step did: TD error, per-sample scale (O2TD only), skip flag."""

    delta: float
    scale: float | None = None
    skipped: bool = False


def o2td_scale(phi: np.ndarray, diff_phi: np.ndarray, rho: float) -> float:
    """Closed-form per-sample scale: (diff_phi . phi) / (rho * ||diff_phi||^2).

    ``diff_phi`` is the importance-weighted discounted feature difference
    rho * (phi - gamma * phi_next). This is the exact minimizer of
    ||w * rho * diff_phi - phi||^2, which coincides for the Frobenius and
    trace norms of the corresponding rank-1 matrix objective.
    """
    if rho <= 0:
        raise ValueError("per-sample scale requires a positive importance ratio")
    denom = float(np.dot(diff_phi, diff_phi))
    if denom < DEGENERATE_NORM_SQ:
        raise DegenerateSampleError(
            f"feature difference norm^2 {denom:.3e} below {DEGENERATE_NORM_SQ}"
        )
    return float(np.dot(diff_phi, phi)) / (rho * denom)


class Learner:
    """Shared stepping machinery; subclasses implement _update."""

    needs_sequential = False

    def __init__(self, d: int, alpha: float, gamma: float, theta0=None):
        if alpha <= 0:
            raise ValueError("step size must be positive")
        theta = np.zeros(d) if theta0 is None else np.array(theta0, dtype=float)
        if theta.shape != (d,):
            raise ValueError(f"theta0 must have length {d}")
        self.alpha = float(alpha)
        self.gamma = float(gamma)
        self.state = LearnerState(theta=theta)
        self.diverged_at: int | None = None

    def td_error(self, sample: Sample) -> float:
        theta = self.state.theta
        return float(
            sample.r
            + self.gamma * np.dot(sample.phi_next, theta)
            - np.dot(sample.phi, theta)
        )

    def step(self, sample: Sample) -> StepRecord:
        if self.diverged_at is not None:
            return StepRecord(delta=0.0, skipped=True)
        record = self._update(sample)
        self.state.step += 1
        return record

    def _commit(self, theta: np.ndarray, aux: np.ndarray | None = None) -> bool:
        """Accept the proposed weights unless they are non-finite or exploded."""
        candidates = theta if aux is None else np.concatenate([theta, aux])
        peak = np.max(np.abs(candidates))
        # NaN fails the comparison too, so one reduction covers both checks
        if not peak <= DIVERGENCE_LIMIT:
            self.diverged_at = self.state.step
            return False
        self.state.theta = theta
        if aux is not None:
            self.state.aux = aux
        return True

    def _update(self, sample: Sample) -> StepRecord:
        raise NotImplementedError


class O2TD(Learner):
    """Online optimal TD: each update scaled by the closed-form rank-1 minimizer."""

    def _update(self, sample: Sample) -> StepRecord:
        delta = self.td_error(sample)
        if sample.rho == 0.0:
            return StepRecord(delta=delta, skipped=True)
        diff_phi = sample.rho * (sample.phi - self.gamma * sample.phi_next)
        try:
            scale = o2td_scale(sample.phi, diff_phi, sample.rho)
        except DegenerateSampleError:
            return StepRecord(delta=delta, skipped=True)
        if not np.isfinite(scale) or not np.isfinite(delta):
            self.diverged_at = self.state.step
            return StepRecord(delta=delta, scale=scale, skipped=True)
        theta = self.state.theta + self.alpha * sample.rho * scale * delta * sample.phi
        ok = self._commit(theta)
        return StepRecord(delta=delta, scale=scale, skipped=not ok)


class TD0(Learner):
    """Plain importance-weighted TD(0)."""

    def _update(self, sample: Sample) -> StepRecord:
        delta = self.td_error(sample)
        theta = self.state.theta + self.alpha * sample.rho * delta * sample.phi
        ok = self._commit(theta)
        return StepRecord(delta=delta, skipped=not ok)


class ResidualGradient(Learner):
    """Single-sample gradient descent on half the squared TD error."""

    def _update(self, sample: Sample) -> StepRecord:
        delta = self.td_error(sample)
        grad = delta * (self.gamma * sample.phi_next - sample.phi)
        theta = self.state.theta - self.alpha * sample.rho * grad
        ok = self._commit(theta)
        return StepRecord(delta=delta, skipped=not ok)


class GTD2(Learner):
    """Gradient TD with secondary weights; both vectors updated from pre-step values."""

    def __init__(self, d, alpha, gamma, theta0=None, beta=None):
        super().__init__(d, alpha, gamma, theta0)
        if beta is not None and beta <= 0:
            raise ValueError("secondary step size must be positive")
        self.beta = float(beta) if beta is not None else float(alpha)
        self.state.aux = np.zeros(d)

    def _update(self, sample: Sample) -> StepRecord:
        delta = self.td_error(sample)
        y = self.state.aux
        phi_dot_y = float(np.dot(sample.phi, y))
        new_y = y + self.beta * (sample.rho * delta - phi_dot_y) * sample.phi
        new_theta = self.state.theta + self.alpha * sample.rho * (
            sample.phi - self.gamma * sample.phi_next
        ) * phi_dot_y
        ok = self._commit(new_theta, new_y)
        return StepRecord(delta=delta, skipped=not ok)


class ETD(Learner):
    """Emphatic TD(0): updates weighted by the scalar follow-on trace.

    Requires a chained sample stream (s of each sample equals s_next of the
    previous one); a terminal sample ends the episode and the trace restarts
    at 1 on the next sample.
    """

    needs_sequential = True

    def __init__(self, d, alpha, gamma, theta0=None):
        super().__init__(d, alpha, gamma, theta0)
        self._prev_rho: float | None = None
        self._expected_s = None

    def _update(self, sample: Sample) -> StepRecord:
        expected = self._expected_s
        if expected is not None:
            if isinstance(expected, (int, np.integer)):
                chained = sample.s == expected
            else:
                chained = np.array_equal(sample.s, expected)
            if not chained:
                raise SequentialSamplingError(
                    f"emphatic TD requires chained samples: expected state {expected}, "
                    f"got {sample.s}"
                )
        # follow-on first, using the previous step's importance ratio
        if self._prev_rho is None:
            self.state.follow_on = 1.0
        else:
            self.state.follow_on = 1.0 + self.gamma * self._prev_rho * self.state.follow_on
        delta = self.td_error(sample)
        theta = (
            self.state.theta
            + self.alpha * self.state.follow_on * sample.rho * delta * sample.phi
        )
        ok = self._commit(theta)
        if not np.isfinite(self.state.follow_on):
            self.diverged_at = self.state.step
            ok = False
        if sample.terminal:
            self._prev_rho = None
            self._expected_s = None
        else:
            self._prev_rho = sample.rho
            self._expected_s = sample.s_next
        return StepRecord(delta=delta, skipped=not ok)


LEARNER_KINDS = {
    "o2td": O2TD,
    "etd": ETD,
    "gtd2": GTD2,
    "td0": TD0,
    "rg": ResidualGradient,
}


def make_learner(kind: str, d: int, alpha: float, gamma: float, theta0=None, beta=None):
    """Instantiate a learner by its registry name."""
    if kind not in LEARNER_KINDS:
        raise ValueError(f"unknown learner kind {kind!r}; expected one of {sorted(LEARNER_KINDS)}")
    if kind == "gtd2":
        return GTD2(d, alpha, gamma, theta0, beta)
    return LEARNER_KINDS[kind](d, alpha, gamma, theta0)
