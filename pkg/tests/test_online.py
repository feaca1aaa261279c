import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import golden_section_minimize, off_policy_instance, uniform_dist
from obliquetd.errors import DegenerateSampleError, SequentialSamplingError
from obliquetd.mdp import FeatureMap, Sample, generate_iid, generate_sequential, induce_chain
from obliquetd.metrics import EvaluationContext, mse
from obliquetd.online import ETD, GTD2, O2TD, TD0, ResidualGradient, make_learner, o2td_scale


def sample_of(phi, phi_next, r=0.0, rho=1.0, s=0, s_next=1, terminal=False):
    return Sample(s=s, a=0, r=r, s_next=s_next, phi=np.asarray(phi, float),
                  phi_next=np.asarray(phi_next, float), rho=rho, terminal=terminal)


class TestScale:
    def test_self_alignment_is_one(self):
        phi = np.array([1.0, 2.0, -1.0])
        assert o2td_scale(phi, phi, rho=1.0) == pytest.approx(1.0)

    def test_orthogonal_difference_is_zero(self):
        phi = np.array([1.0, 0.0])
        diff = np.array([0.0, 3.0])
        assert o2td_scale(phi, diff, rho=2.0) == 0.0

    def test_matches_golden_section_oracle(self, rng):
        for _ in range(50):
            phi = rng.normal(size=4)
            diff = rng.normal(size=4)
            rho = rng.random() + 0.1
            w = o2td_scale(phi, diff, rho)
            oracle = golden_section_minimize(
                lambda t: np.sum((t * rho * diff - phi) ** 2), -1e6, 1e6
            )
            assert abs(w - oracle) < 1e-6

    def test_local_minimality(self, rng):
        phi = rng.normal(size=5)
        diff = rng.normal(size=5)
        rho = 0.7

        def objective(t):
            m = t * rho * np.outer(phi, diff) - np.outer(phi, phi)
            return np.sum(m * m)

        w = o2td_scale(phi, diff, rho)
        assert objective(w) <= objective(w + 1e-3) + 1e-15
        assert objective(w) <= objective(w - 1e-3) + 1e-15

    def test_degenerate_difference_raises(self):
        with pytest.raises(DegenerateSampleError):
            o2td_scale(np.ones(3), np.zeros(3), rho=1.0)

    def test_nonpositive_rho_rejected(self):
        with pytest.raises(ValueError):
            o2td_scale(np.ones(3), np.ones(3), rho=0.0)


class TestO2TDStep:
    def test_zero_rho_skipped(self):
        lrn = O2TD(d=2, alpha=0.1, gamma=0.9, theta0=np.array([1.0, 2.0]))
        rec = lrn.step(sample_of([1, 0], [0, 1], r=1.0, rho=0.0))
        assert rec.skipped
        np.testing.assert_array_equal(lrn.state.theta, [1.0, 2.0])

    def test_zero_td_error_no_change(self):
        theta0 = np.array([1.0, 1.0])
        lrn = O2TD(d=2, alpha=0.1, gamma=0.5, theta0=theta0)
        # r + gamma phi' theta - phi theta = 1 + 0.5 - 1.5 = 0
        rec = lrn.step(sample_of([1.0, 0.5], [1.0, 0.0], r=1.0))
        assert rec.delta == pytest.approx(0.0)
        np.testing.assert_allclose(lrn.state.theta, theta0, atol=1e-15)

    def test_hand_computed_single_step(self):
        lrn = O2TD(d=2, alpha=0.1, gamma=0.0, theta0=np.zeros(2))
        rec = lrn.step(sample_of([1.0, 0.0], [0.0, 1.0], r=1.0, rho=1.0))
        assert rec.scale == pytest.approx(1.0)
        assert rec.delta == pytest.approx(1.0)
        np.testing.assert_allclose(lrn.state.theta, [0.1, 0.0], atol=1e-15)

    def test_degenerate_sample_skipped_and_recorded(self):
        lrn = O2TD(d=2, alpha=0.1, gamma=1.0 - 1e-12, theta0=np.ones(2))
        # phi == gamma phi_next (approximately) -> vanishing difference
        rec = lrn.step(sample_of([1.0, 0.0], [1.0, 0.0], r=0.0))
        assert rec.skipped
        np.testing.assert_array_equal(lrn.state.theta, [1.0, 1.0])


class TestETD:
    def test_follow_on_unrolled_sequence(self):
        lrn = ETD(d=1, alpha=1e-9, gamma=0.5, theta0=np.zeros(1))
        traces = []
        for t in range(4):
            lrn.step(sample_of([1.0], [1.0], s=t, s_next=t + 1))
            traces.append(lrn.state.follow_on)
        np.testing.assert_allclose(traces, [1.0, 1.5, 1.75, 1.875])

    def test_gamma_zero_equals_weighted_td0(self, rng):
        theta0 = rng.normal(size=3)
        etd = ETD(d=3, alpha=0.05, gamma=0.0, theta0=theta0)
        td = TD0(d=3, alpha=0.05, gamma=0.0, theta0=theta0)
        s = 0
        for k in range(20):
            phi = rng.normal(size=3)
            phi2 = rng.normal(size=3)
            smp = sample_of(phi, phi2, r=float(k % 3), rho=0.5 + k % 2, s=s, s_next=s + 1)
            etd.step(smp)
            td.step(smp)
            s += 1
        assert etd.state.follow_on == 1.0
        np.testing.assert_allclose(etd.state.theta, td.state.theta, atol=1e-14)

    def test_broken_chain_rejected(self):
        lrn = ETD(d=1, alpha=0.01, gamma=0.9, theta0=np.zeros(1))
        lrn.step(sample_of([1.0], [1.0], s=0, s_next=1))
        with pytest.raises(SequentialSamplingError):
            lrn.step(sample_of([1.0], [1.0], s=5, s_next=6))

    def test_terminal_resets_trace_and_chain(self):
        lrn = ETD(d=1, alpha=1e-9, gamma=0.5, theta0=np.zeros(1))
        lrn.step(sample_of([1.0], [1.0], s=0, s_next=1))
        lrn.step(sample_of([1.0], [0.0], s=1, s_next=2, terminal=True))
        assert lrn.state.follow_on == 1.5
        # new episode starts anywhere; trace restarts at 1
        lrn.step(sample_of([1.0], [1.0], s=7, s_next=8))
        assert lrn.state.follow_on == 1.0

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(min_value=0.0, max_value=3.0), min_size=1, max_size=50))
    def test_follow_on_never_below_one(self, rhos):
        lrn = ETD(d=1, alpha=1e-9, gamma=0.9, theta0=np.zeros(1))
        for t, rho in enumerate(rhos):
            lrn.step(sample_of([1.0], [1.0], rho=rho, s=t, s_next=t + 1))
            assert lrn.state.follow_on >= 1.0


class TestGTD2:
    def test_cold_start_theta_unchanged(self, rng):
        theta0 = rng.normal(size=3)
        lrn = GTD2(d=3, alpha=0.1, gamma=0.9, theta0=theta0)
        lrn.step(sample_of(rng.normal(size=3), rng.normal(size=3), r=1.0))
        np.testing.assert_array_equal(lrn.state.theta, theta0)
        assert np.any(lrn.state.aux != 0.0)

    def test_zero_rho_theta_unchanged(self, rng):
        theta0 = rng.normal(size=3)
        lrn = GTD2(d=3, alpha=0.1, gamma=0.9, theta0=theta0)
        lrn.state.aux = rng.normal(size=3)
        lrn.step(sample_of(rng.normal(size=3), rng.normal(size=3), r=1.0, rho=0.0))
        np.testing.assert_array_equal(lrn.state.theta, theta0)

    def test_beta_defaults_to_alpha(self):
        lrn = GTD2(d=2, alpha=0.05, gamma=0.9)
        assert lrn.beta == 0.05


class TestBaselines:
    def test_td0_reduces_mse_on_policy(self, rng):
        mdp, behavior, _, features, xi = off_policy_instance(
            rng, n_states=3, n_actions=2, d=2, gamma=0.5
        )
        chain = induce_chain(mdp, behavior)
        ctx = EvaluationContext.tabular(chain, xi, features)
        samples = generate_iid(mdp, behavior, behavior, features, xi, 10_000, seed=6)
        lrn = TD0(d=2, alpha=0.02, gamma=0.5)
        before = mse(lrn.state.theta, ctx)
        for s in samples:
            lrn.step(s)
        assert lrn.diverged_at is None
        assert mse(lrn.state.theta, ctx) < before

    def test_td0_and_rg_coincide_at_gamma_zero(self, rng):
        theta0 = rng.normal(size=3)
        td = TD0(d=3, alpha=0.1, gamma=0.0, theta0=theta0)
        rg = ResidualGradient(d=3, alpha=0.1, gamma=0.0, theta0=theta0)
        for k in range(10):
            smp = sample_of(rng.normal(size=3), rng.normal(size=3), r=float(k), rho=0.8)
            td.step(smp)
            rg.step(smp)
        np.testing.assert_allclose(td.state.theta, rg.state.theta, atol=1e-14)

    def test_divergence_freezes_learner(self):
        lrn = TD0(d=1, alpha=1e9, gamma=0.0, theta0=np.array([1.0]))
        smp = sample_of([1e4], [0.0], r=1.0)
        for _ in range(40):
            lrn.step(smp)
            assert np.isfinite(lrn.state.theta).all()
        assert lrn.diverged_at is not None
        frozen = lrn.state.theta.copy()
        rec = lrn.step(smp)
        assert rec.skipped
        np.testing.assert_array_equal(lrn.state.theta, frozen)


class TestRankOneResults:
    def test_trace_equals_inner_product(self, rng):
        for _ in range(100):
            p = rng.normal(size=rng.integers(2, 9))
            q = rng.normal(size=p.shape[0])
            assert abs(np.trace(np.outer(p, q)) - p @ q) < 1e-12

    def test_single_nonzero_singular_value(self, rng):
        for _ in range(100):
            u = rng.normal(size=rng.integers(2, 7))
            v = rng.normal(size=rng.integers(2, 7))
            svals = np.linalg.svd(np.outer(u, v), compute_uv=False)
            assert abs(svals[0] - np.linalg.norm(u) * np.linalg.norm(v)) < 1e-10
            if svals.shape[0] > 1:
                assert svals[1] < 1e-10

    def test_trace_norm_equals_frobenius_for_rank_one(self, rng):
        for _ in range(100):
            m = np.outer(rng.normal(size=5), rng.normal(size=4))
            svals = np.linalg.svd(m, compute_uv=False)
            assert abs(svals.sum() - np.linalg.norm(m)) < 1e-10

    def test_frobenius_and_trace_objectives_share_minimizer(self, rng):
        phi = rng.normal(size=4)
        diff = rng.normal(size=4)
        rho = 1.3
        w = o2td_scale(phi, diff, rho)

        def frob(t):
            return np.linalg.norm(t * rho * np.outer(phi, diff) - np.outer(phi, phi))

        def nuclear(t):
            return np.linalg.svd(
                t * rho * np.outer(phi, diff) - np.outer(phi, phi), compute_uv=False
            ).sum()

        assert abs(frob(w) - nuclear(w)) < 1e-10  # rank-1 norm equivalence at optimum


class TestDeterminism:
    def test_theta_trajectory_replays_bit_identically(self, rng):
        mdp, behavior, target, features, xi = off_policy_instance(rng)
        for kind in ("o2td", "etd", "gtd2", "td0", "rg"):
            gen = generate_sequential if kind == "etd" else generate_iid
            dist = uniform_dist(mdp.n_states)
            thetas = []
            for _ in range(2):
                samples = gen(mdp, behavior, target, features, dist, 200, 77)
                lrn = make_learner(kind, features.d, 1e-3, mdp.gamma)
                for s in samples:
                    lrn.step(s)
                thetas.append(lrn.state.theta.copy())
            np.testing.assert_array_equal(thetas[0], thetas[1])

    def test_make_learner_rejects_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown learner kind"):
            make_learner("sarsa", 3, 0.1, 0.9)
