import numpy as np
import pytest

from gradqueue import (
    AdamState,
    BoostConfig,
    OptimizerConfig,
    SgdmState,
    SparseSignalSpec,
    adam_step,
    sgdm_step,
    sparse_signal,
)


def cfg(boost=False, rho=3.0, lr=0.1, beta=0.9, **kw):
    return OptimizerConfig(
        learning_rate=lr,
        beta=beta,
        boost=BoostConfig(rho=rho),
        boost_enabled=boost,
        **kw,
    )


def random_stream(seed, steps, dim):
    rng = np.random.default_rng(seed)
    return [rng.normal(size=dim) * rng.uniform(0.1, 5.0) for _ in range(steps)]


class TestSgdm:
    def test_first_step_is_plain_sgd(self):
        state = SgdmState.init(np.zeros(1), capacity=5)
        state = sgdm_step(state, np.array([1.0]), cfg())
        assert state.momentum[0] == 1.0
        assert state.params[0] == pytest.approx(-0.1, rel=1e-12)
        assert state.step_count == 1

    def test_periodic_signal_momentum(self):
        # u=-1, C=5, N=3, beta=0.9: momentum after 3 steps is 3.29
        spec = SparseSignalSpec(C=5.0, u=-1.0, N=3)
        state = SgdmState.init(np.zeros(1))
        for t in range(1, 4):
            state = sgdm_step(state, np.array([sparse_signal(t, spec)]), cfg())
        assert state.momentum[0] == pytest.approx(3.29, rel=1e-12)

    def test_rho_one_bit_identical(self):
        stream = random_stream(0, 60, 7)
        plain = SgdmState.init(np.ones(7))
        boosted = SgdmState.init(np.ones(7))
        for g in stream:
            plain = sgdm_step(plain, g, cfg(boost=False))
            boosted = sgdm_step(boosted, g, cfg(boost=True, rho=1.0))
            np.testing.assert_array_equal(plain.params, boosted.params)
            np.testing.assert_array_equal(plain.momentum, boosted.momentum)

    @pytest.mark.parametrize("capacity", [2, 3, 5])
    def test_warmup_steps_identical(self, capacity):
        stream = random_stream(1, 10, 4)
        plain = SgdmState.init(np.zeros(4), capacity=capacity)
        boosted = SgdmState.init(np.zeros(4), capacity=capacity)
        warmup = min(3, capacity)
        for i, g in enumerate(stream):
            plain = sgdm_step(plain, g, cfg(boost=False))
            boosted = sgdm_step(boosted, g, cfg(boost=True, rho=3.0))
            if i < warmup:
                np.testing.assert_array_equal(plain.params, boosted.params)
            else:
                assert not np.array_equal(plain.params, boosted.params)
                break

    def test_deterministic(self):
        def run():
            state = SgdmState.init(np.zeros(5))
            for g in random_stream(3, 40, 5):
                state = sgdm_step(state, g, cfg(boost=True))
            return state.params

        np.testing.assert_array_equal(run(), run())

    def test_momentum_linear_in_stream(self):
        stream = random_stream(4, 25, 3)
        a = SgdmState.init(np.zeros(3))
        b = SgdmState.init(np.zeros(3))
        c = -2.7
        for g in stream:
            a = sgdm_step(a, g, cfg(boost=False))
            b = sgdm_step(b, c * g, cfg(boost=False))
        np.testing.assert_allclose(b.momentum, c * a.momentum, rtol=1e-12)

    def test_raw_gradient_pushed(self):
        state = SgdmState.init(np.zeros(2))
        g = np.array([10.0, -10.0])
        for _ in range(5):
            state = sgdm_step(state, g, cfg(boost=True, rho=3.0))
        np.testing.assert_array_equal(state.queue.as_array()[-1], g)

    def test_dimension_mismatch(self):
        state = SgdmState.init(np.zeros(3))
        with pytest.raises(ValueError, match="dimension"):
            sgdm_step(state, np.zeros(4), cfg())

    def test_momentum_matches_mechanistic_simulator(self):
        # the optimizer on the periodic stream reproduces the standalone
        # boosted-momentum simulation bit for bit (same warm-up rule)
        from gradqueue import LemmaParams, simulate_gq_momentum

        spec = SparseSignalSpec(C=50.0, u=-1.0, N=9)
        for L, rho in ((3, 3.0), (4, 2.0), (5, 5.0)):
            sim = simulate_gq_momentum(
                spec, LemmaParams(beta=0.9, rho=rho, L=L), steps=45
            )
            state = SgdmState.init(np.zeros(1), capacity=L)
            run_cfg = cfg(boost=True, rho=rho, beta=0.9)
            trajectory = []
            for t in range(1, 46):
                state = sgdm_step(state, np.array([sparse_signal(t, spec)]), run_cfg)
                trajectory.append(state.momentum[0])
            np.testing.assert_array_equal(np.array(trajectory), sim)


class TestAdam:
    def test_textbook_first_step(self):
        # bias correction makes the first update magnitude ~ lr
        for g0 in (0.5, -3.0, 40.0):
            state = AdamState.init(np.zeros(1))
            state = adam_step(state, np.array([g0]), cfg(lr=0.01))
            assert abs(state.params[0]) == pytest.approx(0.01, rel=1e-5)
            assert np.sign(state.params[0]) == -np.sign(g0)

    def test_rho_one_bit_identical(self):
        stream = random_stream(5, 50, 6)
        plain = AdamState.init(np.ones(6))
        boosted = AdamState.init(np.ones(6))
        for g in stream:
            plain = adam_step(plain, g, cfg(boost=False, lr=0.01))
            boosted = adam_step(boosted, g, cfg(boost=True, rho=1.0, lr=0.01))
            np.testing.assert_array_equal(plain.params, boosted.params)
            np.testing.assert_array_equal(plain.first_moment, boosted.first_moment)
            np.testing.assert_array_equal(plain.second_moment, boosted.second_moment)

    def test_constant_stream_dampened_by_rho(self):
        # saturated queue: the moment input becomes c/rho, so the
        # bias-corrected first moment converges there
        c, rho = 2.0, 4.0
        state = AdamState.init(np.zeros(1))
        for _ in range(300):
            state = adam_step(state, np.array([c]), cfg(boost=True, rho=rho, lr=0.01))
        m_hat = state.first_moment[0] / (1 - 0.9**state.step_count)
        assert m_hat == pytest.approx(c / rho, rel=1e-6)

    def test_second_moment_nonnegative(self):
        state = AdamState.init(np.zeros(4))
        for g in random_stream(6, 30, 4):
            state = adam_step(state, g, cfg(boost=True))
            assert np.all(state.second_moment >= 0)

    def test_step_count_increments(self):
        state = AdamState.init(np.zeros(2))
        for i in range(4):
            state = adam_step(state, np.ones(2), cfg())
            assert state.step_count == i + 1


class TestConfigValidation:
    def test_learning_rate_positive(self):
        with pytest.raises(ValueError):
            OptimizerConfig(learning_rate=0.0)

    def test_beta_range(self):
        with pytest.raises(ValueError):
            OptimizerConfig(beta=1.0)
        with pytest.raises(ValueError):
            OptimizerConfig(beta=-0.1)
