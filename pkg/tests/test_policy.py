import numpy as np
import pytest

from gridars.policy import (NormalizerStats, PolicyParams, evaluate,
                            load_checkpoint, perturb, save_checkpoint,
                            update_stats)


def identity_stats(dim):
    return NormalizerStats.zeros(dim)


class TestEvaluate:
    def test_zero_weights_zero_output(self):
        obs = np.array([0.1, -3.0, 2.0, 0.0, 1.0, 0.5, 0.9, 1.0, 1.1])
        for kind in ("linear", "mlp"):
            policy = PolicyParams.zeros(kind, 9, 3)
            assert np.array_equal(evaluate(policy, identity_stats(9), obs),
                                  np.zeros(3))

    def test_linear_single_weight(self):
        policy = PolicyParams(kind="linear", theta=np.array([1.0, 0.0]),
                              shape=(2, 1))
        out = evaluate(policy, identity_stats(2), np.array([0.05, 9.9]))
        assert out[0] == pytest.approx(0.05, abs=1e-15)

    def test_linear_clamps_at_bound(self):
        policy = PolicyParams(kind="linear", theta=np.array([1.0, 0.0]),
                              shape=(2, 1))
        out = evaluate(policy, identity_stats(2), np.array([5.0, 0.0]))
        assert out[0] == pytest.approx(0.1, abs=1e-15)

    def test_outputs_always_bounded(self):
        rng = np.random.default_rng(0)
        for kind in ("linear", "mlp"):
            policy = PolicyParams.zeros(kind, 9, 3)
            policy = perturb(policy, rng.normal(size=policy.dim) * 50, 1.0, 1)
            for _ in range(50):
                out = evaluate(policy, identity_stats(9), rng.normal(size=9) * 10)
                assert np.all(np.abs(out) <= 0.1 + 1e-12)

    def test_linear_positively_homogeneous_below_saturation(self):
        rng = np.random.default_rng(1)
        policy = PolicyParams(kind="linear", theta=rng.normal(size=27) * 0.01,
                              shape=(9, 3))
        stats = identity_stats(9)
        for _ in range(20):
            x = rng.normal(size=9)
            base = evaluate(policy, stats, x)
            if np.abs(base).max() >= 0.1:
                continue
            for c in (0.0, 0.3, 0.7, 1.0):
                assert np.allclose(evaluate(policy, stats, c * x), c * base,
                                   atol=1e-12)

    def test_perturb_evaluate_continuity(self):
        rng = np.random.default_rng(2)
        for kind in ("linear", "mlp"):
            policy = PolicyParams.zeros(kind, 9, 3)
            policy = perturb(policy, rng.normal(size=policy.dim), 0.5, 1)
            delta = rng.normal(size=policy.dim)
            obs = rng.normal(size=9)
            a0 = evaluate(policy, identity_stats(9), obs)
            a1 = evaluate(perturb(policy, delta, 1e-6, 1), identity_stats(9), obs)
            assert np.abs(a1 - a0).max() < 1e-4

    def test_dimension_mismatch_raises(self):
        policy = PolicyParams.zeros("linear", 9, 3)
        with pytest.raises(ValueError, match="dimension"):
            evaluate(policy, identity_stats(9), np.zeros(5))


class TestPerturb:
    def test_unit_direction(self):
        policy = PolicyParams.zeros("linear", 9, 3)
        e1 = np.zeros(27)
        e1[0] = 1.0
        out = perturb(policy, e1, 0.03, 1)
        assert out.theta[0] == 0.03
        assert np.all(out.theta[1:] == 0)
        assert np.all(policy.theta == 0)  # original untouched

    def test_sign_roundtrip_restores(self):
        rng = np.random.default_rng(3)
        policy = PolicyParams.zeros("mlp", 9, 3)
        delta = rng.normal(size=policy.dim)
        back = perturb(perturb(policy, delta, 0.03, 1), delta, 0.03, -1)
        assert np.allclose(back.theta, policy.theta, atol=1e-15)

    def test_zero_noise_identity(self):
        policy = PolicyParams.zeros("linear", 9, 3)
        out = perturb(policy, np.ones(27), 0.0, 1)
        assert np.array_equal(out.theta, policy.theta)

    def test_length_mismatch_raises(self):
        policy = PolicyParams.zeros("linear", 9, 3)
        with pytest.raises(ValueError, match="length"):
            perturb(policy, np.zeros(5), 0.1, 1)


class TestNormalizer:
    def test_two_state_batch(self):
        stats = update_stats(NormalizerStats.zeros(2),
                             np.array([[1.0, 1.0], [3.0, 3.0]]))
        assert np.allclose(stats.mean, [2.0, 2.0])
        assert np.allclose(stats.var, [1.0, 1.0])
        assert stats.count == 2

    def test_identical_states_hit_floor(self):
        stats = update_stats(NormalizerStats.zeros(2),
                             np.tile([5.0, -1.0], (40, 1)))
        assert np.allclose(stats.var, 0.0, atol=1e-25)
        assert np.all(stats.var_floored == stats.var_floor)

    def test_sequential_equals_concatenated(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=(137, 5)) * 3 + 1
        b = rng.normal(size=(211, 5)) * 0.2 - 4
        seq = update_stats(update_stats(NormalizerStats.zeros(5), a), b)
        cat = update_stats(NormalizerStats.zeros(5), np.vstack([a, b]))
        assert np.abs(seq.mean - cat.mean).max() < 1e-9
        assert np.abs(seq.var - cat.var).max() < 1e-9

    def test_matches_two_pass_oracle(self):
        rng = np.random.default_rng(5)
        history = rng.normal(size=(10_000, 9)) * rng.uniform(0.1, 10, size=9)
        stats = NormalizerStats.zeros(9)
        # feed in uneven chunks
        idx = 0
        for size in (1, 10, 999, 3000, 5990):
            stats = update_stats(stats, history[idx:idx + size])
            idx += size
        mean = history.mean(axis=0)
        var = history.var(axis=0)
        assert np.abs(stats.mean - mean).max() / np.abs(mean).max() < 1e-9
        assert np.abs(stats.var - var).max() / var.max() < 1e-9

    def test_fresh_stats_normalize_to_identity(self):
        x = np.array([3.0, -2.0])
        assert np.array_equal(NormalizerStats.zeros(2).normalize(x), x)

    def test_whitening_after_updates(self):
        rng = np.random.default_rng(6)
        data = rng.normal(loc=5.0, scale=2.0, size=(5000, 1))
        stats = update_stats(NormalizerStats.zeros(1), data)
        z = stats.normalize(data[:, 0].reshape(-1, 1)[:, 0])
        # whitened history has ~zero mean and ~unit variance
        assert abs(z.mean()) < 1e-9
        assert abs(z.var() - 1.0) < 1e-6

    def test_dimension_mismatch_raises(self):
        with pytest.raises(ValueError):
            update_stats(NormalizerStats.zeros(3), np.zeros((4, 2)))


class TestCheckpoint:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(7)
        policy = perturb(PolicyParams.zeros("mlp", 9, 3),
                         rng.normal(size=483), 0.1, 1)
        stats = update_stats(NormalizerStats.zeros(9), rng.normal(size=(50, 9)))
        path = tmp_path / "ckpt.json"
        adam = {"m": [0.0] * 483, "v": [0.0] * 483, "j": 3,
                "beta1": 0.9, "beta2": 0.999, "lam": 1e-8}
        save_checkpoint(path, policy, stats, config_hash="abc123", adam=adam)
        p2, s2, meta = load_checkpoint(path)
        assert p2.kind == policy.kind
        assert p2.shape == policy.shape
        assert np.array_equal(p2.theta, policy.theta)
        assert s2.count == stats.count
        assert np.array_equal(s2.mean, stats.mean)
        assert np.array_equal(s2.var, stats.var)
        assert meta["config_hash"] == "abc123"
        assert meta["adam"]["j"] == 3

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "not_a_ckpt.json"
        path.write_text('{"magic": "something-else"}')
        with pytest.raises(ValueError, match="not a policy checkpoint"):
            load_checkpoint(path)


def test_theta_size_validation():
    with pytest.raises(ValueError):
        PolicyParams(kind="linear", theta=np.zeros(5), shape=(9, 3))
    with pytest.raises(ValueError):
        PolicyParams(kind="nonsense", theta=np.zeros(27), shape=(9, 3))
    assert PolicyParams.zeros("mlp", 9, 3).dim == (9 + 1) * 16 + 17 * 16 + 17 * 3
