import numpy as np
import pytest

from dcpv._prng import (
    MASK64,
    SplitMix64,
    derive_seed,
    mix64,
    scalar_bounded,
    scalar_uniform,
    words_to_bounded,
    words_to_uniform,
)


def splitmix_reference(seed, n):
    # textbook sequential form
    state, out = seed, []
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


class TestSplitMix64:
    def test_known_first_output(self):
        assert SplitMix64(0).next_u64() == 0xE220A8397B1DCDAF

    def test_known_sequence(self):
        rng = SplitMix64(1234567)
        expected = [6457827717110365317, 3203168211198807973, 9817491932198370423,
                    4593380528125082431, 16408922859458223821]
        assert [rng.next_u64() for _ in range(5)] == expected

    @pytest.mark.parametrize("seed", [0, 1, 42, MASK64, 0xDEADBEEF])
    def test_vector_matches_scalar_reference(self, seed):
        words = SplitMix64(seed).u64(300)
        assert words.dtype == np.uint64
        assert [int(w) for w in words] == splitmix_reference(seed, 300)

    def test_chunked_draws_continue_stream(self):
        a = SplitMix64(9)
        parts = np.concatenate([a.u64(7), a.u64(1), a.u64(20)])
        assert np.array_equal(parts, SplitMix64(9).u64(28))

    def test_uniform_open_interval(self):
        u = SplitMix64(3).uniform(100_000)
        assert u.min() > 0 and u.max() < 1
        assert abs(u.mean() - 0.5) < 0.005

    def test_normal_moments(self):
        z = SplitMix64(5).normal(200_001)
        assert z.size == 200_001
        assert abs(z.mean()) < 0.01
        assert abs(z.std() - 1) < 0.01

    def test_rejects_bad_seed(self):
        with pytest.raises(ValueError):
            SplitMix64(-1)
        with pytest.raises(ValueError):
            SplitMix64(MASK64 + 1)


class TestConversions:
    def test_scalar_and_vector_agree(self):
        words = SplitMix64(11).u64(500)
        assert np.array_equal(words_to_uniform(words), [scalar_uniform(int(w)) for w in words])
        for bound in (1, 2, 7, 511):
            vec = words_to_bounded(words, bound)
            assert vec.min() >= 0 and vec.max() < bound
            assert list(vec) == [scalar_bounded(int(w), bound) for w in words]

    def test_bounded_is_roughly_uniform(self):
        counts = np.bincount(words_to_bounded(SplitMix64(1).u64(60_000), 6), minlength=6)
        assert np.all(np.abs(counts / 60_000 - 1 / 6) < 0.01)


class TestDeriveSeed:
    def test_deterministic_and_label_sensitive(self):
        assert derive_seed(5, "k1", "s001") == derive_seed(5, "k1", "s001")
        assert derive_seed(5, "k1", "s001") != derive_seed(5, "k1", "s002")
        assert derive_seed(5, "a", "bc") != derive_seed(5, "ab", "c")
        assert derive_seed(5, "x") != derive_seed(6, "x")

    def test_in_range(self):
        for i in range(50):
            assert 0 <= derive_seed(i, "restart", i) <= MASK64

    def test_mix64_bijective_sample(self):
        outs = {mix64(i) for i in range(10_000)}
        assert len(outs) == 10_000
