import math

import numpy as np
import pytest

from dcpv.errors import DimensionError, ParameterError
from dcpv.losses import ContrastiveBatch, contrastive_loss, cross_entropy, hybrid_loss


def nested_contrastive(z, labels, tau):
    n = len(z)
    total = 0.0
    for i in range(n):
        pos = [j for j in range(n) if j != i and labels[j] == labels[i]]
        if not pos:
            continue
        denom = sum(math.exp(float(np.dot(z[i], z[a])) / tau) for a in range(n) if a != i)
        acc = 0.0
        for p in pos:
            acc += math.log(math.exp(float(np.dot(z[i], z[p])) / tau) / denom)
        total += -acc / len(pos)
    return total


class TestCrossEntropy:
    @pytest.mark.parametrize("S", [2, 10, 100])
    def test_uniform_is_log_s(self, S):
        q = np.full((5, S), 1.0 / S)
        assert abs(cross_entropy(q, np.arange(5) % S) - math.log(S)) < 1e-12

    def test_one_hot_is_zero(self):
        assert cross_entropy(np.eye(3), np.arange(3)) == 0.0

    def test_floor(self):
        q = np.array([[1.0, 0.0]])
        assert cross_entropy(q, [1]) == pytest.approx(-math.log(1e-12))

    def test_validation(self):
        with pytest.raises(ParameterError):
            cross_entropy(np.array([[0.6, 0.6]]), [0])
        with pytest.raises(ParameterError):
            cross_entropy(np.array([[0.5, 0.5]]), [2])
        with pytest.raises(DimensionError):
            cross_entropy(np.array([0.5, 0.5]), [0])


class TestContrastive:
    def test_matches_nested_loop(self, rng):
        for _ in range(30):
            n = 2 * int(rng.integers(1, 9))
            z = rng.standard_normal((n, 6))
            z /= np.linalg.norm(z, axis=1, keepdims=True)
            labels = rng.integers(0, 3, n)
            batch = ContrastiveBatch(z, labels, tau=0.5)
            assert abs(contrastive_loss(batch) - nested_contrastive(z, labels, 0.5)) < 1e-10

    def test_no_positives_gives_zero(self):
        z = np.eye(4)
        assert contrastive_loss(ContrastiveBatch(z, np.arange(4))) == 0.0

    def test_stable_at_small_tau(self, rng):
        z = rng.standard_normal((8, 4))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        val = contrastive_loss(ContrastiveBatch(z, np.repeat(np.arange(4), 2), tau=1e-3))
        assert math.isfinite(val)

    def test_batch_validation(self):
        with pytest.raises(DimensionError):
            ContrastiveBatch(np.zeros((3, 2)), np.zeros(3))
        with pytest.raises(DimensionError):
            ContrastiveBatch(np.zeros((4, 2)), np.zeros(3))
        with pytest.raises(ParameterError):
            ContrastiveBatch(np.zeros((2, 2)), np.zeros(2), tau=0)


class TestHybrid:
    def test_exact_value(self):
        assert hybrid_loss(1, 2, 0.8) == 1.2

    def test_endpoints_and_range(self):
        assert hybrid_loss(3.0, 5.0, 1.0) == 3.0
        assert hybrid_loss(3.0, 5.0, 0.0) == 5.0
        with pytest.raises(ParameterError):
            hybrid_loss(1, 1, 1.5)
