import numpy as np
import pytest

from dcpv.errors import DimensionError, ParameterError, SecurityPolicyError
from dcpv.ndb import IntervalSet
from dcpv.pipeline import (
    PER_USER_KEY,
    SHARED_KEY,
    Params,
    enroll,
    evaluate_features,
    subject_k1,
    unlinkability_features,
    verify_feature,
)
from dcpv.synthetic import make_corpus


@pytest.fixture(scope="module")
def corpus():
    return make_corpus(n_classes=8, n_samples=4, dim=96, sigma=0.15, seed=3, noise="vector")


class TestParams:
    def test_default_m_p(self):
        assert Params().resolve_m_p(384) == 384
        assert Params().resolve_m_p(2000) == 512
        with pytest.raises(DimensionError):
            Params(m_p=100).resolve_m_p(50)

    def test_validation(self):
        with pytest.raises(ParameterError):
            Params(K=4)
        with pytest.raises(ParameterError):
            Params(r=0)
        with pytest.raises(ParameterError):
            Params(m_p=3).resolve_m_p(10)

    def test_key_modes(self):
        assert subject_k1(5, "a", SHARED_KEY) == 5
        assert subject_k1(5, "a", PER_USER_KEY) != subject_k1(5, "b", PER_USER_KEY)
        with pytest.raises(ParameterError):
            subject_k1(5, "a", "group")


class TestEnrollVerify:
    def test_genuine_and_imposter(self, corpus):
        rec = enroll(corpus[0], 11, 22)
        assert rec.ndb.m == 96 and rec.ndb.N == 384
        assert verify_feature(rec, corpus[1], 11).accepted
        assert not verify_feature(rec, corpus[4], 11).accepted

    def test_wrong_token_rejected(self, corpus):
        rec = enroll(corpus[0], 11, 22)
        assert not verify_feature(rec, corpus[0], 12).accepted

    def test_unsafe_params_refused(self, corpus):
        with pytest.raises(SecurityPolicyError):
            enroll(corpus[0], 1, 2, Params(P=IntervalSet((0, 0, 1))))


class TestEvaluate:
    def test_pair_counts_and_ranges(self, corpus):
        res = evaluate_features(corpus, 1, 2)
        assert res.scores.genuine.size == 8 * 6
        assert res.scores.imposter.size == 32 * 31 // 2 - 48
        assert np.all((res.scores.genuine >= 0) & (res.scores.genuine <= 1))
        assert res.eer[0] <= 0.05

    def test_per_user_mode(self, corpus):
        res = evaluate_features(corpus, 1, 2, key_mode=PER_USER_KEY)
        assert res.key_mode == PER_USER_KEY
        assert abs(res.scores.imposter.mean() - 0.5) < 0.01

    def test_needs_both_kinds(self, corpus):
        with pytest.raises(ParameterError):
            evaluate_features(corpus[:4], 1, 2)

    def test_unlinkability_counts(self, corpus):
        run = unlinkability_features(corpus, 1, 2, bins=20)
        assert run.mated.size == 8 * 16
        assert run.non_mated.size == 32 * 32 - 128
        assert 0.0 <= run.result.d_sys <= 1.0
