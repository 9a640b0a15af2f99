"""End-to-end enrollment, verification and evaluation protocols.

Token handling: one first-level token ``k1`` and one second-level token
``k2`` are supplied by the caller. Per-subject and per-enrollment seeds are
derived from them with :func:`dcpv._prng.derive_seed`, so runs are
reproducible from the two tokens alone.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._prng import derive_seed
from .cancelable import (
    DEFAULT_M_P,
    CancelableTemplate,
    ProjectionKey,
    binarize,
    gen_projection_matrix,
    protect,
)
from .errors import DimensionError, ParameterError
from .evaluation import ScoreSet, eer, unlinkability
from .ndb import (
    DEFAULT_K,
    DEFAULT_P,
    DEFAULT_R,
    IntervalSet,
    default_threshold,
    generate_ndb,
    verify,
)
from .store import EnrollmentRecord

SHARED_KEY = "shared"
PER_USER_KEY = "per-user"


@dataclass(frozen=True)
class Params:
    """Public enrollment parameters; ``m_p=None`` means min(512, m_f)."""

    m_p: int | None = None
    K: int = DEFAULT_K
    r: int = DEFAULT_R
    P: IntervalSet = field(default_factory=lambda: IntervalSet(DEFAULT_P))
    allow_unsafe: bool = False

    def __post_init__(self):
        if self.P.K != self.K:
            raise ParameterError(f"P has {self.P.K} probabilities but K={self.K}")
        if self.r < 1:
            raise ParameterError("r must be a positive integer")
        if self.m_p is not None and self.m_p < 2:
            raise ParameterError("m_p must be >= 2")

    def resolve_m_p(self, m_f):
        m_p = self.m_p if self.m_p is not None else min(DEFAULT_M_P, m_f)
        if m_p > m_f:
            raise DimensionError(f"m_p={m_p} exceeds feature length m_f={m_f}")
        if m_p <= self.K:
            raise ParameterError(f"m_p={m_p} must exceed K={self.K}")
        return m_p

    @property
    def threshold(self):
        return default_threshold(self.P)


def subject_k1(k1, subject_id, key_mode):
    if key_mode == SHARED_KEY:
        return k1
    if key_mode == PER_USER_KEY:
        return derive_seed(k1, "k1", subject_id)
    raise ParameterError(f"unknown key mode {key_mode!r}")


def enrollment_k2(k2, subject_id, sample_index=0):
    return derive_seed(k2, "k2", subject_id, sample_index)


def enroll(feature, k1, k2, params=Params()):
    """Protect ``feature`` and wrap its NDB in an :class:`EnrollmentRecord`."""
    m_p = params.resolve_m_p(feature.m_f)
    b = protect(feature, ProjectionKey(k1, feature.m_f, m_p))
    ndb = generate_ndb(b, k2, params.r, params.P, allow_unsafe=params.allow_unsafe)
    return EnrollmentRecord(feature.subject_id, ndb, params.P)


def verify_feature(record, feature, k1, threshold=None):
    threshold = default_threshold(record.P) if threshold is None else threshold
    key = ProjectionKey(k1, feature.m_f, record.ndb.m)
    return verify(record.ndb, protect(feature, key), threshold)


def _stack(features):
    features = list(features)
    if not features:
        raise ParameterError("no features given")
    m_f = features[0].m_f
    if any(f.m_f != m_f for f in features):
        raise DimensionError("all features must share one dimension")
    return features, np.stack([f.values for f in features]), m_f


def _templates(values, subjects, k1, m_p, key_mode, salt=""):
    """Bit templates (n, m_p), one projection matrix per distinct key."""
    out = np.zeros((len(subjects), m_p), dtype=np.uint8)
    m_f = values.shape[1]
    cache = {}
    for idx, subject in enumerate(subjects):
        seed = subject_k1(k1, f"{salt}{subject}" if salt else subject, key_mode)
        if seed not in cache:
            cache[seed] = gen_projection_matrix(ProjectionKey(seed, m_f, m_p))
        out[idx] = binarize(values[idx] @ cache[seed].basis).bits
    return out


def _column_sums(bits, subjects, k2, params, salt=""):
    sums = np.zeros(bits.shape, dtype=np.int64)
    for idx, (row, subject) in enumerate(zip(bits, subjects)):
        seed = enrollment_k2(k2, f"{salt}{subject}" if salt else subject, idx)
        ndb = generate_ndb(CancelableTemplate(row), seed, params.r, params.P,
                           allow_unsafe=params.allow_unsafe)
        sums[idx] = ndb.column_sums()
    return sums


def _distances(sums, bits, specified):
    raw = sums @ (2 * bits.astype(np.int64) - 1).T
    return np.arccos(np.clip(raw / specified, -1.0, 1.0)) / math.pi


@dataclass(frozen=True, eq=False)
class EvaluationResult:
    scores: ScoreSet
    baseline: ScoreSet
    first_level: ScoreSet
    eer: tuple
    baseline_eer: tuple
    first_level_eer: tuple
    key_mode: str
    m_p: int


def evaluate_features(features, k1, k2, params=Params(), key_mode=SHARED_KEY):
    """Genuine/imposter distances over all pairs ``i < j`` in input order.

    Sample ``i`` is enrolled as an NDB and sample ``j`` is the query. Also
    returns the unprotected cosine baseline (arccos(cos)/pi) and the
    first-level normalized Hamming distance on the same pairs. In per-user
    mode every sample is protected under its own subject's key.
    """
    features, values, m_f = _stack(features)
    m_p = params.resolve_m_p(m_f)
    subjects = [f.subject_id for f in features]
    bits = _templates(values, subjects, k1, m_p, key_mode)
    sums = _column_sums(bits, subjects, k2, params)
    n = len(features)
    dist = _distances(sums, bits, m_p * params.r * params.K)

    norms = np.linalg.norm(values, axis=1)
    if np.any(norms == 0):
        raise ParameterError("zero feature vector has no direction")
    unit = values / norms[:, None]
    base = np.arccos(np.clip(unit @ unit.T, -1.0, 1.0)) / math.pi
    bipolar = 2 * bits.astype(np.int64) - 1
    hamming = (m_p - bipolar @ bipolar.T) / (2 * m_p)

    iu, ju = np.triu_indices(n, 1)
    labels = np.array(subjects, dtype=object)
    same = labels[iu] == labels[ju]
    if not same.any() or same.all():
        raise ParameterError("evaluation needs both genuine and imposter pairs")

    def split(mat):
        vals = mat[iu, ju]
        return ScoreSet(vals[same], vals[~same])

    scores, baseline, first = split(dist), split(base), split(hamming)
    return EvaluationResult(scores, baseline, first, eer(scores), eer(baseline), eer(first),
                            key_mode, m_p)


@dataclass(frozen=True, eq=False)
class UnlinkabilityRun:
    mated: np.ndarray
    non_mated: np.ndarray
    result: object


def unlinkability_features(features, k1, k2, params=Params(), bins=100, omega=1.0,
                           binning="quantile"):
    """Mated/non-mated scores across two independent per-user key sets.

    Enrollment uses keys derived with salt "A" and fresh second-level seeds;
    queries use keys derived with salt "B". Mated pairs are all sample pairs
    of one subject (including the same sample), non-mated pairs are all
    cross-subject pairs.
    """
    features, values, m_f = _stack(features)
    m_p = params.resolve_m_p(m_f)
    subjects = [f.subject_id for f in features]
    bits_a = _templates(values, subjects, k1, m_p, PER_USER_KEY, salt="A:")
    bits_b = _templates(values, subjects, k1, m_p, PER_USER_KEY, salt="B:")
    sums = _column_sums(bits_a, subjects, k2, params, salt="A:")
    dist = _distances(sums, bits_b, m_p * params.r * params.K)
    labels = np.array(subjects, dtype=object)
    same = labels[:, None] == labels[None, :]
    mated, non_mated = dist[same], dist[~same]
    return UnlinkabilityRun(mated, non_mated, unlinkability(mated, non_mated, bins, omega, binning))
