"""First-level protection: seeded orthonormal projection and median binarization.

A feature vector ``u`` of length ``m_f`` is projected onto ``m_p`` orthonormal
directions derived from the first-level token, and the projection is
binarized against its own median. Changing the token yields a fresh,
uncorrelated template for the same ``u``.
"""

from dataclasses import dataclass

import numpy as np

from ._prng import MASK64, SplitMix64
from .errors import DegenerateInputError, DimensionError, FormatError, ParameterError

DEFAULT_M_P = 512
RESIDUAL_FLOOR = 1e-12
MAX_REGENERATIONS = 100


def _frozen(array, dtype=None):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Unprotected real-valued feature with its subject and sample labels."""

    values: np.ndarray
    subject_id: str = ""
    sample_id: str = ""

    def __post_init__(self):
        values = _frozen(self.values, np.float64)
        if values.ndim != 1 or values.size < 1:
            raise DimensionError("feature vector must be one-dimensional and non-empty")
        if not np.all(np.isfinite(values)):
            raise ParameterError("feature vector contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def m_f(self):
        return self.values.size


@dataclass(frozen=True)
class ProjectionKey:
    """First-level token plus the projection shape it parameterizes."""

    seed: int
    m_f: int
    m_p: int = DEFAULT_M_P

    def __post_init__(self):
        if not 0 <= self.seed <= MASK64:
            raise ParameterError("seed must be an unsigned 64-bit integer")
        if self.m_f < 1 or self.m_p < 1:
            raise DimensionError("m_f and m_p must be positive")
        if self.m_p > self.m_f:
            raise DimensionError(
                f"cannot orthonormalize m_p={self.m_p} directions in R^{self.m_f}"
            )


@dataclass(frozen=True, eq=False)
class OrthonormalMatrix:
    """``basis`` has shape (m_f, m_p); column j is the j-th unit direction."""

    basis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "basis", _frozen(self.basis, np.float64))

    @property
    def m_f(self):
        return self.basis.shape[0]

    @property
    def m_p(self):
        return self.basis.shape[1]


@dataclass(frozen=True, eq=False)
class CancelableTemplate:
    """Binary first-level template over {0, 1}."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 1:
            raise DimensionError("template must be one-dimensional")
        if bits.size and not np.all((bits == 0) | (bits == 1)):
            raise ParameterError("template bits must be 0 or 1")
        object.__setattr__(self, "bits", _frozen(bits, np.uint8))

    def __len__(self):
        return self.bits.size

    def __eq__(self, other):
        if not isinstance(other, CancelableTemplate):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())

    def to_string(self):
        return "".join("1" if x else "0" for x in self.bits)

    @classmethod
    def from_string(cls, text):
        """Parse a template from a string of '0'/'1' characters only."""
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise FormatError("template strings may contain only '0' and '1'")
        return cls(np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0"))


@dataclass(frozen=True, eq=False)
class BipolarTemplate:
    """Template mapped to {-1, +1}."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.size and not np.all(np.abs(values) == 1):
            raise ParameterError("bipolar values must be -1 or +1")
        object.__setattr__(self, "values", _frozen(values, np.int8))

    def __len__(self):
        return self.values.size

    def to_bits(self):
        return CancelableTemplate((self.values.astype(np.int16) + 1) // 2)


def _orthonormalize(raw, rng):
    """Gram-Schmidt over the columns of ``raw``, regenerating near-dependent columns.

    Each column is orthogonalized twice against the accepted ones, which keeps
    the result orthonormal to ~1e-15 even for large m_p.
    """
    m_f, m_p = raw.shape
    basis = np.zeros((m_f, m_p))
    for j in range(m_p):
        v = raw[:, j].copy()
        for _attempt in range(MAX_REGENERATIONS + 1):
            accepted = basis[:, :j]
            for _ in range(2):
                v -= accepted @ (accepted.T @ v)
            norm = np.linalg.norm(v)
            if norm >= RESIDUAL_FLOOR:
                basis[:, j] = v / norm
                break
            v = rng.normal(m_f)
        else:
            raise ParameterError(
                f"direction {j} stayed degenerate after {MAX_REGENERATIONS} regenerations"
            )
    return basis


def gen_projection_matrix(key):
    """Orthonormal projection basis for a :class:`ProjectionKey`.

    Raw Gaussian entries are drawn direction by direction from a SplitMix64
    stream seeded with ``key.seed``; the directions are then orthonormalized.
    """
    rng = SplitMix64(key.seed)
    raw = rng.normal(key.m_f * key.m_p).reshape(key.m_p, key.m_f).T
    return OrthonormalMatrix(_orthonormalize(np.ascontiguousarray(raw), rng))


def project(u, matrix):
    values = u.values if isinstance(u, FeatureVector) else np.asarray(u, dtype=np.float64)
    if values.shape != (matrix.m_f,):
        raise DimensionError(
            f"feature length {values.shape[-1] if values.ndim else 0} != projection input "
            f"length {matrix.m_f}"
        )
    return values @ matrix.basis


def binarize(q):
    """Threshold ``q`` at its median: values strictly above map to 1, the rest to 0."""
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or q.size < 2:
        raise DimensionError("binarization needs a vector of length >= 2")
    if not np.all(np.isfinite(q)):
        raise ParameterError("projected vector contains non-finite values")
    if np.all(q == q[0]):
        raise DegenerateInputError("all projected values are equal; template would be all zeros")
    beta = np.median(q)
    return CancelableTemplate((q > beta).astype(np.uint8))


def to_bipolar(b):
    return BipolarTemplate(2 * b.bits.astype(np.int8) - 1)


def protect(u, key, matrix=None):
    """Cancelable template of ``u`` under ``key``.

    ``matrix`` may be passed to reuse a basis already generated for ``key``.
    """
    if matrix is None:
        matrix = gen_projection_matrix(key)
    elif (matrix.m_f, matrix.m_p) != (key.m_f, key.m_p):
        raise DimensionError("matrix shape does not match key")
    return binarize(project(u, matrix))


def protect_many(features, key):
    """Templates for a stack of features (rows) under one key."""
    features = np.asarray(features, dtype=np.float64)
    matrix = gen_projection_matrix(key)
    if features.ndim != 2 or features.shape[1] != key.m_f:
        raise DimensionError("features must have shape (n, m_f)")
    return [binarize(row) for row in features @ matrix.basis]
