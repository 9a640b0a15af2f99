"""Second-level protection: K-hidden negative databases and their matching rules.

A negative database (NDB) hides a binary template ``b`` of length ``m`` as
``N = m * r`` ternary entries over ``{0, 1, *}``. Each entry specifies exactly
``K`` positions, ``i >= 1`` of which disagree with ``b``; the entry type ``i``
is drawn from an :class:`IntervalSet`.

Three matching routes are provided and must agree exactly:

* :func:`match_dictionary` -- per-character lookup table, pure Python.
* :func:`match_fast` -- integer product of the {-1, 0, +1} matrix with the
  bipolar query.
* :func:`match_packed` -- bit-packed popcount kernel (compiled when available).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._prng import SplitMix64, scalar_bounded, scalar_uniform, words_to_bounded, words_to_uniform
from .cancelable import CancelableTemplate, to_bipolar
from .errors import DimensionError, FormatError, ParameterError, SecurityPolicyError

ALPHABET = frozenset("01*")
DEFAULT_K = 3
DEFAULT_P = (0.8, 0.1, 0.1)
DEFAULT_R = 4


class IntervalSet:
    """Probabilities ``p_1..p_K`` of generating an entry of type ``i``.

    Type ``i`` is selected when a uniform draw falls in ``[c_{i-1}, c_i)``
    where ``c`` are the cumulative sums of the probabilities.
    """

    __slots__ = ("probs", "boundaries")

    def __init__(self, probs):
        probs = tuple(float(p) for p in probs)
        if len(probs) < 3:
            raise ParameterError(f"K must be >= 3, got {len(probs)} probabilities")
        if any(not math.isfinite(p) or p < 0 for p in probs):
            raise ParameterError("interval probabilities must be finite and non-negative")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ParameterError(f"interval probabilities sum to {math.fsum(probs)!r}, not 1")
        bounds = np.concatenate([[0.0], np.cumsum(probs)])
        bounds[-1] = 1.0
        bounds.setflags(write=False)
        self.probs = probs
        self.boundaries = bounds

    @classmethod
    def parse(cls, text):
        try:
            return cls([float(x) for x in text.split(",")])
        except ValueError as exc:
            if isinstance(exc, ParameterError):
                raise
            raise ParameterError(f"cannot parse interval set {text!r}") from None

    @property
    def K(self):
        return len(self.probs)

    def type_of(self, v):
        """Entry type for uniform draw(s) ``v`` in (0, 1); vectorized."""
        return np.searchsorted(self.boundaries, v, side="right")

    def serialize(self):
        return ",".join(repr(p) for p in self.probs)

    def __eq__(self, other):
        return isinstance(other, IntervalSet) and self.probs == other.probs

    def __hash__(self):
        return hash(self.probs)

    def __repr__(self):
        return f"IntervalSet({self.probs!r})"


def hardness_value(P):
    """``sum_i (K - 2i) p_i``; positive means hard to reverse by local search."""
    K = P.K
    return math.fsum((K - 2 * i) * p for i, p in enumerate(P.probs, start=1))


@dataclass(frozen=True)
class NegativeEntry:
    """One ternary string of an NDB. Deliberately not usable as a query."""

    chars: str

    def __post_init__(self):
        if set(self.chars) - ALPHABET:
            raise FormatError(f"invalid character in negative entry {self.chars!r}")

    @property
    def specified(self):
        return sum(c != "*" for c in self.chars)

    def __len__(self):
        return len(self.chars)


class NegativeDatabase:
    """Immutable K-hidden NDB.

    Internally stored as a boolean ``mask`` of specified positions and a
    ``values`` array holding the specified bits (0 where unspecified).
    ``types`` holds the per-entry type when the NDB was generated in this
    process; it is never serialized.
    """

    def __init__(self, mask, values, K, r, types=None):
        mask = np.array(mask, dtype=bool, copy=True)
        values = np.array(values, dtype=np.uint8, copy=True)
        if mask.ndim != 2 or mask.shape != values.shape:
            raise DimensionError("mask and values must be equal-shaped 2-D arrays")
        n, m = mask.shape
        if r < 1:
            raise ParameterError("r must be a positive integer")
        if n != m * r:
            raise FormatError(f"NDB has {n} entries, expected m*r = {m * r}")
        if n:
            counts = mask.sum(axis=1)
            bad = np.flatnonzero(counts != K)
            if bad.size:
                raise FormatError(
                    f"entry {bad[0] + 1} specifies {counts[bad[0]]} positions, expected K={K}"
                )
        if np.any(values[~mask]) or np.any(values > 1):
            raise FormatError("values must be 0/1 and zero at unspecified positions")
        for arr in (mask, values):
            arr.setflags(write=False)
        if types is not None:
            types = np.array(types, dtype=np.int8, copy=True)
            types.setflags(write=False)
        self.mask = mask
        self.values = values
        self.K = int(K)
        self.r = int(r)
        self.types = types
        self._packed = None
        self._column_sums = None

    @property
    def m(self):
        return self.mask.shape[1]

    @property
    def N(self):
        return self.mask.shape[0]

    def __len__(self):
        return self.N

    def __eq__(self, other):
        if not isinstance(other, NegativeDatabase):
            return NotImplemented
        return (
            (self.K, self.r) == (other.K, other.r)
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    @property
    def entries(self):
        return [NegativeEntry(s) for s in self.entry_strings()]

    def entry_strings(self):
        chars = np.full(self.mask.shape, ord("*"), dtype=np.uint8)
        chars[self.mask] = self.values[self.mask] + ord("0")
        return [row.tobytes().decode("ascii") for row in chars]

    @classmethod
    def from_strings(cls, strings, K, r, m=None):
        strings = list(strings)
        if not strings:
            if m is None:
                raise FormatError("empty NDB needs an explicit template length")
            return cls(np.zeros((0, m), bool), np.zeros((0, m), np.uint8), K, r)
        width = len(strings[0])
        for idx, s in enumerate(strings):
            if len(s) != width:
                raise FormatError(f"entry {idx + 1} has length {len(s)}, expected {width}")
            if set(s) - ALPHABET:
                raise FormatError(f"entry {idx + 1} contains a character outside {{0,1,*}}")
        raw = np.frombuffer("".join(strings).encode("ascii"), dtype=np.uint8).reshape(-1, width)
        mask = raw != ord("*")
        values = np.where(mask, raw - ord("0"), 0).astype(np.uint8)
        return cls(mask, values, K, r)

    def packed(self):
        """Bit-packed (values, masks) uint64 words, cached."""
        if self._packed is None:
            self._packed = (pack_bits(self.values), pack_bits(self.mask))
        return self._packed

    def column_sums(self):
        """Integer column sums of the real-valued matrix; raw = column_sums . query."""
        if self._column_sums is None:
            signed = np.where(self.mask, 2 * self.values.astype(np.int64) - 1, 0)
            sums = signed.sum(axis=0)
            sums.setflags(write=False)
            self._column_sums = sums
        return self._column_sums


@dataclass(frozen=True, eq=False)
class RealNdbMatrix:
    """Rows over {-1, 0, +1}: '0' -> -1, '1' -> +1, '*' -> 0."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.int8, copy=True)
        if rows.ndim != 2:
            raise DimensionError("real NDB matrix must be 2-D")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def specified(self):
        return int(np.count_nonzero(self.rows))

    def to_strings(self):
        lut = np.array([ord("0"), ord("*"), ord("1")], dtype=np.uint8)
        return [lut[row + 1].tobytes().decode("ascii") for row in self.rows]


@dataclass(frozen=True)
class MatchScore:
    raw: int
    dict: int
    distance: float


@dataclass(frozen=True)
class Verification:
    accepted: bool
    score: MatchScore


def pack_bits(bits):
    """Pack a (..., m) 0/1 array into little-endian uint64 words (..., ceil(m/64))."""
    bits = np.asarray(bits, dtype=np.uint8)
    m = bits.shape[-1]
    n_words = max(1, -(-m // 64))
    padded = np.zeros(bits.shape[:-1] + (n_words * 64,), dtype=np.uint8)
    padded[..., :m] = bits
    packed = np.packbits(padded, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed.view("<u8").astype(np.uint64))


def _check_positions(m, K):
    if K > m:
        raise ParameterError(f"K={K} exceeds template length m={m}")


def nctt(b, P, rng):
    """Draw one negative entry hiding ``b`` (scalar reference).

    Consumes ``K + 1`` words from ``rng``: one for the entry type, then one
    per step of a partial Fisher-Yates shuffle selecting the ``K`` specified
    positions. The first ``i`` selected positions get the flipped bit.
    Returns ``(entry, type)``.
    """
    bits = b.bits
    m, K = bits.size, P.K
    _check_positions(m, K)
    v = scalar_uniform(rng.next_u64())
    i = int(P.type_of(v))
    perm = list(range(m))
    for s in range(K):
        j = s + scalar_bounded(rng.next_u64(), m - s)
        perm[s], perm[j] = perm[j], perm[s]
    chars = ["*"] * m
    for slot, p in enumerate(perm[:K]):
        bit = int(bits[p])
        chars[p] = str(bit ^ 1 if slot < i else bit)
    return NegativeEntry("".join(chars)), i


def generate_ndb(b, k2, r=DEFAULT_R, P=None, allow_unsafe=False):
    """Enroll ``b`` as an NDB of ``len(b) * r`` entries seeded by ``k2``.

    Equivalent to ``N`` successive :func:`nctt` calls on one SplitMix64
    stream, computed in a vectorized pass.
    """
    if not isinstance(b, CancelableTemplate):
        raise TypeError("generate_ndb expects a CancelableTemplate")
    P = P if P is not None else IntervalSet(DEFAULT_P)
    if r < 1:
        raise ParameterError("r must be a positive integer")
    if not allow_unsafe and hardness_value(P) <= 0:
        raise SecurityPolicyError(
            f"interval set {P.probs} fails the hardness condition "
            f"(value {hardness_value(P):.6g} <= 0); pass allow_unsafe to override"
        )
    bits = b.bits
    m, K = bits.size, P.K
    _check_positions(m, K)
    n = m * r
    words = SplitMix64(k2).u64(n * (K + 1)).reshape(n, K + 1)
    types = P.type_of(words_to_uniform(words[:, 0])).astype(np.int64)
    perm = np.tile(np.arange(m, dtype=np.int64), (n, 1))
    rows = np.arange(n)
    for s in range(K):
        j = s + words_to_bounded(words[:, s + 1], m - s)
        head = perm[:, s].copy()
        perm[:, s] = perm[rows, j]
        perm[rows, j] = head
    chosen = perm[:, :K]
    flip = np.arange(K)[None, :] < types[:, None]
    mask = np.zeros((n, m), dtype=bool)
    values = np.zeros((n, m), dtype=np.uint8)
    mask[rows[:, None], chosen] = True
    values[rows[:, None], chosen] = bits[chosen] ^ flip
    return NegativeDatabase(mask, values, K, r, types=types)


def to_real(ndb):
    """Map '0' -> -1, '1' -> +1, '*' -> 0. Accepts an NDB or raw entry strings."""
    if not isinstance(ndb, NegativeDatabase):
        strings = [e.chars if isinstance(e, NegativeEntry) else e for e in ndb]
        lut = np.zeros(256, dtype=np.int8)
        lut[ord("0")], lut[ord("1")] = -1, 1
        for s in strings:
            if set(s) - ALPHABET:
                raise FormatError(f"invalid character in negative entry {s!r}")
        raw = np.frombuffer("".join(strings).encode("ascii"), dtype=np.uint8)
        return RealNdbMatrix(lut[raw].reshape(len(strings), -1))
    rows = np.where(ndb.mask, 2 * ndb.values.astype(np.int8) - 1, 0)
    return RealNdbMatrix(rows)


def match_dictionary(ndb, q):
    """Sum of per-character distances: agree -1, disagree +1, '*' 0."""
    query = q.to_string()
    strings = ndb.entry_strings() if isinstance(ndb, NegativeDatabase) else list(ndb)
    total = 0
    for entry in strings:
        if len(entry) != len(query):
            raise DimensionError(f"entry length {len(entry)} != query length {len(query)}")
        for neg_bit, query_bit in zip(entry, query):
            if neg_bit == "*":
                continue
            total += -1 if neg_bit == query_bit else 1
    return total


def distance_from_raw(raw, specified):
    """Normalized angular distance arccos(raw / specified) / pi in [0, 1]."""
    if specified == 0:
        raise ParameterError("distance undefined for an NDB with no specified positions")
    cosine = min(1.0, max(-1.0, raw / specified))
    return math.acos(cosine) / math.pi


def _score(raw, specified):
    raw = int(raw)
    return MatchScore(raw=raw, dict=-raw, distance=distance_from_raw(raw, specified))


def match_fast(B, q):
    """Exact integer correlation of the real NDB matrix with a bipolar query."""
    if B.rows.shape[1] != len(q):
        raise DimensionError(f"matrix width {B.rows.shape[1]} != query length {len(q)}")
    raw = int((B.rows.astype(np.int64) @ q.values.astype(np.int64)).sum())
    return _score(raw, B.specified)


def match_packed(ndb, q):
    """Bit-packed popcount route; identical to :func:`match_fast`."""
    if len(q) != ndb.m:
        raise DimensionError(f"query length {len(q)} != template length {ndb.m}")
    values, masks = ndb.packed()
    raw = kernels.packed_raw(values, masks, pack_bits(q.bits))
    return _score(raw, ndb.N * ndb.K)


def score_many(ndb, queries, n_jobs=1):
    """Raw scores of many templates against one NDB via the packed kernel.

    Chunks run on a thread pool when ``n_jobs > 1``; results are the same as
    a sequential pass.
    """
    bits = np.array([q.bits for q in queries], dtype=np.uint8).reshape(-1, ndb.m)
    words = pack_bits(bits)
    values, masks = ndb.packed()
    if n_jobs <= 1 or len(words) < 2:
        return kernels.packed_raw_many(values, masks, words)
    chunks = np.array_split(np.arange(len(words)), n_jobs)
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        parts = pool.map(
            lambda idx: kernels.packed_raw_many(values, masks, np.ascontiguousarray(words[idx])),
            chunks,
        )
        return np.concatenate(list(parts))


def verify(ndb, q, threshold):
    """Accept iff the distance between ``q`` and the NDB is at most ``threshold``."""
    if not isinstance(q, CancelableTemplate):
        raise TypeError(
            f"verification requires a CancelableTemplate query, got {type(q).__name__}"
        )
    if not 0.0 <= threshold <= 1.0:
        raise ParameterError("threshold must lie in [0, 1]")
    score = match_packed(ndb, q)
    return Verification(accepted=score.distance <= threshold, score=score)


def genuine_self_distance(ndb):
    """Closed-form self distance from the logged entry types."""
    if ndb.types is None:
        raise ParameterError("entry types are only known for NDBs generated in-process")
    raw = int(np.sum(ndb.K - 2 * ndb.types.astype(np.int64)))
    return distance_from_raw(raw, ndb.N * ndb.K)


def expected_self_distance(P):
    """Self distance in expectation over entry types: arccos(hardness / K) / pi."""
    return math.acos(max(-1.0, min(1.0, hardness_value(P) / P.K))) / math.pi


def default_threshold(P):
    """Midpoint between the expected genuine self distance and the imposter mean 0.5."""
    return 0.5 * (expected_self_distance(P) + 0.5)


def dumps(ndb):
    """Text form: ``NDB1 m=<m> K=<K> r=<r>`` then one LF-terminated line per entry."""
    lines = [f"NDB1 m={ndb.m} K={ndb.K} r={ndb.r}"]
    lines.extend(ndb.entry_strings())
    return "\n".join(lines) + "\n"


def _parse_header_fields(tokens, names, line, source=None):
    fields = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or key not in names or key in fields:
            raise FormatError(f"unexpected header field {tok!r}", line=line, source=source)
        fields[key] = value
    missing = [n for n in names if n not in fields]
    if missing:
        raise FormatError(f"header missing {', '.join(missing)}", line=line, source=source)
    return fields


def loads(text, source=None):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError("empty NDB text", source=source)
    head = lines[0].split(" ")
    if head[0] != "NDB1":
        raise FormatError("missing NDB1 header", line=1, source=source)
    fields = _parse_header_fields(head[1:], ("m", "K", "r"), 1, source)
    try:
        m, K, r = (int(fields[k]) for k in ("m", "K", "r"))
    except ValueError:
        raise FormatError("non-integer header value", line=1, source=source) from None
    body = lines[1:]
    for idx, entry in enumerate(body, start=2):
        if len(entry) != m or set(entry) - ALPHABET:
            raise FormatError("malformed entry line", line=idx, source=source)
        if sum(c != "*" for c in entry) != K:
            raise FormatError(f"entry does not specify exactly K={K} positions", line=idx,
                              source=source)
    if len(body) != m * r:
        raise FormatError(f"expected {m * r} entries, found {len(body)}", source=source)
    return NegativeDatabase.from_strings(body, K, r, m=m)


def save(ndb, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(dumps(ndb))


def load(path):
    with open(path, encoding="ascii", newline="\n") as fh:
        return loads(fh.read(), source=path)
