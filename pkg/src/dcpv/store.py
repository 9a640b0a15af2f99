"""Enrollment store holding only negative databases and public parameters.

File layout (UTF-8, LF newlines)::

    DCPVSTORE v1
    REC <subject_id> m=<m> K=<K> r=<r> P=<p1,...,pK>
    <N entry lines over {0,1,*}>
    END
    ...

Records are written sorted by subject id, so equal stores serialize to
identical bytes. Tokens, templates and features are never written.
"""

import hashlib
import os
import tempfile
from dataclasses import dataclass, field

from .ndb import ALPHABET, IntervalSet, NegativeDatabase, _parse_header_fields
from .errors import FormatError, ParameterError, RecordNotFoundError

MAGIC = "DCPVSTORE"
VERSION = "v1"


def _digest(P):
    return hashlib.sha256(P.serialize().encode("ascii")).hexdigest()


@dataclass(frozen=True, eq=False)
class EnrollmentRecord:
    subject_id: str
    ndb: NegativeDatabase
    P: IntervalSet
    created_at: str | None = None
    p_digest: str = field(default="")

    def __post_init__(self):
        if not self.subject_id or any(c.isspace() for c in self.subject_id):
            raise ParameterError(f"subject id {self.subject_id!r} must be nonempty without whitespace")
        if self.P.K != self.ndb.K:
            raise ParameterError("interval set length does not match the NDB's K")
        if self.ndb.K >= self.ndb.m:
            # an entry without '*' would be indistinguishable from a template string
            raise ParameterError("stored NDBs need K < m")
        digest = _digest(self.P)
        if self.p_digest and self.p_digest != digest:
            raise ParameterError("P digest does not match the interval set")
        object.__setattr__(self, "p_digest", digest)

    @property
    def params(self):
        return {"m_p": self.ndb.m, "K": self.ndb.K, "r": self.ndb.r, "P_digest": self.p_digest}

    def __eq__(self, other):
        if not isinstance(other, EnrollmentRecord):
            return NotImplemented
        return (self.subject_id, self.P) == (other.subject_id, other.P) and self.ndb == other.ndb


class EnrollmentStore:
    """Immutable mapping of subject id to :class:`EnrollmentRecord`."""

    def __init__(self, records=(), version=VERSION):
        if version != VERSION:
            raise FormatError(f"unsupported store version {version!r}")
        mapping = {}
        for rec in records:
            if rec.subject_id in mapping:
                raise FormatError(f"duplicate subject id {rec.subject_id!r}")
            mapping[rec.subject_id] = rec
        self.version = version
        self._records = dict(sorted(mapping.items()))

    def __len__(self):
        return len(self._records)

    def __contains__(self, subject_id):
        return subject_id in self._records

    def __iter__(self):
        return iter(self._records.values())

    def __eq__(self, other):
        if not isinstance(other, EnrollmentStore):
            return NotImplemented
        return self.version == other.version and list(self) == list(other)

    __hash__ = None

    @property
    def subject_ids(self):
        return list(self._records)

    def get(self, subject_id):
        try:
            return self._records[subject_id]
        except KeyError:
            raise RecordNotFoundError(f"no enrollment record for subject {subject_id!r}") from None

    def add(self, record, replace=False):
        if record.subject_id in self._records and not replace:
            raise ParameterError(f"subject {record.subject_id!r} already enrolled")
        records = dict(self._records)
        records[record.subject_id] = record
        return EnrollmentStore(records.values(), self.version)


def revoke(store, subject_id):
    """Store without ``subject_id``'s record."""
    store.get(subject_id)
    return EnrollmentStore((r for r in store if r.subject_id != subject_id), store.version)


def dumps(store):
    lines = [f"{MAGIC} {store.version}"]
    for rec in store:
        ndb = rec.ndb
        lines.append(
            f"REC {rec.subject_id} m={ndb.m} K={ndb.K} r={ndb.r} P={rec.P.serialize()}"
        )
        lines.extend(ndb.entry_strings())
        lines.append("END")
    return "\n".join(lines) + "\n"


def loads(text, source=None):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError("empty store file", source=source)
    head = lines[0].split(" ")
    if len(head) != 2 or head[0] != MAGIC:
        raise FormatError(f"missing {MAGIC} header", line=1, source=source)
    if head[1] != VERSION:
        raise FormatError(f"unsupported store version {head[1]!r}", line=1, source=source)
    records = []
    seen = set()
    idx = 1
    while idx < len(lines):
        line_no = idx + 1
        parts = lines[idx].split(" ")
        if parts[0] != "REC" or len(parts) < 2:
            raise FormatError("expected REC line", line=line_no, source=source)
        subject = parts[1]
        fields = _parse_header_fields(parts[2:], ("m", "K", "r", "P"), line_no, source)
        try:
            m, K, r = (int(fields[k]) for k in ("m", "K", "r"))
            P = IntervalSet.parse(fields["P"])
        except (ValueError, ParameterError) as exc:
            raise FormatError(f"record {subject!r}: bad parameters ({exc})", line=line_no,
                              source=source) from None
        if subject in seen:
            raise FormatError(f"duplicate subject id {subject!r}", line=line_no, source=source)
        seen.add(subject)
        n = m * r
        body = lines[idx + 1 : idx + 1 + n]
        for offset, entry in enumerate(body):
            entry_line = line_no + 1 + offset
            if len(entry) != m or set(entry) - ALPHABET:
                raise FormatError(f"record {subject!r}: malformed entry", line=entry_line,
                                  source=source)
            if sum(c != "*" for c in entry) != K:
                raise FormatError(f"record {subject!r}: entry does not specify K={K} positions",
                                  line=entry_line, source=source)
        end_idx = idx + 1 + n
        if len(body) != n or end_idx >= len(lines) or lines[end_idx] != "END":
            raise FormatError(f"record {subject!r}: expected {n} entries followed by END",
                              line=min(end_idx, len(lines)) + 1, source=source)
        try:
            ndb = NegativeDatabase.from_strings(body, K, r, m=m)
            records.append(EnrollmentRecord(subject, ndb, P))
        except (FormatError, ParameterError) as exc:
            raise FormatError(f"record {subject!r}: {exc}", line=line_no, source=source) from None
        idx = end_idx + 1
    return EnrollmentStore(records, VERSION)


def save(store, path):
    """Atomically write ``store`` to ``path`` (temp file in the same directory, then rename)."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    data = dumps(store).encode("utf-8")
    fd, tmp = tempfile.mkstemp(prefix=".dcpvstore-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load(path):
    with open(path, encoding="utf-8", newline="\n") as fh:
        return loads(fh.read(), source=os.fspath(path))
