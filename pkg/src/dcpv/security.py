"""Reversal-hardness analysis and an empirical local-search reversal attack.

For a random string at relative Hamming distance ``alpha`` from the hidden
template, the expected fraction of NDB entries it does *not* match is

    g(alpha) = 1 - sum_i p_i * alpha**i * (1 - alpha)**(K - i)

A local search that greedily reduces matched entries is pulled towards the
hidden template only if the smallest positive stationary point of ``g`` lies
above 1/2. ``sum_i (K - 2i) p_i > 0`` is sufficient for it to lie below 1/2
(and necessary when K = 3).
"""

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._prng import SplitMix64, derive_seed, words_to_bounded
from .ndb import NegativeDatabase, hardness_value
from .errors import ParameterError

GRID_POINTS = 1000
BISECTION_TOL = 1e-9
BOUNDARY_TOL = 1e-9


class Classification(enum.Enum):
    HARD = "Hard"
    EASY = "Easy"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class HardnessReport:
    condition_value: float
    is_hard_sufficient: bool
    alpha0: float
    classification: Classification

    def format(self, P=None):
        lines = []
        if P is not None:
            lines.append(f"K={P.K} P={P.serialize()}")
        lines += [
            f"condition_value={self.condition_value!r}",
            f"is_hard_sufficient={str(self.is_hard_sufficient).lower()}",
            f"alpha0={self.alpha0!r}",
            f"classification={self.classification.value}",
        ]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class AttackResult:
    best_candidate: np.ndarray
    matched_entries: int
    recovered_exact: bool | None
    iterations_used: int
    restarts_used: int

    def candidate_string(self):
        return "".join(str(int(x)) for x in self.best_candidate)

    def format(self):
        recovered = "unknown" if self.recovered_exact is None else str(self.recovered_exact).lower()
        return (
            f"best_candidate={self.candidate_string()}\n"
            f"matched_entries={self.matched_entries}\n"
            f"recovered_exact={recovered}\n"
            f"iterations_used={self.iterations_used}\n"
            f"restarts_used={self.restarts_used}\n"
        )


def _check_alpha(alpha, open_interval):
    alpha = np.asarray(alpha, dtype=np.float64)
    if open_interval:
        bad = (alpha <= 0) | (alpha >= 1)
    else:
        bad = (alpha < 0) | (alpha > 1)
    if np.any(bad | ~np.isfinite(alpha)):
        interval = "(0, 1)" if open_interval else "[0, 1]"
        raise ParameterError(f"alpha must lie in {interval}")
    return alpha


def g_alpha(alpha, P):
    """Expected fraction of entries not matched at relative distance ``alpha``."""
    a = _check_alpha(alpha, open_interval=False)
    K = P.K
    total = np.zeros_like(a)
    for i, p in enumerate(P.probs, start=1):
        total = total + p * a**i * (1 - a) ** (K - i)
    out = 1 - total
    return float(out) if out.ndim == 0 else out


def g_prime(alpha, P):
    """Derivative of :func:`g_alpha` on the open interval (0, 1)."""
    a = _check_alpha(alpha, open_interval=True)
    K = P.K
    total = np.zeros_like(a)
    for i, p in enumerate(P.probs, start=1):
        total = total + (K * a - i) * p * a ** (i - 1) * (1 - a) ** (K - i - 1)
    return float(total) if total.ndim == 0 else total


def smallest_positive_stationary_point(P):
    """Smallest root of g' in (0, 1), or 1.0 when g' has no interior sign change."""
    grid = np.arange(1, GRID_POINTS + 1) / (GRID_POINTS + 1)
    values = g_prime(grid, P)
    zeros = np.flatnonzero(values == 0)
    changes = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
    first_zero = zeros[0] if zeros.size else None
    first_change = changes[0] if changes.size else None
    if first_zero is not None and (first_change is None or first_zero <= first_change):
        return float(grid[first_zero])
    if first_change is None:
        return 1.0
    lo, hi = grid[first_change], grid[first_change + 1]
    f_lo = values[first_change]
    while hi - lo >= BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        f_mid = g_prime(mid, P)
        if f_mid == 0:
            return float(mid)
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def hardness_condition(P):
    value = hardness_value(P)
    return value, value > 0


def classify(P):
    value, sufficient = hardness_condition(P)
    alpha0 = smallest_positive_stationary_point(P)
    if abs(alpha0 - 0.5) <= BOUNDARY_TOL:
        cls = Classification.BOUNDARY
    elif alpha0 < 0.5 - BOUNDARY_TOL:
        cls = Classification.HARD
    else:
        cls = Classification.EASY
    return HardnessReport(value, sufficient, alpha0, cls)


def _entry_arrays(ndb, m=None):
    if isinstance(ndb, NegativeDatabase):
        m = ndb.m
        K = ndb.K
        mask, values = ndb.mask, ndb.values
    else:
        strings = list(ndb)
        if not strings:
            if m is None:
                raise ParameterError("an empty entry list needs an explicit m")
            return np.zeros((0, 0), np.int64), np.zeros((0, 0), np.uint8), m
        m = len(strings[0])
        raw = np.frombuffer("".join(strings).encode("ascii"), dtype=np.uint8).reshape(-1, m)
        mask = raw != ord("*")
        values = np.where(mask, raw - ord("0"), 0).astype(np.uint8)
        K = int(mask[0].sum())
        if np.any(mask.sum(axis=1) != K):
            raise ParameterError("all entries must specify the same number of positions")
    n = mask.shape[0]
    # positions in ascending order per entry
    pos = np.nonzero(mask)[1].reshape(n, K).astype(np.int64)
    val = np.take_along_axis(values, pos, axis=1).astype(np.uint8)
    return np.ascontiguousarray(pos), np.ascontiguousarray(val), m


def count_matched(ndb, candidate):
    """Entries whose specified characters all equal ``candidate``'s bits."""
    pos, val, _ = _entry_arrays(ndb)
    candidate = np.asarray(candidate, dtype=np.uint8)
    if pos.size == 0:
        return 0
    return int(np.all(candidate[pos] == val, axis=1).sum())


def _run_restart(pos, val, m, seed, restart, max_iters, max_sideways):
    rng = SplitMix64(derive_seed(seed, "restart", restart))
    start = words_to_bounded(rng.u64(m), 2).astype(np.uint8)
    if pos.shape[0] == 0:
        return start, 0, 0, np.zeros(1, dtype=np.int64)
    return kernels.local_search(pos, val, start, max_iters, max_sideways)


def local_search_attack(ndb, max_iters=1000, restarts=10, seed=0, hidden=None, n_jobs=1,
                        m=None, return_traces=False):
    """Try to reverse an NDB by steepest descent on the matched-entry count.

    Each restart starts from a uniform random string drawn from a sub-seed of
    ``seed`` and repeatedly flips the bit that most reduces the number of
    matched entries (lowest index on ties). Sideways moves are allowed for at
    most ``m`` consecutive steps and never undo the previous flip. A restart
    ends at zero matches, at a strict local minimum, or after ``max_iters``
    moves; the attack stops at the first restart reaching zero.

    ``hidden`` is the true template for test harnesses; when given,
    ``recovered_exact`` reports whether the attack found it. ``ndb`` may also
    be a list of entry strings (``m`` required if it is empty).
    """
    if max_iters < 0 or restarts < 1:
        raise ParameterError("max_iters must be >= 0 and restarts >= 1")
    pos, val, m = _entry_arrays(ndb, m)

    def run(restart):
        return _run_restart(pos, val, m, seed, restart, max_iters, m)

    if n_jobs > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, range(restarts)))
    else:
        results = []
        for restart in range(restarts):
            results.append(run(restart))
            if results[-1][1] == 0:
                break

    best_idx = 0
    for idx, res in enumerate(results):
        if res[1] < results[best_idx][1]:
            best_idx = idx
        if res[1] == 0:
            results = results[: idx + 1]
            break
    best = results[best_idx]
    candidate = np.asarray(best[0], dtype=np.uint8)
    recovered = None
    if hidden is not None:
        hidden_bits = getattr(hidden, "bits", hidden)
        recovered = bool(np.array_equal(candidate, np.asarray(hidden_bits, dtype=np.uint8)))
    result = AttackResult(
        best_candidate=candidate,
        matched_entries=int(best[1]),
        recovered_exact=recovered,
        iterations_used=int(sum(res[2] for res in results)),
        restarts_used=len(results),
    )
    if return_traces:
        return result, [res[3] for res in results]
    return result
