"""Verification metrics and the mated/non-mated unlinkability measure.

Scores are distances in [0, 1]: lower means more similar. A comparison is
accepted at threshold ``t`` when its distance is ``<= t``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

DEFAULT_BINS = 100


@dataclass(frozen=True, eq=False)
class ScoreSet:
    genuine: np.ndarray
    imposter: np.ndarray

    def __post_init__(self):
        for name in ("genuine", "imposter"):
            arr = np.asarray(getattr(self, name), dtype=np.float64).ravel()
            if arr.size == 0:
                raise ParameterError(f"{name} score list is empty")
            if not np.all(np.isfinite(arr)):
                raise ParameterError(f"{name} scores must be finite")
            object.__setattr__(self, name, arr)


@dataclass(frozen=True, eq=False)
class UnlinkabilityResult:
    scores: np.ndarray
    local: np.ndarray
    global_: float
    mated_mass: np.ndarray
    non_mated_mass: np.ndarray

    @property
    def d_sys(self):
        return self.global_


def _rates(scores):
    gen = np.sort(scores.genuine)
    imp = np.sort(scores.imposter)
    thresholds = np.unique(np.concatenate([gen, imp]))
    far = np.searchsorted(imp, thresholds, side="right") / imp.size
    frr = 1.0 - np.searchsorted(gen, thresholds, side="right") / gen.size
    return thresholds, far, frr


def eer(scores):
    """Equal error rate and its threshold.

    FAR and FRR are evaluated at every distinct score plus a point below the
    smallest score (FAR 0, FRR 1); the crossing is linearly interpolated
    between the two bracketing thresholds.
    """
    thresholds, far, frr = _rates(scores)
    thresholds = np.concatenate([[thresholds[0]], thresholds])
    far = np.concatenate([[0.0], far])
    frr = np.concatenate([[1.0], frr])
    diff = far - frr
    k = int(np.argmax(diff >= 0))
    if diff[k] == 0:
        return float(far[k]), float(thresholds[k])
    lam = -diff[k - 1] / (diff[k] - diff[k - 1])
    rate = far[k - 1] + lam * (far[k] - far[k - 1])
    threshold = thresholds[k - 1] + lam * (thresholds[k] - thresholds[k - 1])
    return float(rate), float(threshold)


def roc_points(scores, n_points=None):
    """(FAR, GAR) pairs ordered by increasing threshold, starting at (0, 0).

    With ``n_points`` the distinct thresholds are thinned to that many, evenly
    by index and always keeping the first and last.
    """
    thresholds, far, frr = _rates(scores)
    gar = 1.0 - frr
    if n_points is not None and n_points < far.size:
        if n_points < 2:
            raise ParameterError("n_points must be >= 2")
        keep = np.unique(np.round(np.linspace(0, far.size - 1, n_points)).astype(int))
        far, gar = far[keep], gar[keep]
    far = np.concatenate([[0.0], far])
    gar = np.concatenate([[0.0], gar])
    return list(zip(far.tolist(), gar.tolist()))


def distribution_stats(scores):
    """((genuine mean, std), (imposter mean, std)) with population std."""
    return (
        (float(np.mean(scores.genuine)), float(np.std(scores.genuine))),
        (float(np.mean(scores.imposter)), float(np.std(scores.imposter))),
    )


def local_unlinkability(mated_mass, non_mated_mass, omega=1.0):
    """Per-bin D(s) from binned score masses.

    LR is mated/non-mated mass; 0/0 counts as LR = 1 and x/0 as LR = inf.
    """
    p_m = np.asarray(mated_mass, dtype=np.float64)
    p_nm = np.asarray(non_mated_mass, dtype=np.float64)
    if omega <= 0:
        raise ParameterError("omega must be positive")
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.where(p_nm > 0, p_m / np.where(p_nm > 0, p_nm, 1), np.where(p_m > 0, np.inf, 1.0))
        olr = omega * lr
        d = np.where(np.isinf(olr), 1.0, 2 * olr / (1 + olr) - 1)
    return np.where(olr <= 1, 0.0, d)


def unlinkability_from_histograms(mated_mass, non_mated_mass, omega=1.0):
    """(D(s), D_sys) for pre-binned probability masses."""
    local = local_unlinkability(mated_mass, non_mated_mass, omega)
    return local, float(np.sum(local * np.asarray(mated_mass, dtype=np.float64)))


def unlinkability(mated, non_mated, bins=DEFAULT_BINS, omega=1.0, binning="quantile"):
    """Local D(s) and global D_sys from mated and non-mated score samples.

    ``binning="quantile"`` splits the pooled sample into ``bins`` groups of
    equal rank range (tied scores share a bin), so the result depends only
    on score ranks. ``binning="width"`` uses equal-width bins over the pooled
    min-max range.
    """
    mated = np.asarray(mated, dtype=np.float64).ravel()
    non_mated = np.asarray(non_mated, dtype=np.float64).ravel()
    if mated.size == 0 or non_mated.size == 0:
        raise ParameterError("mated and non-mated score lists must be nonempty")
    if bins < 10:
        raise ParameterError("bins must be >= 10")
    pooled = np.sort(np.concatenate([mated, non_mated]))
    if binning == "quantile":
        def assign(x):
            return np.searchsorted(pooled, x, side="left") * bins // pooled.size
    elif binning == "width":
        lo, hi = pooled[0], pooled[-1]
        span = hi - lo if hi > lo else 1.0

        def assign(x):
            return np.minimum(((x - lo) / span * bins).astype(np.int64), bins - 1)
    else:
        raise ParameterError(f"unknown binning {binning!r}")
    p_m = np.bincount(assign(mated), minlength=bins) / mated.size
    p_nm = np.bincount(assign(non_mated), minlength=bins) / non_mated.size
    pooled_bins = assign(pooled)
    centers = np.array([
        np.median(pooled[pooled_bins == k]) if np.any(pooled_bins == k) else np.nan
        for k in range(bins)
    ])
    local, d_sys = unlinkability_from_histograms(p_m, p_nm, omega)
    return UnlinkabilityResult(centers, local, d_sys, p_m, p_nm)
