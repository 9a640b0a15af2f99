"""Feature acquisition: feature CSV files and a classic Gabor competition code.

The competition code stands in for a trained extractor. Every pixel votes for
the orientation whose even-symmetric Gabor response is most negative (dark
palm lines), votes are pooled per block, and each block contributes a one-hot
winner encoding.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy.signal import fftconvolve

from .cancelable import FeatureVector
from .errors import DegenerateInputError, DimensionError, FormatError, ParameterError

ROI_SIZE = 128
MIN_SIDE, MAX_SIDE = 32, 1024


@dataclass(frozen=True)
class GaborBank:
    n_theta: int = 6
    kernel_size: int = 35
    wavelength: float = 8.0
    sigma: float = 4.0
    aspect: float = 0.5

    def __post_init__(self):
        if self.n_theta < 2:
            raise ParameterError("n_theta must be >= 2")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ParameterError("kernel_size must be a positive odd integer")
        if min(self.wavelength, self.sigma, self.aspect) <= 0:
            raise ParameterError("wavelength, sigma and aspect must be positive")

    @property
    def orientations(self):
        return [t * math.pi / self.n_theta for t in range(self.n_theta)]

    def kernels(self):
        """Zero-mean even Gabor kernels, one per orientation.

        Orientation theta is the direction of the line the kernel responds
        to; the cosine carrier runs across it.
        """
        half = self.kernel_size // 2
        y, x = np.mgrid[-half : half + 1, -half : half + 1].astype(np.float64)
        out = []
        for theta in self.orientations:
            along = x * math.cos(theta) + y * math.sin(theta)
            across = -x * math.sin(theta) + y * math.cos(theta)
            envelope = np.exp(-(across**2 + (self.aspect * along) ** 2) / (2 * self.sigma**2))
            k = envelope * np.cos(2 * math.pi * across / self.wavelength)
            out.append(k - k.mean())
        return out


@dataclass(frozen=True, eq=False)
class RoiImage:
    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64, copy=True)
        if px.ndim != 2:
            raise DimensionError("ROI image must be single-channel 2-D")
        h, w = px.shape
        if not (MIN_SIDE <= h <= MAX_SIDE and MIN_SIDE <= w <= MAX_SIDE):
            raise DimensionError(f"ROI dimensions {h}x{w} outside [{MIN_SIDE}, {MAX_SIDE}]")
        if not np.all(np.isfinite(px)) or px.min() < 0 or px.max() > 255:
            raise ParameterError("pixel intensities must lie in [0, 255]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)


def _resize(pixels, size=ROI_SIZE):
    if pixels.shape == (size, size):
        return np.array(pixels, dtype=np.float64)
    img = Image.fromarray(pixels.astype(np.float32))
    return np.asarray(img.resize((size, size), Image.BILINEAR), dtype=np.float64)


def winner_map(img, bank=GaborBank()):
    """Per-pixel winning orientation index on the resized, zero-mean ROI."""
    px = _resize(img.pixels)
    px = px - px.mean()
    if np.max(np.abs(px)) < 1e-9:
        raise DegenerateInputError("constant image has no winning orientation")
    half = bank.kernel_size // 2
    padded = np.pad(px, half, mode="symmetric")
    responses = np.stack([fftconvolve(padded, k, mode="valid") for k in bank.kernels()])
    return np.argmin(responses, axis=0)


def competition_code(img, bank=GaborBank(), grid=8, subject_id="", sample_id=""):
    """One-hot block winners, length ``grid**2 * n_theta``."""
    if grid < 1 or ROI_SIZE % grid:
        raise ParameterError(f"grid={grid} must divide the ROI size {ROI_SIZE}")
    winners = winner_map(img, bank)
    step = ROI_SIZE // grid
    blocks = winners.reshape(grid, step, grid, step).transpose(0, 2, 1, 3).reshape(grid * grid, -1)
    votes = np.stack([np.bincount(b, minlength=bank.n_theta) for b in blocks])
    # argmax returns the lowest orientation on ties
    block_winner = np.argmax(votes, axis=1)
    onehot = np.zeros((grid * grid, bank.n_theta))
    onehot[np.arange(grid * grid), block_winner] = 1.0
    return FeatureVector(onehot.ravel(), subject_id=subject_id, sample_id=sample_id)


def read_pgm(path):
    """Read a binary (P5) PGM with maxval 255."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic != b"P5":
        raise FormatError("not a binary PGM (P5) file", source=path)
    with Image.open(path) as img:
        if img.mode != "L":
            raise FormatError(f"unsupported PGM mode {img.mode} (need 8-bit, maxval 255)",
                              source=path)
        return RoiImage(np.asarray(img, dtype=np.float64))


def write_pgm(path, pixels):
    arr = np.clip(np.rint(pixels), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path, format="PPM")


def load_features(path, expected_m_f=None):
    """Parse a feature CSV (``id,sample,v1..v<m_f>``) into FeatureVectors."""
    out = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for row in reader:
            line = reader.line_num
            if line == 1:
                if not row:
                    continue
                if row[:2] != ["id", "sample"]:
                    raise FormatError("header must start with 'id,sample'", line=1, source=path)
                width = len(row) - 2
                if width < 1:
                    raise FormatError("header declares no feature columns", line=1, source=path)
                if expected_m_f is not None and width != expected_m_f:
                    raise FormatError(f"file has m_f={width}, expected {expected_m_f}",
                                      line=1, source=path)
                continue
            if not row:
                continue
            if width is None:
                raise FormatError("data before header", line=line, source=path)
            if len(row) != width + 2:
                raise FormatError(f"row has {len(row) - 2} values, expected {width}",
                                  line=line, source=path)
            try:
                values = np.array([float(cell) for cell in row[2:]])
            except ValueError:
                raise FormatError("non-numeric feature value", line=line, source=path) from None
            if not np.all(np.isfinite(values)):
                raise FormatError("non-finite feature value", line=line, source=path)
            out.append(FeatureVector(values, subject_id=row[0], sample_id=row[1]))
    return out


def save_features(path, features):
    features = list(features)
    m_f = features[0].m_f if features else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "sample"] + [f"v{i}" for i in range(1, m_f + 1)])
        for f in features:
            if f.m_f != m_f:
                raise DimensionError("all features must share one dimension")
            writer.writerow([f.subject_id, f.sample_id] + [repr(float(v)) for v in f.values])
