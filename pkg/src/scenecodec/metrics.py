"""Distortion metrics over images and externally supplied feature files.

Perceptual features are never computed here; they are read from FMAT /
PMAT files produced elsewhere. All statistics are float64.

Feature file formats (little-endian):

    FMAT: magic "FMAT", uint32 n, uint32 d, n*d float32 row-major
    PMAT: magic "PMAT", same layout; rows must be probability vectors
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Image
from .errors import FormatError, TruncationError

ROW_SUM_TOLERANCE = 1e-5
FID_EIGENVALUE_CLAMP = 1e-10
FID_RESULT_FLOOR = -1e-6
PSD_TOLERANCE = 1e-8


@dataclass(frozen=True)
class GaussianStats:
    """Mean vector and covariance matrix of a feature set."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError("mean must be a d-vector and cov a d x d matrix")
        if not np.allclose(cov, cov.T, atol=1e-9):
            raise ValueError("covariance matrix must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class MatchingConfig:
    """Attention sharpness and word-importance factors for the matching score."""

    gamma1: float = 5.0
    gamma2: float = 5.0

    def __post_init__(self):
        for name, v in (("gamma1", self.gamma1), ("gamma2", self.gamma2)):
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive")


def psnr(a: Image, b: Image, bits: int = 8) -> float:
    """Peak signal-to-noise ratio in dB over all channels; inf when equal."""
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError("images must share dimensions")
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    peak = (1 << bits) - 1
    return 10.0 * math.log10(peak * peak / mse)


def mse(a: Image, b: Image) -> float:
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError("images must share dimensions")
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    return float(np.mean(diff * diff))


def _validate_probs(p: np.ndarray):
    if p.ndim != 2 or p.size == 0:
        raise ValueError("probability matrix must be 2-D and non-empty")
    if not np.isfinite(p).all():
        raise ValueError("probability matrix holds non-finite values")
    if (p < 0).any() or (p > 1).any():
        raise ValueError("probabilities must lie in [0, 1]")
    sums = p.sum(axis=1)
    if np.abs(sums - 1.0).max() > ROW_SUM_TOLERANCE:
        raise ValueError(
            f"rows must sum to 1 within {ROW_SUM_TOLERANCE}; "
            f"worst deviation {np.abs(sums - 1.0).max():.3g}"
        )


def _is_of(chunk: np.ndarray) -> float:
    marginal = chunk.mean(axis=0)
    logm = np.log(marginal, out=np.full_like(marginal, -np.inf), where=marginal > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = chunk * (np.log(chunk, where=chunk > 0, out=np.zeros_like(chunk)) - logm)
    kl = np.where(chunk > 0, terms, 0.0).sum(axis=1)
    return float(np.exp(kl.mean()))


def inception_score(p, splits: int = 1) -> float:
    """exp of the mean KL divergence between rows and their marginal.

    KL uses natural log with 0*log 0 = 0. With ``splits`` above one the
    rows are cut into that many contiguous chunks and the per-chunk
    scores are averaged.
    """
    p = np.asarray(p, dtype=np.float64)
    _validate_probs(p)
    if not 1 <= splits <= p.shape[0]:
        raise ValueError("splits must be in 1..n")
    return float(np.mean([_is_of(chunk) for chunk in np.array_split(p, splits)]))


def gaussian_stats(f) -> GaussianStats:
    """Sample mean and covariance (1/(n-1) normalization) of feature rows."""
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError("feature matrix must be 2-D")
    if f.shape[0] < 2:
        raise ValueError("need at least two samples for covariance")
    if not np.isfinite(f).all():
        raise ValueError("feature matrix holds non-finite values")
    mean = f.mean(axis=0)
    centered = f - mean
    cov = centered.T @ centered / (f.shape[0] - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianStats(mean=mean, cov=cov)


def sqrtm_psd(c: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix via eigendecomposition."""
    c = np.asarray(c, dtype=np.float64)
    w, v = np.linalg.eigh((c + c.T) / 2.0)
    floor = -PSD_TOLERANCE * max(1.0, float(np.abs(w).max(initial=0.0)))
    if w.min(initial=0.0) < floor:
        raise ArithmeticError(
            f"matrix is not PSD within tolerance (min eigenvalue {w.min():.3g})"
        )
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def fid(s1: GaussianStats, s2: GaussianStats) -> float:
    """Frechet distance between two feature Gaussians.

    The cross term Tr((C1 C2)^1/2) is computed from the eigenvalues of
    the symmetrized product C2^1/2 C1 C2^1/2, which shares its nonzero
    spectrum with C1 C2 and stays numerically symmetric.
    """
    if s1.mean.shape != s2.mean.shape:
        raise ValueError("gaussians must share the feature dimension")
    root2 = sqrtm_psd(s2.cov)
    inner = root2 @ s1.cov @ root2
    w = np.linalg.eigh((inner + inner.T) / 2.0)[0]
    floor = -PSD_TOLERANCE * max(1.0, float(np.abs(w).max(initial=0.0)))
    if w.min(initial=0.0) < floor:
        raise ArithmeticError(
            f"covariance product is not PSD within tolerance "
            f"(min eigenvalue {w.min():.3g})"
        )
    w = np.where(w < FID_EIGENVALUE_CLAMP, 0.0, w)
    delta = s1.mean - s2.mean
    value = float(
        delta @ delta
        + np.trace(s1.cov)
        + np.trace(s2.cov)
        - 2.0 * np.sqrt(w).sum()
    )
    if value < FID_RESULT_FLOOR:
        raise ArithmeticError(f"FID fell below the numerical floor: {value:.3g}")
    return max(value, 0.0)


def ipd(src, rec) -> float:
    """Mean squared distance between paired feature rows."""
    src = np.asarray(src, dtype=np.float64)
    rec = np.asarray(rec, dtype=np.float64)
    if src.shape != rec.shape or src.ndim != 2:
        raise ValueError("feature matrices must share their (n, d) shape")
    diff = rec - src
    return float(np.mean(np.sum(diff * diff, axis=1)))


def matching_score(word_features, region_features, cfg: MatchingConfig | None = None) -> float:
    """Attention-driven image-text matching score.

    ``word_features`` is d x J (one column per word) and
    ``region_features`` is d x L (one column per region). Per word, a
    region-context vector is the attention-weighted sum of regions with
    weights softmax(gamma1 * e_j . v_l) over regions; the score is
    log((sum_j exp(gamma2 * cos(c_j, e_j)))^(1/gamma2)). Zero-norm
    vectors get cosine 0.
    """
    cfg = cfg or MatchingConfig()
    e = np.asarray(word_features, dtype=np.float64)
    v = np.asarray(region_features, dtype=np.float64)
    if e.ndim != 2 or v.ndim != 2 or e.shape[0] != v.shape[0]:
        raise ValueError("word and region features must share the feature dimension")
    if e.shape[1] < 1 or v.shape[1] < 1:
        raise ValueError("need at least one word and one region")
    sim = cfg.gamma1 * (e.T @ v)  # J x L
    sim -= sim.max(axis=1, keepdims=True)
    weights = np.exp(sim)
    weights /= weights.sum(axis=1, keepdims=True)
    context = weights @ v.T  # J x d
    norms = np.linalg.norm(context, axis=1) * np.linalg.norm(e.T, axis=1)
    dots = np.sum(context * e.T, axis=1)
    cosines = np.where(norms > 0, dots / np.where(norms > 0, norms, 1.0), 0.0)
    scaled = cfg.gamma2 * cosines
    peak = scaled.max()
    return float((peak + np.log(np.exp(scaled - peak).sum())) / cfg.gamma2)


def _write_matrix(path, arr: np.ndarray, magic: bytes):
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("matrix must be 2-D and non-empty")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(arr.shape[0].to_bytes(4, "little"))
        fh.write(arr.shape[1].to_bytes(4, "little"))
        fh.write(arr.astype("<f4").tobytes())


def _read_matrix(path, magic: bytes) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != magic:
        raise FormatError(f"bad matrix magic, expected {magic!r}")
    if len(data) < 12:
        raise TruncationError("matrix header incomplete")
    n = int.from_bytes(data[4:8], "little")
    d = int.from_bytes(data[8:12], "little")
    if n < 1 or d < 1:
        raise FormatError("matrix dimensions must be positive")
    need = 12 + 4 * n * d
    if len(data) < need:
        raise TruncationError("matrix payload shorter than header implies")
    if len(data) > need:
        raise FormatError("trailing bytes after matrix payload")
    values = np.frombuffer(data[12:need], dtype="<f4").astype(np.float64)
    arr = values.reshape(n, d)
    if not np.isfinite(arr).all():
        raise FormatError("matrix holds non-finite values")
    return arr


def write_feature_matrix(path, arr):
    _write_matrix(path, arr, b"FMAT")


def read_feature_matrix(path) -> np.ndarray:
    return _read_matrix(path, b"FMAT")


def write_prob_matrix(path, arr):
    arr = np.asarray(arr, dtype=np.float64)
    _validate_probs(arr)
    _write_matrix(path, arr, b"PMAT")


def read_prob_matrix(path) -> np.ndarray:
    arr = _read_matrix(path, b"PMAT")
    try:
        _validate_probs(arr)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    return arr
