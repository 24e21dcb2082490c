"""Statistical heads: losses, analytic logit gradients, and expectation estimators.

Four heads share the sigmoid parameterization p = sigmoid(y), with
probabilities clamped to [1e-7, 1 - 1e-7] before any log or 1/(1-p):

* binom  -- per-bucket binary cross-entropy against soft labels; estimator
            sum_i width_i * p_i over the N closed buckets.
* geo    -- bucketized geometric likelihood with N+1 continuation
            probabilities (open tail); closed-form expectation.
* vgeo   -- single stationary continuation probability; estimator exp(y).
* wlr    -- weighted-logistic baseline: the vgeo objective without the
            log(1-p) term when t > 0; same exp(y) estimator.

Losses are negated log-likelihoods (minimization convention).  All functions
are pure; batch variants operate row-wise on (B, arity) arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .buckets import BucketScheme
from .labels import SoftLabels

PROB_EPS = 1e-7


def sigmoid(y):
    y = np.asarray(y, dtype=np.float64)
    out = np.empty_like(y)
    pos = y >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-y[pos]))
    ey = np.exp(y[~pos])
    out[~pos] = ey / (1.0 + ey)
    return out


def clamp_probs(p) -> np.ndarray:
    return np.clip(np.asarray(p, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS)


class HeadKind(str, Enum):
    BINOM = "binom"
    GEO = "geo"
    VGEO = "vgeo"
    WLR = "wlr"

    def arity(self, scheme: BucketScheme | None) -> int:
        if self is HeadKind.BINOM:
            _require_scheme(self, scheme)
            return scheme.n_buckets
        if self is HeadKind.GEO:
            _require_scheme(self, scheme)
            return scheme.n_buckets + 1
        return 1


def _require_scheme(kind: HeadKind, scheme: BucketScheme | None) -> None:
    if scheme is None:
        raise ValueError(f"{kind.value} head needs a bucket scheme")
    if kind is HeadKind.BINOM and scheme.tail_open:
        raise ValueError("binom head needs a closed-tail scheme (tail_open=False)")
    if kind is HeadKind.GEO and not scheme.tail_open:
        raise ValueError("geo head needs an open-tail scheme (tail_open=True)")


@dataclass(frozen=True)
class HeadOutput:
    """Logits and clamped sigmoid probabilities for one sample."""

    logits: np.ndarray
    probs: np.ndarray

    @classmethod
    def from_logits(cls, logits) -> "HeadOutput":
        y = np.atleast_1d(np.asarray(logits, dtype=np.float64))
        if not np.all(np.isfinite(y)):
            raise ValueError(f"non-finite logits: {y}")
        return cls(logits=y, probs=clamp_probs(sigmoid(y)))


# ---------------------------------------------------------------------------
# batch losses: probs (B, arity) -> per-sample losses (B,) and d(loss)/d(logits)
# ---------------------------------------------------------------------------


def binom_loss_batch(probs: np.ndarray, soft: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if probs.shape != soft.shape:
        raise ValueError(f"probs shape {probs.shape} != labels shape {soft.shape}")
    losses = -(soft * np.log(probs) + (1.0 - soft) * np.log1p(-probs)).sum(axis=1)
    return losses, probs - soft


def geo_coefficients(scheme: BucketScheme, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample likelihood coefficients for the bucketized geometric head.

    Returns (A, stop): A[b, i] is the log p_i weight (width for fully watched
    buckets, in-bucket seconds for the stop bucket) and stop is the one-hot of
    the stop bucket carrying the log(1 - p_n) term.
    """
    t = np.asarray(targets, dtype=np.int64)
    n = scheme.n_buckets
    ends = np.asarray(scheme.endpoints, dtype=np.int64)
    lows = np.concatenate(([0], ends))
    stop_idx = np.searchsorted(ends, t, side="left")  # 0-based, N means open tail
    cols = np.arange(n + 1)
    widths_ext = np.concatenate((np.asarray(scheme.widths, dtype=np.float64), [0.0]))
    a = np.where(cols[None, :] < stop_idx[:, None], widths_ext[None, :], 0.0)
    rows = np.arange(len(t))
    a[rows, stop_idx] = t - lows[stop_idx]
    stop = np.zeros_like(a)
    stop[rows, stop_idx] = 1.0
    return a, stop


def geo_loss_batch(
    probs: np.ndarray, a: np.ndarray, stop: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    losses = -(a * np.log(probs) + stop * np.log1p(-probs)).sum(axis=1)
    grads = -a * (1.0 - probs) + stop * probs
    return losses, grads


def vgeo_loss_batch(probs: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = probs[:, 0]
    t = np.asarray(targets, dtype=np.float64)
    losses = -(t * np.log(p) + np.log1p(-p))
    grads = -(t * (1.0 - p) - p)
    return losses, grads[:, None]


def wlr_loss_batch(probs: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = probs[:, 0]
    t = np.asarray(targets, dtype=np.float64)
    zero = t == 0
    losses = -np.where(zero, np.log1p(-p), t * np.log(p))
    grads = np.where(zero, p, -t * (1.0 - p))
    return losses, grads[:, None]


# ---------------------------------------------------------------------------
# expectations
# ---------------------------------------------------------------------------


def binom_expectation_batch(probs: np.ndarray, scheme: BucketScheme) -> np.ndarray:
    widths = np.asarray(scheme.widths, dtype=np.float64)
    if probs.shape[1] != len(widths):
        raise ValueError(f"binom head expects {len(widths)} probs, got {probs.shape[1]}")
    return probs @ widths


def _geometric_series(p: np.ndarray, widths: np.ndarray) -> np.ndarray:
    """p (1 - p^w) / (1 - p) = p + p^2 + ... + p^w, stable near p = 1."""
    with np.errstate(divide="ignore", invalid="ignore"):
        series = p * (-np.expm1(widths * np.log(p))) / (1.0 - p)
    near_one = (1.0 - p) < 1e-6
    if np.any(near_one):
        rows, cols = np.nonzero(near_one)
        for r, c in zip(rows, cols):
            w = int(widths[0, c] if widths.shape[0] == 1 else widths[r, c])
            series[r, c] = np.sum(p[r, c] ** np.arange(1, w + 1))
    return series


def geo_expectation_batch(probs: np.ndarray, scheme: BucketScheme) -> np.ndarray:
    """Closed-form mean of the bucketized geometric law, rows of (B, N+1) probs.

    Bucket i contributes prod_{j<i} p_j^{w_j} times
    x_{i-1} p_i + (p_i + ... + p_i^{w_i}) - x_i p_i^{w_i + 1}; the open tail
    contributes prod_j p_j^{w_j} times (x_N p + p / (1 - p)).
    """
    n = scheme.n_buckets
    if probs.ndim != 2 or probs.shape[1] != n + 1:
        raise ValueError(f"geo head expects {n + 1} probs per row")
    ends = np.asarray(scheme.endpoints, dtype=np.float64)
    lows = np.concatenate(([0.0], ends[:-1]))
    widths = np.asarray(scheme.widths, dtype=np.float64)[None, :]

    inner = probs[:, :n]
    pow_w = np.exp(widths * np.log(inner))  # p_i^{w_i}
    prefix = np.cumprod(pow_w, axis=1)
    prefix = np.concatenate([np.ones((probs.shape[0], 1)), prefix], axis=1)

    series = _geometric_series(inner, widths)
    terms = lows[None, :] * inner + series - ends[None, :] * inner * pow_w

    tail_p = probs[:, n]
    tail = ends[-1] * tail_p + tail_p / (1.0 - tail_p)
    return (prefix[:, :n] * terms).sum(axis=1) + prefix[:, n] * tail


# ---------------------------------------------------------------------------
# per-sample API
# ---------------------------------------------------------------------------


def binom_loss(out: HeadOutput, soft: SoftLabels) -> tuple[float, np.ndarray]:
    """Summed per-bucket cross-entropy and its logit gradient p_i - l_i."""
    target = np.asarray(soft.values, dtype=np.float64)
    if target.shape != out.probs.shape:
        raise ValueError(f"{len(target)} labels for {len(out.probs)} probs")
    losses, grads = binom_loss_batch(out.probs[None, :], target[None, :])
    return float(losses[0]), grads[0]


def geo_loss(out: HeadOutput, scheme: BucketScheme, t: int) -> tuple[float, np.ndarray]:
    if len(out.probs) != scheme.n_buckets + 1:
        raise ValueError(f"geo head expects {scheme.n_buckets + 1} probs, got {len(out.probs)}")
    a, stop = geo_coefficients(scheme, np.asarray([t]))
    losses, grads = geo_loss_batch(out.probs[None, :], a, stop)
    return float(losses[0]), grads[0]


def geo_pmf(out: HeadOutput, scheme: BucketScheme, t: int) -> float:
    """Probability of exactly t under the bucketized geometric law (log-space)."""
    a, stop = geo_coefficients(scheme, np.asarray([t]))
    log_p = (a * np.log(out.probs[None, :]) + stop * np.log1p(-out.probs[None, :])).sum()
    return float(np.exp(log_p))


def geo_expectation(out: HeadOutput, scheme: BucketScheme) -> float:
    return float(geo_expectation_batch(out.probs[None, :], scheme)[0])


def vgeo_loss(out: HeadOutput, t: int) -> tuple[float, np.ndarray]:
    losses, grads = vgeo_loss_batch(out.probs[None, :], np.asarray([t]))
    return float(losses[0]), grads[0]


def wlr_loss(out: HeadOutput, t: int) -> tuple[float, np.ndarray]:
    losses, grads = wlr_loss_batch(out.probs[None, :], np.asarray([t]))
    return float(losses[0]), grads[0]


def loss_batch(
    kind: HeadKind, probs: np.ndarray, encoded_targets
) -> tuple[np.ndarray, np.ndarray]:
    """Dispatch on head kind; encoded_targets comes from encode_targets."""
    if kind is HeadKind.BINOM:
        return binom_loss_batch(probs, encoded_targets)
    if kind is HeadKind.GEO:
        return geo_loss_batch(probs, *encoded_targets)
    if kind is HeadKind.VGEO:
        return vgeo_loss_batch(probs, encoded_targets)
    return wlr_loss_batch(probs, encoded_targets)


def expectation(kind: HeadKind, out: HeadOutput, scheme: BucketScheme | None = None) -> float:
    """Closed-form expected watch time for one sample."""
    return float(expectation_batch(kind, out.probs[None, :], out.logits[None, :], scheme)[0])


def expectation_batch(
    kind: HeadKind,
    probs: np.ndarray,
    logits: np.ndarray,
    scheme: BucketScheme | None = None,
) -> np.ndarray:
    if kind in (HeadKind.BINOM, HeadKind.GEO):
        _require_scheme(kind, scheme)
        if kind is HeadKind.BINOM:
            return binom_expectation_batch(probs, scheme)
        return geo_expectation_batch(probs, scheme)
    if probs.shape[1] != 1:
        raise ValueError(f"{kind.value} head expects a single logit, got {probs.shape[1]}")
    return np.exp(logits[:, 0])
