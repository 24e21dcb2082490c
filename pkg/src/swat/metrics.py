"""Evaluation metrics: MAE, pairwise-ordering XAUC, Pearson correlation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

# All pairs are scored exhaustively up to this many samples; beyond it,
# min(10 n, 1e6) pairs are drawn with the recorded seed.
EXHAUSTIVE_LIMIT = 2000
MAX_SAMPLED_PAIRS = 1_000_000


@dataclass(frozen=True)
class EvalReport:
    """Metric bundle for one prediction run.

    ``pearson`` is NaN when either vector is constant (the correlation is
    undefined there); the standalone ``pearson`` function raises instead.
    """

    mae: float
    xauc: float
    pearson: float
    n: int
    xauc_pairs: int
    seed: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def table(self) -> str:
        rows = [
            ("samples", f"{self.n}"),
            ("mae", f"{self.mae:.6f}"),
            ("xauc", f"{self.xauc:.6f}"),
            ("pearson", f"{self.pearson:.6f}"),
            ("xauc_pairs", f"{self.xauc_pairs}"),
            ("seed", f"{self.seed}"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def _pair(preds, targets) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(preds, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape or p.ndim != 1:
        raise ValueError(f"predictions {p.shape} and targets {t.shape} must be equal-length vectors")
    return p, t


def mae(preds, targets) -> float:
    p, t = _pair(preds, targets)
    if len(p) == 0:
        raise ValueError("mae needs at least one sample")
    return float(np.mean(np.abs(p - t)))


def xauc(preds, targets, pair_budget: int | None = None, seed: int = 0) -> tuple[float, int]:
    """Mean pairwise ordering score and the number of pairs used.

    A pair scores 1 when predictions order the same way as targets, 0 when
    they order oppositely, and 0.5 when either side is tied.
    """
    p, t = _pair(preds, targets)
    n = len(p)
    if n < 2:
        raise ValueError("xauc needs at least two samples")
    all_pairs = n * (n - 1) // 2
    if pair_budget is None:
        pair_budget = all_pairs if n <= EXHAUSTIVE_LIMIT else min(10 * n, MAX_SAMPLED_PAIRS)
    if pair_budget < 1:
        raise ValueError(f"pair_budget must be positive, got {pair_budget}")
    if all_pairs <= pair_budget:
        ia, ib = np.triu_indices(n, k=1)
        used = all_pairs
    else:
        rng = np.random.default_rng(seed)
        ia = rng.integers(0, n, size=pair_budget)
        ib = (ia + rng.integers(1, n, size=pair_budget)) % n
        used = pair_budget
    sp = np.sign(p[ia] - p[ib])
    st = np.sign(t[ia] - t[ib])
    score = np.where((sp == 0) | (st == 0), 0.5, (sp == st).astype(np.float64))
    return float(score.mean()), used


def pearson(preds, targets) -> float:
    p, t = _pair(preds, targets)
    if len(p) < 2:
        raise ValueError("pearson needs at least two samples")
    dp = p - p.mean()
    dt = t - t.mean()
    denom = np.sqrt((dp * dp).sum() * (dt * dt).sum())
    if denom == 0.0:
        raise ValueError("pearson is undefined for a constant vector")
    return float((dp * dt).sum() / denom)


def evaluate(preds, targets, pair_budget: int | None = None, seed: int = 0) -> EvalReport:
    x, used = xauc(preds, targets, pair_budget, seed)
    try:
        r = pearson(preds, targets)
    except ValueError:
        r = float("nan")
    return EvalReport(
        mae=mae(preds, targets),
        xauc=x,
        pearson=r,
        n=len(np.asarray(preds)),
        xauc_pairs=used,
        seed=seed,
    )
