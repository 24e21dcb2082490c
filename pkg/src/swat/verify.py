"""Self-contained property suite behind the `verify` subcommand.

Each check returns (passed, detail).  The suite covers the contracts that do
not need training: analytic gradients against central finite differences,
the closed-form geometric expectation against exact enumeration, the
uniform-probability reduction, the soft-label round trip, gradient bounds,
and the total-mass diagnostic.
"""

from __future__ import annotations

import numpy as np

from . import heads, labels, simulate
from .buckets import BucketScheme, from_endpoints
from .heads import HeadKind, HeadOutput

FD_STEP = 1e-6
FD_RTOL = 1e-5


def _central_diff(f, y: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    grad = np.zeros_like(y)
    for i in range(len(y)):
        up = y.copy()
        dn = y.copy()
        up[i] += step
        dn[i] -= step
        grad[i] = (f(up) - f(dn)) / (2.0 * step)
    return grad


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return float(np.max(np.abs(a - b) / scale))


def _random_scheme(rng, max_buckets: int = 10, max_width: int = 30, tail_open: bool = True):
    n = int(rng.integers(1, max_buckets + 1))
    widths = rng.integers(1, max_width + 1, size=n)
    return BucketScheme(tuple(np.cumsum(widths).tolist()), tail_open)


def _head_loss_fn(kind: HeadKind, scheme, target, soft):
    if kind is HeadKind.BINOM:
        return lambda y: heads.binom_loss(HeadOutput.from_logits(y), soft)
    if kind is HeadKind.GEO:
        return lambda y: heads.geo_loss(HeadOutput.from_logits(y), scheme, target)
    if kind is HeadKind.VGEO:
        return lambda y: heads.vgeo_loss(HeadOutput.from_logits(y), target)
    return lambda y: heads.wlr_loss(HeadOutput.from_logits(y), target)


def check_gradients(trials: int, seed: int, flip: str | None = None) -> dict[str, tuple[bool, str]]:
    """Analytic gradients vs central finite differences for every head."""
    results = {}
    for kind in HeadKind:
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(trials):
            scheme = _random_scheme(rng, max_buckets=6, max_width=12, tail_open=kind is HeadKind.GEO)
            arity = kind.arity(scheme) if kind in (HeadKind.BINOM, HeadKind.GEO) else 1
            y = rng.uniform(-5.0, 5.0, size=arity)
            t = int(rng.integers(0, scheme.endpoints[-1] + 5))
            soft = None
            if kind is HeadKind.BINOM:
                soft = labels.encode(scheme, min(t, scheme.endpoints[-1]))
            loss_fn = _head_loss_fn(kind, scheme, t, soft)
            _, grad = loss_fn(y)
            if flip == kind.value:
                grad = -grad
            fd = _central_diff(lambda yy: loss_fn(yy)[0], y)
            worst = max(worst, _rel_err(grad, fd))
        ok = worst <= FD_RTOL
        results[f"gradient_fd_{kind.value}"] = (ok, f"max rel err {worst:.3e} over {trials} draws")
    return results


def check_expectation_vs_enumeration(trials: int, seed: int) -> tuple[bool, str]:
    """Closed-form geometric expectation vs exact enumeration oracle."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        scheme = _random_scheme(rng)
        probs = rng.uniform(0.05, 0.95, size=scheme.n_buckets + 1)
        out = HeadOutput(logits=np.zeros_like(probs), probs=probs)
        closed = heads.geo_expectation(out, scheme)
        brute = simulate.model_mean(probs, scheme)
        worst = max(worst, abs(closed - brute) / max(abs(brute), 1e-300))
    ok = worst <= 1e-9
    return ok, f"max rel err {worst:.3e} over {trials} schemes"


def check_uniform_reduction(seed: int) -> tuple[bool, str]:
    """With equal probabilities the law collapses to p^t (1-p), mean p/(1-p)."""
    rng = np.random.default_rng(seed)
    worst_pmf, worst_mean = 0.0, 0.0
    for p in (0.1, 0.5, 0.9):
        scheme = _random_scheme(rng, max_buckets=6, max_width=20)
        probs = np.full(scheme.n_buckets + 1, p)
        out = HeadOutput(logits=np.zeros_like(probs), probs=probs)
        for t in range(0, 200):
            worst_pmf = max(worst_pmf, abs(heads.geo_pmf(out, scheme, t) - p**t * (1 - p)))
        mean = heads.geo_expectation(out, scheme)
        worst_mean = max(worst_mean, abs(mean - p / (1 - p)) / (p / (1 - p)))
    ok = worst_pmf <= 1e-12 and worst_mean <= 1e-9
    return ok, f"pmf abs err {worst_pmf:.3e}, mean rel err {worst_mean:.3e}"


def check_label_round_trip(trials: int, seed: int) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    checked = 0
    for _ in range(trials):
        scheme = _random_scheme(rng, max_buckets=8, max_width=25, tail_open=False)
        for t in range(scheme.endpoints[-1] + 1):
            if labels.decode(scheme, labels.encode(scheme, t)) != t:
                return False, f"round trip broke at t={t}, scheme={scheme.endpoints}"
            checked += 1
    return True, f"{checked} (scheme, t) pairs decoded exactly"


def check_gradient_bounds(trials: int, seed: int) -> tuple[bool, str]:
    """binom gradients within [-1, 1]; geo component i <= N within width_i."""
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        scheme = _random_scheme(rng, max_buckets=6, max_width=12, tail_open=False)
        y = rng.uniform(-8.0, 8.0, size=scheme.n_buckets)
        t = int(rng.integers(0, scheme.endpoints[-1] + 1))
        _, grad = heads.binom_loss(HeadOutput.from_logits(y), labels.encode(scheme, t))
        if np.any(np.abs(grad) > 1.0):
            return False, f"binom gradient {grad} escapes [-1, 1]"
        open_scheme = BucketScheme(scheme.endpoints, tail_open=True)
        y = rng.uniform(-8.0, 8.0, size=scheme.n_buckets + 1)
        t = int(rng.integers(0, scheme.endpoints[-1] + 10))
        _, grad = heads.geo_loss(HeadOutput.from_logits(y), open_scheme, t)
        widths = np.asarray(open_scheme.widths, dtype=np.float64)
        if np.any(np.abs(grad[: scheme.n_buckets]) > widths):
            return False, f"geo gradient {grad} escapes width bounds {widths}"
    return True, f"no violations over {trials} draws"


def check_total_mass(trials: int, seed: int) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    scheme = from_endpoints([4, 9, 15], tail_open=True)
    uniform = simulate.total_mass(np.full(4, 0.37), scheme)
    if abs(uniform - 1.0) > 1e-9:
        return False, f"uniform total mass {uniform} != 1"
    lo, hi = np.inf, -np.inf
    for _ in range(trials):
        s = _random_scheme(rng, max_buckets=6, max_width=10)
        mass = simulate.total_mass(rng.uniform(0.05, 0.95, size=s.n_buckets + 1), s)
        lo, hi = min(lo, mass), max(hi, mass)
        if not 0.0 < mass < 2.0:
            return False, f"total mass {mass} outside (0, 2)"
    return True, f"uniform mass exact; random masses in [{lo:.4f}, {hi:.4f}]"


def run_all(trials: int = 100, seed: int = 0, flip_gradient: str | None = None) -> dict[str, dict]:
    checks: dict[str, tuple[bool, str]] = {}
    checks.update(check_gradients(max(trials // 4, 10), seed, flip_gradient))
    checks["expectation_vs_enumeration"] = check_expectation_vs_enumeration(trials, seed + 1)
    checks["uniform_reduction"] = check_uniform_reduction(seed + 2)
    checks["label_round_trip"] = check_label_round_trip(min(trials, 50), seed + 3)
    checks["gradient_bounds"] = check_gradient_bounds(trials * 10, seed + 4)
    checks["total_mass_diagnostic"] = check_total_mass(trials, seed + 5)
    return {name: {"passed": bool(ok), "detail": detail} for name, (ok, detail) in checks.items()}
