"""Pair-form linear algebra, polytope volumes and the limiting constant,
assembled main-term predictions, and the residual-exponent fit for the
single-sum route.

The k = 3 volume has two closed forms here: ``exact3`` evaluates the
tabulated polynomial 4x^(3/2) - 6x + 3sqrt(x) - 1, while
``volume_k3_by_slab_integration`` integrates the region directly and
yields 4x^(3/2) - 3x log x - 3x - 1.  They agree in the x -> infinity
normalization (both give 4) but differ at finite x; the Monte Carlo
estimator is unbiased for the integral, and the comparison reports keep
both so the discrepancy stays visible.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from .errors import UnsupportedError
from .diagonal import d2_sum, d2_sum_scaled, EXACT_D2_CAP
from .sieves import SieveTables

_MC_BATCH = 1 << 19


@dataclass(frozen=True)
class PairFormMatrix:
    """The k x q matrix whose columns mark all index pairs."""

    k: int
    q: int
    columns: tuple[tuple[int, ...], ...]
    rank: int
    w: int
    degQ: int
    c: tuple[Fraction, ...]
    beta: tuple[int, ...]

    def as_array(self) -> np.ndarray:
        return np.array(self.columns, dtype=np.int8).T  # k rows, q columns


def _exact_rank(rows: list[list[Fraction]]) -> int:
    rows = [row[:] for row in rows]
    rank = 0
    cols = len(rows[0]) if rows else 0
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = rows[r][c]
        rows[r] = [v / inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
        rank += 1
    return rank


def rank_mod_p(matrix: np.ndarray, p: int) -> int:
    """Row rank over GF(p) by independent elimination (cross-check path)."""
    m = (matrix.astype(np.int64) % p).tolist()
    rank = 0
    r = 0
    n_rows = len(m)
    n_cols = len(m[0]) if m else 0
    for c in range(n_cols):
        pivot = next((i for i in range(r, n_rows) if m[i][c] % p != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = pow(m[r][c], p - 2, p)
        m[r] = [(v * inv) % p for v in m[r]]
        for i in range(n_rows):
            if i != r and m[i][c] % p != 0:
                f = m[i][c]
                m[i] = [(a - f * b) % p for a, b in zip(m[i], m[r])]
        r += 1
        rank += 1
    return rank


def build_pair_matrix(k: int) -> PairFormMatrix:
    """Columns enumerate the 2-subsets in order (1,2), (1,3), ..., (2,3),
    ...; exact rational elimination gives the rank, and the polynomial
    degree is q + w - rank with w = 0 (no zero coordinate in the shift)."""
    if not isinstance(k, int) or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k!r}")
    columns = []
    for i in range(k):
        for j in range(i + 1, k):
            col = [0] * k
            col[i] = col[j] = 1
            columns.append(tuple(col))
    q = len(columns)
    rows = [[Fraction(col[r]) for col in columns] for r in range(k)]
    rank = _exact_rank(rows)
    return PairFormMatrix(
        k=k,
        q=q,
        columns=tuple(columns),
        rank=rank,
        w=0,
        degQ=q + 0 - rank,
        c=tuple(Fraction(1, 2) for _ in range(k)),
        beta=tuple(1 for _ in range(k)),
    )


@dataclass(frozen=True)
class PolytopeEstimate:
    k: int
    x: float
    volume: float
    stderr: Optional[float]
    normalized: float
    samples: int
    seed: Optional[int]
    method: str


def exact3_volume_polynomial(x: float) -> float:
    """The tabulated closed form for k = 3: 4x^(3/2) - 6x + 3sqrt(x) - 1."""
    if x < 1:
        raise ValueError("x must be >= 1")
    return 4 * x**1.5 - 6 * x + 3 * math.sqrt(x) - 1


def volume_k3_by_slab_integration(x: float) -> float:
    """Direct volume of {y >= 1 : y1y2 <= x, y1y3 <= x, y2y3 <= x}:
    slicing along the largest coordinate gives
    4x^(3/2) - 3x log(x) - 3x - 1."""
    if x < 1:
        raise ValueError("x must be >= 1")
    return 4 * x**1.5 - 3 * x * math.log(x) - 3 * x - 1


def _mc_chunk(args):
    """One worker's (sum, sum of squares, count) for the log-coordinate
    estimator; substream fixed by (seed, worker index)."""
    rows, L, q, n, seed, widx = args
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(widx,)))
    s = 0.0
    s2 = 0.0
    done = 0
    rows = [np.array(r, dtype=np.int64) for r in rows]
    while done < n:
        m = min(_MC_BATCH, n - done)
        u = rng.random((m, q))
        ok = np.ones(m, dtype=bool)
        for r in rows:
            ok &= u[:, r].sum(axis=1) <= 1.0
        vals = np.where(ok, np.exp(L * u.sum(axis=1)), 0.0) * L**q
        s += float(vals.sum())
        s2 += float(np.dot(vals, vals))
        done += m
    return s, s2, n


def polytope_volume(
    k: int,
    x: float,
    method: str = "exact3",
    samples: int = 1_000_000,
    seed: int = 0,
    workers: int = 1,
) -> PolytopeEstimate:
    """Volume of the pair-constraint region at x.

    method='exact3' (k = 3 only) evaluates the tabulated polynomial.
    method='montecarlo' samples u uniform in [0,1]^q, rejects u outside
    {sum_{i in S_j} u_i <= 1 for all j}, and averages (log x)^q x^(sum u);
    this is unbiased for the volume integral itself.  The normalization
    divides by x^(k/2) (log x)^(q-k).
    """
    if k == 2:
        raise UnsupportedError("k = 2 has no (log x)^(q-k) normalization; handled separately")
    if k < 2:
        raise ValueError("k must be >= 2")
    pm = build_pair_matrix(k)
    if method == "exact3":
        if k != 3:
            raise UnsupportedError("exact3 applies to k = 3 only")
        if x < 1:
            raise ValueError("x must be >= 1")
        vol = exact3_volume_polynomial(x)
        norm = vol / x**1.5 if x > 1 else (0.0 if vol == 0 else float("nan"))
        if x == 1:
            norm = 0.0
        return PolytopeEstimate(k=k, x=x, volume=vol, stderr=None, normalized=norm,
                                samples=0, seed=None, method="exact3")
    if method != "montecarlo":
        raise ValueError(f"unknown method {method!r}")
    if x <= 1:
        raise ValueError("montecarlo requires x > 1")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    # S_j = indices of the pair columns containing coordinate j
    rows = [[i for i, col in enumerate(pm.columns) if col[j] == 1] for j in range(k)]
    L = math.log(x)
    base = samples // workers
    counts = [base + (1 if i < samples % workers else 0) for i in range(workers)]
    chunks = [(rows, L, pm.q, counts[i], seed, i) for i in range(workers) if counts[i] > 0]
    if workers == 1:
        parts = [_mc_chunk(chunks[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_mc_chunk, chunks))
    s = 0.0
    s2 = 0.0
    n = 0
    for ps, ps2, pn in parts:  # fixed worker-index order
        s += ps
        s2 += ps2
        n += pn
    mean = s / n
    var = max(s2 - n * mean * mean, 0.0) / (n - 1)
    stderr = math.sqrt(var / n)
    norm = mean / (x ** (k / 2) * L ** (pm.q - k))
    return PolytopeEstimate(k=k, x=x, volume=mean, stderr=stderr, normalized=norm,
                            samples=n, seed=seed, method="montecarlo")


def estimate_I(
    k: int,
    x_list: Sequence[float],
    samples: int = 1_000_000,
    seed: int = 0,
    workers: int = 1,
    method: str = "montecarlo",
) -> dict:
    """Normalized volume at the largest x plus the trend across x_list.

    Returns the estimate, a 3-sigma confidence interval (Monte Carlo), and
    one row per x.
    """
    if k == 2:
        raise UnsupportedError("k = 2 is not covered by this normalization")
    if list(x_list) != sorted(x_list):
        raise ValueError("x_list must be ascending")
    if not x_list or max(x_list) < 1e4:
        raise ValueError("largest x must be >= 1e4")
    rows = []
    for x in x_list:
        est = polytope_volume(k, x, method=method, samples=samples, seed=seed, workers=workers)
        ci = None
        if est.stderr is not None:
            ci = 3 * est.stderr / (x ** (k / 2) * math.log(x) ** (est.k * (est.k - 1) // 2 - est.k))
        rows.append({"x": x, "volume": est.volume, "stderr": est.stderr,
                     "normalized": est.normalized, "ci3": ci})
    last = rows[-1]
    return {"estimate": last["normalized"], "ci3": last["ci3"], "rows": rows,
            "samples": samples, "seed": seed, "method": method}


def predict_main_term(k: int, X: float, Y: float, z_value) -> float:
    """Leading-order prediction (4/pi^2) * Z * X * Y^(k/2) * (log Y)^degQ.

    For k = 2 the polynomial factor is constant and the prediction is the
    full main term; for k >= 3 the polynomial is monic of degree degQ and
    only its leading power is used (lower coefficients are not predicted).
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    degQ = build_pair_matrix(k).degQ
    return float(4 / math.pi**2 * float(z_value) * X * Y ** (k / 2) * math.log(Y) ** degQ)


def perron_residual_fit(
    Y_list: Sequence[int],
    parity: str,
    z2_value,
    tables: SieveTables,
    workers: int = 1,
) -> dict:
    """Least-squares slope of log|r(Y)| against log Y, where
    r(Y) = D_2(Y) - c*Y with c = z2 (parity 'all') or (3/4) z2 (parity
    'odd', the factor being the removed even local term at 1).

    Y_list must span at least three decades.  The expected exponent from
    the contour analysis is 7/12, asserted downstream as slope <= 0.62.
    """
    if len(Y_list) < 2:
        raise ValueError("Y_list needs at least two points")
    if max(Y_list) < 1000 * min(Y_list):
        raise ValueError("Y_list must span at least three decades")
    with mpmath.workdps(40):
        c = mpmath.mpf(z2_value) if not isinstance(z2_value, mpmath.mpf) else z2_value
        if parity == "odd":
            c = c * mpmath.mpf(3) / 4
        elif parity != "all":
            raise ValueError(f"parity must be 'all' or 'odd', got {parity!r}")
        rows = []
        for Y in Y_list:
            ds = d2_sum(Y, parity, tables) if Y <= EXACT_D2_CAP else d2_sum_scaled(Y, parity, tables)
            d2 = mpmath.mpf(ds.value.numerator) / ds.value.denominator
            r = float(d2 - c * Y)
            rows.append({"Y": Y, "D2": float(d2), "residual": r,
                         "normalized": abs(r) / Y**0.62})
    logy = np.log([row["Y"] for row in rows])
    logr = np.log([max(abs(row["residual"]), 1e-300) for row in rows])
    slope, intercept = np.polyfit(logy, logr, 1)
    return {
        "rows": rows,
        "slope": float(slope),
        "intercept": float(intercept),
        "max_normalized_residual": max(row["normalized"] for row in rows),
        "parity": parity,
        "constant": float(c),
    }
