"""Exact computation of the moments S_k(X, Y) of the twisted Mobius
averages, the tuple-rearranged evaluation route, and the convergence
experiment against candidate main-term constants.

All accumulation is exact: inner sums are small integers, their k-th
powers and the outer sum are Python big integers.  The d-range is split
into fixed-size blocks independent of the worker count; block results are
integer histograms, so the final value is bitwise identical for any
number of workers.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ResourceLimitError
from .characters import _legendre_table, char_sum_T
from .sieves import SieveTables, kronecker, squarefree_flags_segment, squarefree_kernel

BLOCK = 1 << 20

# Above this many tuples the rearranged route refuses to run; at the
# documented sizes (k = 3, Y <= 30) the count stays far below it.
_REARRANGE_TUPLE_CAP = 4_000_000


@dataclass(frozen=True)
class MomentResult:
    k: int
    X: int
    Y: int
    value: int
    d_count: int
    runtime_ms: float
    worker_count: int


def _odd_squarefree_basis(Y: int, tables: SieveTables):
    """Odd square-free n <= Y with their Mobius signs and prime index
    lists, plus the odd primes <= Y.  This is the inner-sum support."""
    odd_primes = [int(p) for p in tables.primes.tolist() if p <= Y and p > 2]
    index = {p: i for i, p in enumerate(odd_primes)}
    entries = []
    for n in range(1, Y + 1, 2):
        if not tables.squarefree[n]:
            continue
        m = n
        idxs = []
        while m > 1:
            p = int(tables.spf[m])
            idxs.append(index[p])
            m //= p
        entries.append((n, int(tables.mobius[n]), idxs))
    return odd_primes, entries


def inner_sum(d: int, Y: int, tables: SieveTables) -> int:
    """M(Y, chi_{8d}) = sum_{n <= Y} chi_{8d}(n) mu(n), exactly.

    Only odd square-free n contribute: chi vanishes at even n and mu at
    non-square-free n.  One Kronecker evaluation per odd prime <= Y.
    """
    if d < 1 or d % 2 == 0 or squarefree_kernel(d, tables) != d:
        raise ValueError(f"d must be odd and square-free, got {d}")
    if Y < 0:
        raise ValueError(f"Y must be >= 0, got {Y}")
    if Y == 0:
        return 0
    odd_primes, entries = _odd_squarefree_basis(Y, tables)
    chi = [kronecker(8 * d, p) for p in odd_primes]
    total = 0
    for _, mu, idxs in entries:
        term = mu
        for i in idxs:
            term *= chi[i]
        total += term
    return total


def _inner_values_block(lo: int, hi: int, odd_primes, entries, seg_primes) -> tuple[np.ndarray, np.ndarray]:
    """Vector of inner-sum values for the odd square-free d in [lo, hi).

    Returns (d_vector, values).  chi_{8d}(p) is evaluated for the whole
    block at once through the quadratic-residue table of each prime.
    """
    flags = squarefree_flags_segment(lo, hi, seg_primes)
    d = np.arange(lo, hi, dtype=np.int64)
    d = d[flags & (d & 1 == 1)]
    chi = np.empty((len(odd_primes), len(d)), dtype=np.int8)
    for i, p in enumerate(odd_primes):
        chi[i] = _legendre_table(p)[(8 * d) % p]
    values = np.zeros(len(d), dtype=np.int32)
    for _, mu, idxs in entries:
        if not idxs:
            values += mu
            continue
        term = chi[idxs[0]].astype(np.int32)
        for i in idxs[1:]:
            term *= chi[i]
        if mu == 1:
            values += term
        else:
            values -= term
    return d, values


def _histogram_block(args) -> np.ndarray:
    """Histogram of inner values over one d-block (offset by Y)."""
    lo, hi, Y, odd_primes, entries, seg_primes = args
    _, values = _inner_values_block(lo, hi, odd_primes, entries, seg_primes)
    return np.bincount(values + Y, minlength=2 * Y + 1)


def moment(k: int, X: int, Y: int, tables: SieveTables, workers: int = 1) -> MomentResult:
    """Exact S_k(X, Y) over odd square-free d <= X.

    Requires tables.limit >= max(Y, sqrt(X)); d beyond the table limit is
    handled by segmented square-free sieving.  Deterministic: the block
    partition is fixed and block histograms merge by exact integer
    addition, independent of worker count.
    """
    if not isinstance(k, int) or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k!r}")
    if X < 1:
        raise ValueError(f"X must be >= 1, got {X}")
    if Y < 1 or Y > tables.limit:
        raise ValueError(f"Y must be in 1..{tables.limit}, got {Y}")
    root = math.isqrt(X)
    if tables.limit < root:
        raise ValueError(f"tables.limit = {tables.limit} < sqrt(X) = {root}; build a larger sieve")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    t0 = time.perf_counter()
    odd_primes, entries = _odd_squarefree_basis(Y, tables)
    seg_primes = tables.primes[tables.primes <= root]
    blocks = [(lo, min(lo + BLOCK, X + 1), Y, odd_primes, entries, seg_primes) for lo in range(1, X + 1, BLOCK)]
    hist = np.zeros(2 * Y + 1, dtype=np.int64)
    if workers == 1 or len(blocks) == 1:
        for b in blocks:
            hist += _histogram_block(b)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for h in pool.map(_histogram_block, blocks):
                hist += h
    value = 0
    for idx in np.nonzero(hist)[0].tolist():
        value += int(hist[idx]) * (idx - Y) ** k
    d_count = int(hist.sum())
    dt = (time.perf_counter() - t0) * 1000.0
    return MomentResult(k=k, X=X, Y=Y, value=value, d_count=d_count, runtime_ms=dt, worker_count=workers)


def moment_via_rearrangement(k: int, X: int, Y: int, tables: SieveTables) -> int:
    """S_k(X, Y) through the swapped summation order: a sum over k-tuples
    of mu(n_1)...mu(n_k) * T(X, n_1...n_k).

    Must equal moment(k, X, Y) exactly.  Tuples with an even or
    non-square-free entry contribute nothing (the character vanishes at
    even arguments, mu at squared factors), so only odd square-free
    entries are enumerated.
    """
    if not isinstance(k, int) or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k!r}")
    support = [n for n in range(1, Y + 1, 2) if tables.squarefree[n]]
    if len(support) ** k > _REARRANGE_TUPLE_CAP:
        raise ResourceLimitError(
            f"{len(support)}**{k} tuples exceed the rearrangement cap {_REARRANGE_TUPLE_CAP}"
        )
    mu = {n: int(tables.mobius[n]) for n in support}
    t_cache: dict[int, int] = {}

    def T(n: int) -> int:
        if n not in t_cache:
            t_cache[n] = char_sum_T(X, n, tables).value
        return t_cache[n]

    total = 0

    def rec(depth: int, sign: int, prod: int):
        nonlocal total
        if depth == k:
            total += sign * T(prod)
            return
        for n in support:
            rec(depth + 1, sign * mu[n], prod * n)

    rec(0, 1, 1)
    return total


def default_y_rule(X: int) -> int:
    """Y = floor(X**(1/4)), safely inside the Y << X**(1/3) regime."""
    y = round(X**0.25)
    while (y + 1) ** 4 <= X:
        y += 1
    while y**4 > X:
        y -= 1
    return max(y, 1)


def convergence_experiment(
    k: int,
    X_list: Sequence[int],
    candidates: Mapping[str, float],
    tables: SieveTables,
    y_rule: Callable[[int], int] | None = None,
    workers: int = 1,
) -> list[dict]:
    """Rows (X, Y, S_k, d_count, ratio per candidate constant c), with
    ratio = S_k / (c * X * Y**(k/2)).

    The default Y rule is floor(X**(1/4)); any supplied rule must keep
    Y <= X**(1/3).
    """
    if y_rule is None:
        y_rule = default_y_rule
    rows = []
    for X in X_list:
        Y = y_rule(X)
        if Y**3 > X:
            raise ValueError(f"y_rule gives Y = {Y} > X**(1/3) for X = {X}")
        res = moment(k, X, Y, tables, workers=workers)
        row = {
            "X": X,
            "Y": Y,
            "S_k": res.value,
            "d_count": res.d_count,
        }
        for name, c in candidates.items():
            row[f"ratio_{name}"] = res.value / (c * X * Y ** (k / 2))
        rows.append(row)
    return rows
