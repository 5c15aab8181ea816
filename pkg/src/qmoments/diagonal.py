"""The k-variable weight f and the diagonal sums D_k(Y), evaluated by
structured enumerations with independent brute-force oracles.

Exact rational arithmetic is authoritative; the reduced denominators of
D_k grow like exp(c*Y), so the exact paths carry documented size caps.
Above the caps a fixed-point path sums per-term integer floors at scale
2**64 (or 2**96 for the triple sum): pure integer arithmetic, bitwise
deterministic and order-independent, with a certified error bound
attached to the result.  That bound sits many orders below the 1e-3
comparison precision the trend experiments need.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

try:
    from gmpy2 import mpq
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    mpq = Fraction

from .errors import ResourceLimitError, UnsupportedError
from .sieves import SieveTables

# Size caps for the exact-rational paths (seconds-scale runtimes).
EXACT_D2_CAP = 200_000
EXACT_D3_CAP = 5_000
BRUTE_CAP = {2: 2_000, 3: 300, 4: 60, 5: 25, 6: 15}
GENERIC_CAP = {2: 200_000, 3: 5_000, 4: 5_000, 5: 600, 6: 120}

_SCALE2 = 64  # fixed-point shift for the single sum
_SCALE3 = 32  # per-factor shift for the triple sum


@dataclass(frozen=True)
class DiagonalSum:
    k: int
    Y: int
    parity: str
    value: Fraction
    method: str  # structured | bruteforce | fixedpoint
    error_bound: Fraction  # 0 for the exact methods


def _check_parity(parity: str) -> None:
    if parity not in ("all", "odd"):
        raise ValueError(f"parity must be 'all' or 'odd', got {parity!r}")


def _weight_primes(n: int, tables: SieveTables) -> list[int]:
    """Distinct primes of n (n <= limit)."""
    ps = []
    spf = tables.spf
    while n > 1:
        p = int(spf[n])
        ps.append(p)
        while n % p == 0:
            n //= p
    return ps


def f_value(tup: Sequence[int], tables: SieveTables) -> Fraction:
    """The tuple weight: mu(n_1)...mu(n_k) * prod_{p | n_1...n_k} p/(p+1)
    when the product is a perfect square, else 0.

    Zero unless every entry is square-free; on the support the Mobius
    signs multiply to +1, so the value is the positive prime-product
    weight.
    """
    sign = 1
    parity_by_prime: dict[int, int] = {}
    for n in tup:
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError(f"tuple entries must be positive integers, got {n!r}")
        n = int(n)
        if n > tables.limit:
            raise ValueError(f"entry {n} exceeds the table limit {tables.limit}")
        mu = int(tables.mobius[n])
        if mu == 0:
            return Fraction(0)
        sign *= mu
        for p in _weight_primes(n, tables):
            parity_by_prime[p] = parity_by_prime.get(p, 0) ^ 1
    if any(parity_by_prime.values()):
        return Fraction(0)  # product is not a square
    value = Fraction(sign)
    for p in parity_by_prime:
        value *= Fraction(p, p + 1)
    return value


def sigma_squarefree(Y: int, tables: SieveTables) -> np.ndarray:
    """sigma(n) = prod_{p|n}(p+1) for square-free n <= Y (int64 array;
    entries at non-square-free n are not meaningful)."""
    if Y > tables.limit:
        raise ValueError(f"Y = {Y} exceeds the table limit")
    sig = np.ones(Y + 1, dtype=np.int64)
    for p in tables.primes[tables.primes <= Y].tolist():
        sig[p::p] *= p + 1
    return sig


def _squarefree_values(Y: int, parity: str, tables: SieveTables) -> np.ndarray:
    vals = np.nonzero(tables.squarefree[: Y + 1])[0].astype(np.int64)
    if parity == "odd":
        vals = vals[vals & 1 == 1]
    return vals


def _tree_sum(values: list):
    """Pairwise reduction; keeps intermediate denominators small compared
    to a running accumulation."""
    if not values:
        return mpq(0)
    while len(values) > 1:
        nxt = [values[i] + values[i + 1] for i in range(0, len(values) - 1, 2)]
        if len(values) & 1:
            nxt.append(values[-1])
        values = nxt
    return values[0]


def _as_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def d2_sum(Y: int, parity: str, tables: SieveTables) -> DiagonalSum:
    """Exact D_2(Y) = sum_{n <= Y} mu(n)^2 * n/sigma(n) (odd n only for
    parity='odd'); for square-free n the weight prod p/(p+1) is n/sigma(n).
    """
    _check_parity(parity)
    if Y < 1:
        raise ValueError("Y must be >= 1")
    if Y > EXACT_D2_CAP:
        raise ResourceLimitError(
            f"exact D_2 capped at Y = {EXACT_D2_CAP}; use d2_sum_scaled for larger Y"
        )
    sig = sigma_squarefree(Y, tables)
    terms = [mpq(int(n), int(sig[n])) for n in _squarefree_values(Y, parity, tables)]
    return DiagonalSum(k=2, Y=Y, parity=parity, value=_as_fraction(_tree_sum(terms)),
                       method="structured", error_bound=Fraction(0))


def d2_sum_scaled(Y: int, parity: str, tables: SieveTables) -> DiagonalSum:
    """Fixed-point D_2(Y): sum of floor(2**64 * n / sigma(n)).

    The true value exceeds the returned one by less than count * 2**-64.
    """
    _check_parity(parity)
    if Y < 1:
        raise ValueError("Y must be >= 1")
    sig = sigma_squarefree(Y, tables)
    acc = 0
    count = 0
    for n in _squarefree_values(Y, parity, tables).tolist():
        acc += (n << _SCALE2) // int(sig[n])
        count += 1
    return DiagonalSum(k=2, Y=Y, parity=parity, value=Fraction(acc, 1 << _SCALE2),
                       method="fixedpoint", error_bound=Fraction(count, 1 << _SCALE2))


def _d3_enumerate_exact(Y: int, parity: str, tables: SieveTables):
    """Pairwise-coprime square-free triples (a, b, c) with n_1 = ab,
    n_2 = ac, n_3 = bc all <= Y; weight prod_{p|abc} p/(p+1)."""
    sig = sigma_squarefree(Y, tables)
    sfl = _squarefree_values(Y, parity, tables).tolist()
    terms = []
    for a in sfl:
        if a > Y:
            break
        wa = mpq(a, int(sig[a]))
        bmax = Y // a
        for b in sfl:
            if b > bmax:
                break
            if math.gcd(a, b) != 1:
                continue
            wab = wa * mpq(b, int(sig[b]))
            m = a * b
            cmax = Y // max(a, b)
            for c in sfl:
                if c > cmax:
                    break
                if math.gcd(c, m) == 1:
                    terms.append(wab * mpq(c, int(sig[c])))
    return _tree_sum(terms)


def d3_sum(Y: int, parity: str, tables: SieveTables, method: str = "structured",
           cap: int | None = None) -> DiagonalSum:
    """Exact D_3(Y) by the coprime-triple parametrization, or by the
    brute-force tuple oracle.  Both return identical exact rationals."""
    _check_parity(parity)
    if Y < 1:
        raise ValueError("Y must be >= 1")
    if method == "structured":
        limit = cap if cap is not None else EXACT_D3_CAP
        if Y > limit:
            raise ResourceLimitError(
                f"exact structured D_3 capped at Y = {limit}; use d3_sum_scaled for larger Y"
            )
        value = _d3_enumerate_exact(Y, parity, tables)
        return DiagonalSum(k=3, Y=Y, parity=parity, value=_as_fraction(value),
                           method="structured", error_bound=Fraction(0))
    if method == "bruteforce":
        return dk_sum_bruteforce(3, Y, parity, tables)
    raise ValueError(f"unknown method {method!r}")


def _d3_scaled_range(Y: int, parity: str, ia0: int, ia1: int) -> tuple[int, int]:
    """Fixed-point triple sum over the a-range [ia0, ia1) of the
    square-free list.  Per-factor quotients floor(2**32 w); the error per
    term is below 2**-30, tracked through the returned term count."""
    is_p = np.ones(Y + 1, dtype=bool)
    is_p[:2] = False
    for q in range(2, int(Y**0.5) + 1):
        if is_p[q]:
            is_p[q * q :: q] = False
    primes = np.nonzero(is_p)[0]
    sf = np.ones(Y + 1, dtype=bool)
    sf[0] = False
    sig = np.ones(Y + 1, dtype=np.int64)
    for p in primes.tolist():
        if p * p <= Y:
            sf[p * p :: p * p] = False
        sig[p::p] *= p + 1
    n_all = np.nonzero(sf)[0].astype(np.int64)
    if parity == "odd":
        n_all = n_all[n_all & 1 == 1]
    q32 = ((n_all.astype(object) << _SCALE3) // sig[n_all].astype(object)).astype(np.int64)
    # pos[t] = how many listed values are <= t
    pos = np.zeros(Y + 1, dtype=np.int64)
    pos[n_all] = 1
    pos = np.cumsum(pos)
    sfl = n_all.tolist()
    q32l = q32.tolist()
    total = 0
    count = 0
    for ia in range(ia0, min(ia1, len(sfl))):
        a = sfl[ia]
        qa = q32l[ia]
        nb = int(pos[Y // a])
        bs = n_all[:nb]
        coprime_b = np.nonzero(np.gcd(bs, a) == 1)[0]
        inner = 0
        for ib in coprime_b.tolist():
            b = sfl[ib]
            nc = int(pos[Y // max(a, b)])
            mask = np.gcd(n_all[:nc], a * b) == 1
            csum = int(np.sum(q32[:nc], where=mask, dtype=np.int64))
            inner += q32l[ib] * csum
            count += int(np.count_nonzero(mask))
        total += qa * inner
    return total, count


def _d3_scaled_chunk(args):
    return _d3_scaled_range(*args)


def d3_sum_scaled(Y: int, parity: str, tables: SieveTables, workers: int = 1) -> DiagonalSum:
    """Fixed-point D_3(Y) at scale 2**96, parallel over a-ranges.

    The true value T and the returned estimate E satisfy
    0 <= T - E < count * 2**-30 (three downward-rounded 32-bit factors).
    Integer partials make the merge order irrelevant.
    """
    _check_parity(parity)
    if Y < 1:
        raise ValueError("Y must be >= 1")
    if Y > tables.limit:
        raise ValueError(f"Y = {Y} exceeds the table limit")
    n_sf = len(_squarefree_values(Y, parity, tables))
    if workers <= 1:
        total, count = _d3_scaled_range(Y, parity, 0, n_sf)
    else:
        # balance chunks by the harmonic work estimate sum(Y // a)
        vals = _squarefree_values(Y, parity, tables)
        weights = np.cumsum(Y // vals)
        n_chunks = workers * 4
        bounds = [0]
        for j in range(1, n_chunks):
            cut = int(np.searchsorted(weights, weights[-1] * j / n_chunks))
            bounds.append(max(cut, bounds[-1]))
        bounds.append(len(vals))
        chunks = [(Y, parity, bounds[i], bounds[i + 1]) for i in range(n_chunks) if bounds[i] < bounds[i + 1]]
        total = 0
        count = 0
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for t, c in pool.map(_d3_scaled_chunk, chunks):
                total += t
                count += c
    scale = 1 << (3 * _SCALE3)
    return DiagonalSum(k=3, Y=Y, parity=parity, value=Fraction(total, scale),
                       method="fixedpoint", error_bound=Fraction(count, 1 << 30))


def dk_sum_bruteforce(k: int, Y: int, parity: str, tables: SieveTables) -> DiagonalSum:
    """Oracle: enumerate square-free k-tuples lexicographically, pruning a
    branch as soon as the square-free kernel of the partial product
    exceeds the product of the remaining range bounds."""
    _check_parity(parity)
    if k < 2 or k > 6:
        raise ValueError("k must be in 2..6")
    if Y < 1:
        raise ValueError("Y must be >= 1")
    if Y > BRUTE_CAP[k]:
        raise ResourceLimitError(f"brute-force D_{k} capped at Y = {BRUTE_CAP[k]}")
    sfl = _squarefree_values(Y, parity, tables).tolist()
    terms = []

    def rec(depth: int, kernel: int, entries: tuple[int, ...]):
        if depth == k:
            if kernel == 1:
                primes = set()
                for n in entries:
                    primes.update(_weight_primes(n, tables))
                w = mpq(1)
                for p in primes:
                    w *= mpq(p, p + 1)
                terms.append(w)
            return
        remaining_bound = Y ** (k - depth - 1)
        for n in sfl:
            g = math.gcd(kernel, n)
            new_kernel = (kernel // g) * (n // g)
            if new_kernel > remaining_bound:
                continue
            rec(depth + 1, new_kernel, entries + (n,))

    rec(0, 1, ())
    return DiagonalSum(k=k, Y=Y, parity=parity, value=_as_fraction(_tree_sum(terms)),
                       method="bruteforce", error_bound=Fraction(0))


def dk_sum_generic(k: int, Y: int, parity: str, tables: SieveTables) -> DiagonalSum:
    """Structured D_k: assign pairwise-coprime square-free values y_S to
    the even-size subsets S of {1..k}, with n_j = prod_{S containing j}
    y_S <= Y and weight prod_{p | prod y_S} p/(p+1)."""
    _check_parity(parity)
    if k < 2 or k > 6:
        raise ValueError("k must be in 2..6")
    if Y < 1:
        raise ValueError("Y must be >= 1")
    if Y > GENERIC_CAP[k]:
        raise ResourceLimitError(f"generic structured D_{k} capped at Y = {GENERIC_CAP[k]}")
    subsets = []
    for size in range(2, k + 1, 2):
        subsets.extend(combinations(range(k), size))
    sfl = _squarefree_values(Y, parity, tables).tolist()
    sig = sigma_squarefree(Y, tables)
    terms = []
    n_parts = [1] * k

    def rec(idx: int, used: int, weight):
        if idx == len(subsets):
            terms.append(weight)
            return
        S = subsets[idx]
        bound = min(Y // n_parts[j] for j in S)
        for y in sfl:
            if y > bound:
                break
            if math.gcd(y, used) != 1:
                continue
            for j in S:
                n_parts[j] *= y
            rec(idx + 1, used * y, weight * mpq(y, int(sig[y])))
            for j in S:
                n_parts[j] //= y
        return

    rec(0, 1, mpq(1))
    return DiagonalSum(k=k, Y=Y, parity=parity, value=_as_fraction(_tree_sum(terms)),
                       method="structured", error_bound=Fraction(0))


def diagonal_ratio_trend(
    k: int,
    Y_list: Sequence[int],
    parity: str,
    candidates: Mapping[str, float],
    tables: SieveTables,
    workers: int = 1,
) -> list[dict]:
    """Rows (Y, D_k, D_k / Y**(k/2), ratio per candidate constant).

    Only k = 3 is supported: its polynomial factor has degree 0, so the
    pure-power normalization is meaningful.
    """
    if k != 3:
        raise UnsupportedError(
            "diagonal_ratio_trend supports only k = 3; higher k needs the full polynomial factor"
        )
    _check_parity(parity)
    rows = []
    for Y in Y_list:
        if Y <= EXACT_D3_CAP:
            ds = d3_sum(Y, parity, tables)
        else:
            ds = d3_sum_scaled(Y, parity, tables, workers=workers)
        value = float(Fraction(ds.value))
        normalized = value / Y**1.5
        row = {
            "Y": Y,
            "D_k": value,
            "D_k_exact": f"{ds.value.numerator}/{ds.value.denominator}",
            "method": ds.method,
            "normalized": normalized,
        }
        for name, c in candidates.items():
            row[f"ratio_{name}"] = normalized / c
        rows.append(row)
    return rows
