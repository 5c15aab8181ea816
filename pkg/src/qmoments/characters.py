"""Quadratic characters chi_{8d} and the d-averaged character sums
T(z, n) = sum over odd square-free d <= z of (8d/n), with report
generators for the square and non-square regimes.

The square-case main term is kept as an exact rational z * prod_{p | 2n}
p/(p+1); the transcendental factor 6/pi^2 is applied only at comparison
time, at >= 15 significant digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from .sieves import SieveTables, kronecker, squarefree_kernel, squarefree_flags_segment

_BLOCK = 1 << 22


@dataclass(frozen=True)
class CharSumResult:
    z: int
    n: int
    value: int
    is_square: bool
    predicted_main: Optional[Fraction]  # z * prod_{p|2n} p/(p+1), square case only
    residual: Optional[float]  # value - (6/pi^2) * predicted_main


def _legendre_table(p: int) -> np.ndarray:
    """(r/p) for r = 0..p-1 as int8, built by squaring all residues."""
    t = np.full(p, -1, dtype=np.int8)
    i = np.arange(1, p, dtype=np.int64)
    t[(i * i) % p] = 1
    t[0] = 0
    return t


def _factor_odd(n: int, tables: SieveTables) -> list[tuple[int, int]]:
    """(prime, exponent) pairs of an odd n, using spf below the table
    limit and trial division by table primes above it (n <= limit**2)."""
    out = []
    if n > tables.limit:
        if n > tables.limit * tables.limit:
            raise ValueError(f"{n} exceeds limit**2; cannot factor")
        for p in tables.primes.tolist():
            if p * p > n:
                break
            if n % p == 0:
                e = 0
                while n % p == 0:
                    n //= p
                    e += 1
                out.append((p, e))
            if n <= tables.limit:
                break
        if n > tables.limit:
            out.append((n, 1))
            return out
    spf = tables.spf
    while n > 1:
        p = int(spf[n])
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        out.append((p, e))
    return out


def odd_squarefree_d(lo: int, hi: int, tables: SieveTables) -> np.ndarray:
    """Odd square-free integers in [lo, hi) as an int64 array."""
    flags = squarefree_flags_segment(lo, hi, tables.primes)
    d = np.arange(lo, hi, dtype=np.int64)
    return d[flags & (d & 1 == 1)]


def char_vector(d: int, Y: int, tables: SieveTables) -> np.ndarray:
    """chi_{8d}(n) for n = 1..Y as an int8 array of length Y+1 (index 0
    unused).  Values are built multiplicatively from the prime values, so
    the cost is one Kronecker evaluation per prime <= Y."""
    if d < 1 or d % 2 == 0 or squarefree_kernel(d, tables) != d:
        raise ValueError(f"d must be odd and square-free, got {d}")
    if Y < 1 or Y > tables.limit:
        raise ValueError(f"Y must be in 1..{tables.limit}, got {Y}")
    chi = np.zeros(Y + 1, dtype=np.int8)
    chi[1] = 1
    spf = tables.spf
    prime_chi = {}
    for p in tables.primes[tables.primes <= Y].tolist():
        prime_chi[p] = kronecker(8 * d, p)
    for n in range(2, Y + 1):
        p = int(spf[n])
        chi[n] = chi[n // p] * prime_chi[p]
    return chi


def _char_values_for_d(n: int, d: np.ndarray, tables: SieveTables) -> np.ndarray:
    """(8d/n) for a vector of odd square-free d, n odd, as int8.

    Uses complete multiplicativity in the bottom: odd exponents contribute
    the Legendre value, even exponents only the p | d vanishing."""
    res = np.ones(len(d), dtype=np.int8)
    for p, e in _factor_odd(n, tables):
        if e & 1:
            table = _legendre_table(p)
            res *= table[(8 * d) % p]
        else:
            res[d % p == 0] = 0
    return res


def char_sum_T(z: int, n: int, tables: SieveTables) -> CharSumResult:
    """Exact T(z, n) = sum_{d <= z, d odd square-free} (8d/n).

    Blocks over d-intervals with exact integer partial sums, so the result
    does not depend on the blocking.  For even n the value is 0.
    """
    if z < 1:
        raise ValueError(f"z must be >= 1, got {z}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n % 2 == 0:
        return CharSumResult(z=z, n=n, value=0, is_square=False, predicted_main=None, residual=None)
    total = 0
    for lo in range(1, z + 1, _BLOCK):
        hi = min(lo + _BLOCK, z + 1)
        d = odd_squarefree_d(lo, hi, tables)
        total += int(np.sum(_char_values_for_d(n, d, tables), dtype=np.int64))
    is_square = squarefree_kernel(n, tables) == 1
    main: Optional[Fraction] = None
    residual: Optional[float] = None
    if is_square:
        main = Fraction(z, 1) * Fraction(2, 3)  # p = 2 always divides 2n
        for p, _ in _factor_odd(n, tables):
            main *= Fraction(p, p + 1)
        with mpmath.workdps(25):
            residual = float(total - mpmath.mpf(6) / mpmath.pi**2 * mpmath.mpf(main.numerator) / main.denominator)
    return CharSumResult(z=z, n=n, value=total, is_square=is_square, predicted_main=main, residual=residual)


def char_sum_T_direct(z: int, n: int, tables: SieveTables) -> int:
    """Reference double loop: one Kronecker evaluation per d.  Used as an
    independent code path against char_sum_T."""
    total = 0
    for d in range(1, z + 1, 2):
        if squarefree_kernel(d, tables) == d:
            total += kronecker(8 * d, n)
    return total


def square_case_report(z: int, m_max: int, tables: SieveTables) -> dict:
    """Square-case residual table: rows for n = m**2 over odd square-free
    m <= m_max, comparing T(z, n) to z/zeta(2) * prod_{p|2n} p/(p+1).

    The normalization exponent 0.6 absorbs the epsilon and log factors of
    the expected z**(1/2+eps) residual at desk scale.
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    rows = []
    max_norm = 0.0
    with mpmath.workdps(25):
        inv_zeta2 = mpmath.mpf(6) / mpmath.pi**2
        for m in range(1, m_max + 1, 2):
            if squarefree_kernel(m, tables) != m:
                continue
            res = char_sum_T(z, m * m, tables)
            main = float(inv_zeta2 * res.predicted_main.numerator / res.predicted_main.denominator)
            norm = res.residual / z**0.6
            max_norm = max(max_norm, abs(norm))
            rows.append(
                {
                    "z": z,
                    "n": m * m,
                    "value": res.value,
                    "main": main,
                    "residual": res.residual,
                    "normalized_residual": norm,
                }
            )
    return {"rows": rows, "max_normalized_residual": max_norm}


def nonsquare_case_report(z_list: Sequence[int], n_list: Sequence[int], tables: SieveTables) -> dict:
    """Non-square ratio table: |T(z, n)| / (z**(1/2) n**(1/4) log(2n)).

    Every n must be odd and not a perfect square.  Emits the max ratio per
    z; boundedness of that ratio along increasing z is the empirical
    content of the non-square estimate.
    """
    for n in n_list:
        if n % 2 == 0:
            raise ValueError(f"n = {n} is even")
        if squarefree_kernel(n, tables) == 1:
            raise ValueError(f"n = {n} is a perfect square")
    rows = []
    max_by_z = {}
    for z in z_list:
        best = 0.0
        for n in n_list:
            value = char_sum_T(z, n, tables).value
            bound = math.sqrt(z) * n**0.25 * math.log(2 * n)
            ratio = abs(value) / bound
            best = max(best, ratio)
            rows.append({"z": z, "n": n, "value": value, "ratio": ratio})
        max_by_z[z] = best
    return {"rows": rows, "max_ratio_by_z": max_by_z}


def count_coprime_odd_squarefree(z: int, m: int, tables: SieveTables) -> int:
    """Direct gcd-filter count of odd square-free d <= z with gcd(d, m) = 1
    (cross-check for the square case of T)."""
    total = 0
    for lo in range(1, z + 1, _BLOCK):
        hi = min(lo + _BLOCK, z + 1)
        d = odd_squarefree_d(lo, hi, tables)
        total += int(np.count_nonzero(np.gcd(d, m) == 1))
    return total
