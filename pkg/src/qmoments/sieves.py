"""Basic arithmetic tables (Mobius, square-free flags, smallest prime
factors, primes) and the Kronecker symbol.

Every other module consumes a :class:`SieveTables`.  Construction is
single-threaded; after ``build_sieve`` returns, the arrays are marked
read-only and the object can be shared freely across workers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ResourceLimitError

# Hard cap on the table length.  Above this the spf array alone would not
# fit a reasonable memory budget; callers that need larger d-ranges use
# segmented sieving instead (see moments.py).
LIMIT_CAP = 2**31

_CACHE_MAGIC = b"QMSV1"


@dataclass(frozen=True)
class SieveTables:
    """Immutable arithmetic tables for 1..limit.

    Attributes:
        limit: largest index covered by the tables
        mobius: int8 array of length limit+1, mobius[n] in {-1, 0, 1}
        squarefree: bool array of length limit+1
        spf: uint32 array of length limit+1; spf[n] is the smallest prime
            factor of n for n >= 2 (spf[0] = spf[1] = 0)
        primes: ascending int64 array of the primes <= limit
    """

    limit: int
    mobius: np.ndarray
    squarefree: np.ndarray
    spf: np.ndarray
    primes: np.ndarray


def build_sieve(limit: int) -> SieveTables:
    """Build all tables up to ``limit`` deterministically.

    Raises ValueError for limit < 2 and ResourceLimitError above the
    documented cap of 2**31.
    """
    if not isinstance(limit, int) or limit < 2:
        raise ValueError(f"sieve limit must be an integer >= 2, got {limit!r}")
    if limit > LIMIT_CAP:
        raise ResourceLimitError(
            f"sieve limit {limit} exceeds the supported cap {LIMIT_CAP}"
        )

    root = int(limit**0.5)
    # prime flags
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, root + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    primes = np.nonzero(is_prime)[0].astype(np.int64)

    # Mobius: sign from the count of distinct prime factors <= sqrt(limit),
    # tracked via the running product of marked primes; any n whose marked
    # product falls short has exactly one extra prime factor > sqrt(limit).
    mobius = np.ones(limit + 1, dtype=np.int8)
    marked = np.ones(limit + 1, dtype=np.int64)
    for p in primes[primes <= root].tolist():
        mobius[p::p] *= -1
        marked[p::p] *= p
        mobius[p * p :: p * p] = 0
    n_idx = np.arange(limit + 1, dtype=np.int64)
    mobius[marked != n_idx] *= -1
    mobius[0] = 0
    mobius[1] = 1

    squarefree = mobius != 0
    squarefree[0] = False

    # smallest prime factor
    spf = np.zeros(limit + 1, dtype=np.uint32)
    for p in primes.tolist():
        block = spf[p::p]
        block[block == 0] = p

    for arr in (mobius, squarefree, spf, primes):
        arr.setflags(write=False)
    return SieveTables(limit=limit, mobius=mobius, squarefree=squarefree, spf=spf, primes=primes)


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for a >= 0, n >= 1.

    Even n is handled through the (a/2) supplement: (a/2) = 0 for even a
    and +-1 according to a mod 8 otherwise.  Completely multiplicative in
    the bottom argument.
    """
    if not isinstance(a, (int, np.integer)) or a < 0:
        raise ValueError(f"top argument must be a non-negative integer, got {a!r}")
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"bottom argument must be a positive integer, got {n!r}")
    a = int(a)
    n = int(n)
    if n == 1:
        return 1
    result = 1
    while not n & 1:
        n >>= 1
        if not a & 1:
            return 0
        if a & 7 in (3, 5):
            result = -result
    if n == 1:
        return result
    a %= n
    while a:
        while not a & 1:
            a >>= 1
            r = n & 7
            if r == 3 or r == 5:
                result = -result
        a, n = n, a
        if a & 3 == 3 and n & 3 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def squarefree_kernel(n: int, tables: SieveTables) -> int:
    """Product of the primes dividing n to an odd power.

    Returns 1 exactly when n is a perfect square.  Callers must keep
    n <= limit**2: any such n has at most one prime factor above the
    table limit, which is what the trailing-cofactor step relies on.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"squarefree_kernel needs a positive integer, got {n!r}")
    n = int(n)
    kernel = 1
    spf = tables.spf
    limit = tables.limit
    if n > limit:
        if n > limit * limit:
            raise ValueError(f"{n} exceeds limit**2 = {limit * limit}; factorization not guaranteed")
        for p in tables.primes.tolist():
            if p * p > n:
                break
            if n % p == 0:
                e = 0
                while n % p == 0:
                    n //= p
                    e += 1
                if e & 1:
                    kernel *= p
            if n <= limit:
                break
        if n > limit:
            # at most one prime factor above the limit remains
            return kernel * n
    while n > 1:
        p = int(spf[n])
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e & 1:
            kernel *= p
    return kernel


def mobius_by_trial_division(n: int) -> int:
    """Independent Mobius oracle by trial factorization (no tables)."""
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return 1
    sign = 1
    d = 2
    while d * d <= n:
        if n % d == 0:
            n //= d
            if n % d == 0:
                return 0
            sign = -sign
        d += 1 if d == 2 else 2
    if n > 1:
        sign = -sign
    return sign


def save_tables(tables: SieveTables, path) -> None:
    """Write the binary cache: magic, limit as u64le, mobius as signed
    bytes, square-free flags as packed bits (little-endian bit order),
    spf as u32le, each covering the documented index ranges."""
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<Q", tables.limit))
        fh.write(tables.mobius[1:].astype(np.int8).tobytes())
        fh.write(np.packbits(tables.squarefree[1:], bitorder="little").tobytes())
        fh.write(tables.spf[2:].astype("<u4").tobytes())


def load_tables(path) -> SieveTables:
    """Load a cache written by :func:`save_tables`.

    Rejects wrong magic bytes and truncated files.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:5] != _CACHE_MAGIC:
        raise ValueError("not a sieve cache: bad magic bytes")
    if len(data) < 13:
        raise ValueError("truncated sieve cache: missing header")
    (limit,) = struct.unpack("<Q", data[5:13])
    if limit < 2 or limit > LIMIT_CAP:
        raise ValueError(f"sieve cache declares unsupported limit {limit}")
    n_mob = limit
    n_bits = (limit + 7) // 8
    n_spf = 4 * (limit - 1)
    expected = 13 + n_mob + n_bits + n_spf
    if len(data) != expected:
        raise ValueError(f"truncated sieve cache: {len(data)} bytes, expected {expected}")
    off = 13
    mobius = np.zeros(limit + 1, dtype=np.int8)
    mobius[1:] = np.frombuffer(data, dtype=np.int8, count=n_mob, offset=off)
    off += n_mob
    bits = np.frombuffer(data, dtype=np.uint8, count=n_bits, offset=off)
    squarefree = np.zeros(limit + 1, dtype=bool)
    squarefree[1:] = np.unpackbits(bits, bitorder="little")[:limit].astype(bool)
    off += n_bits
    spf = np.zeros(limit + 1, dtype=np.uint32)
    spf[2:] = np.frombuffer(data, dtype="<u4", count=limit - 1, offset=off)
    idx = np.arange(limit + 1, dtype=np.uint32)
    primes = np.nonzero(spf == idx)[0].astype(np.int64)
    primes = primes[primes >= 2]
    for arr in (mobius, squarefree, spf, primes):
        arr.setflags(write=False)
    return SieveTables(limit=int(limit), mobius=mobius, squarefree=squarefree, spf=spf, primes=primes)


def squarefree_flags_segment(lo: int, hi: int, primes: np.ndarray) -> np.ndarray:
    """Square-free flags for the half-open range [lo, hi).

    ``primes`` must cover every prime <= sqrt(hi-1).
    """
    if lo < 1 or hi <= lo:
        raise ValueError(f"bad segment [{lo}, {hi})")
    flags = np.ones(hi - lo, dtype=bool)
    top = hi - 1
    for p in primes.tolist():
        q = p * p
        if q > top:
            break
        start = ((lo + q - 1) // q) * q
        if start < hi:
            flags[start - lo :: q] = False
    return flags
