"""Sieves, multiplicative arithmetic and friable-number machinery.

Conventions used throughout:

* ``n <= x`` includes ``n = x``; non-integral ``x`` means ``n <= floor(x)``.
* ``log_2 x`` in the literature denotes ``log log x``; every logarithm in this
  package is natural.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator

import numpy as np

from ._numerics import blocked_fsum
from .errors import CapacityError, DomainError, InvalidArgumentError

#: Largest sieve limit accepted by :func:`build_prime_table`.  The smallest
#: factor table is stored as int32, so the true word-size bound is 2**31 - 1;
#: the practical bound is memory (4 bytes per entry).
MAX_SIEVE_LIMIT = 10**8

#: Friable enumeration refuses to materialize more integers than this.
MAX_FRIABLE_SIZE = 5 * 10**7

#: Enumeration works in int64; products are checked against this bound.
_INT64_SAFE = 2**62


@dataclass(frozen=True, eq=False)
class PrimeTable:
    """Primes and least prime factors up to ``limit`` (immutable)."""

    limit: int
    primes: np.ndarray
    smallest_factor_array: np.ndarray

    def smallest_factor(self, n: int) -> int:
        if not 1 <= n <= self.limit:
            raise CapacityError(f"{n} outside sieve range [1, {self.limit}]")
        return int(self.smallest_factor_array[n])

    def is_prime(self, n: int) -> bool:
        return 2 <= n <= self.limit and int(self.smallest_factor_array[n]) == n

    def primes_upto(self, x: float) -> np.ndarray:
        return self.primes[: np.searchsorted(self.primes, math.floor(x), side="right")]

    def __len__(self) -> int:
        return int(self.primes.size)


def build_prime_table(limit: int) -> PrimeTable:
    """Sieve of Eratosthenes recording the least prime factor of each n <= limit."""
    if int(limit) != limit or limit < 2:
        raise InvalidArgumentError(f"limit must be an integer >= 2, got {limit!r}")
    limit = int(limit)
    if limit > MAX_SIEVE_LIMIT:
        raise CapacityError(f"limit {limit} exceeds MAX_SIEVE_LIMIT={MAX_SIEVE_LIMIT}")
    spf = np.zeros(limit + 1, dtype=np.int32)
    spf[1] = 1
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            multiples = spf[p * p :: p]
            multiples[multiples == 0] = p
    unset = np.flatnonzero(spf == 0)
    unset = unset[unset >= 2]
    spf[unset] = unset
    primes = np.flatnonzero(spf[2:] == np.arange(2, limit + 1)) + 2
    spf.setflags(write=False)
    primes.setflags(write=False)
    return PrimeTable(limit=limit, primes=primes.astype(np.int64), smallest_factor_array=spf)


@lru_cache(maxsize=8)
def _cached_table(limit: int) -> PrimeTable:
    return build_prime_table(limit)


def primes_upto(x: float) -> np.ndarray:
    """All primes <= x (empty when x < 2), via a cached sieve."""
    if x < 2:
        return np.zeros(0, dtype=np.int64)
    top = math.floor(x)
    # Round up to a power of two so nearby requests share one cached sieve.
    limit = max(1024, 1 << (top - 1).bit_length())
    if limit > MAX_SIEVE_LIMIT:
        limit = top
    return _cached_table(limit).primes_upto(x)


@dataclass(frozen=True)
class Factorization:
    """Prime factorization of ``n`` as ascending ``(prime, exponent)`` pairs."""

    n: int
    factors: tuple[tuple[int, int], ...]

    @property
    def largest_prime(self) -> int:
        """P_+(n); 1 for n = 1."""
        return self.factors[-1][0] if self.factors else 1

    @property
    def big_omega(self) -> int:
        return sum(e for _, e in self.factors)

    @property
    def von_mangoldt(self) -> float:
        return math.log(self.factors[0][0]) if len(self.factors) == 1 else 0.0

    @property
    def euler_phi(self) -> int:
        phi = 1
        for p, e in self.factors:
            phi *= (p - 1) * p ** (e - 1)
        return phi


def factorize(n: int, table: PrimeTable) -> Factorization:
    if n < 1:
        raise InvalidArgumentError(f"n must be positive, got {n}")
    if n > table.limit:
        raise CapacityError(f"n={n} exceeds table limit {table.limit}")
    factors: list[tuple[int, int]] = []
    m = int(n)
    spf = table.smallest_factor_array
    while m > 1:
        p = int(spf[m])
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        factors.append((p, e))
    return Factorization(n=int(n), factors=tuple(factors))


def von_mangoldt_array(table: PrimeTable, x: float | None = None) -> np.ndarray:
    """Lambda(n) for n = 0..floor(x) (index 0 and 1 hold 0)."""
    top = table.limit if x is None else math.floor(x)
    if top > table.limit:
        raise CapacityError(f"x={x} exceeds table limit {table.limit}")
    lam = np.zeros(top + 1)
    primes = table.primes_upto(top)
    logs = np.log(primes.astype(np.float64))
    lam[primes] = logs
    for p, lp in zip(primes[primes <= math.isqrt(top)].tolist(), logs.tolist()):
        pk = p * p
        while pk <= top:
            lam[pk] = lp
            pk *= p
    return lam


@dataclass(frozen=True)
class FriableQuery:
    """A point (x, y) together with u = log x / log y."""

    x: float
    y: float

    def __post_init__(self):
        if not self.x > 1:
            raise InvalidArgumentError(f"x must exceed 1 so that u > 0, got {self.x}")
        if not self.y >= 2:
            raise InvalidArgumentError(f"y must be >= 2, got {self.y}")

    @property
    def u(self) -> float:
        if self.x == self.y:
            return 1.0
        return math.log(self.x) / math.log(self.y)


def _check_xy(x: float, y: float) -> None:
    if not x >= 1:
        raise InvalidArgumentError(f"x must be >= 1, got {x}")
    if not y >= 2:
        raise InvalidArgumentError(f"y must be >= 2, got {y}")
    if x >= _INT64_SAFE:
        raise CapacityError(f"x={x} beyond exact enumeration range")


def friable_enumerate(x: float, y: float) -> Iterator[int]:
    """Yield every n <= x with P_+(n) <= y exactly once, in ascending order.

    Each friable m is generated from its parent m / P_+(m); a heap entry
    ``(value, parent, i)`` stands for ``parent * primes[i]``.  Popping an entry
    schedules its first child and its next sibling, so the heap never holds
    more than one pending entry per emitted integer.
    """
    _check_xy(x, y)
    top = math.floor(x)
    primes = primes_upto(min(y, top)).tolist()
    yield 1
    if not primes or primes[0] > top:
        return
    heap = [(primes[0], 1, 0)]
    while heap:
        value, parent, i = heapq.heappop(heap)
        yield value
        child = value * primes[i]
        if child <= top:
            heapq.heappush(heap, (child, value, i))
        if i + 1 < len(primes):
            sibling = parent * primes[i + 1]
            if sibling <= top:
                heapq.heappush(heap, (sibling, parent, i + 1))


def _largest_factor_sieve(top: int) -> np.ndarray:
    lpf = np.ones(top + 1, dtype=np.int64)
    for p in primes_upto(top).tolist():
        lpf[p::p] = p
    return lpf


@lru_cache(maxsize=16)
def _friable_sorted(extent: int, y_int: int) -> np.ndarray:
    primes = primes_upto(y_int)
    if primes.size > 64 and extent <= MAX_SIEVE_LIMIT:
        arr = np.flatnonzero(_largest_factor_sieve(extent) <= y_int)[1:]
    else:
        arr = np.array([1], dtype=np.int64)
        for p in primes.tolist():
            parts = [arr]
            pk = p
            while pk <= extent:
                parts.append(arr[: np.searchsorted(arr, extent // pk, side="right")] * pk)
                pk *= p
            arr = np.sort(np.concatenate(parts))
            if arr.size > MAX_FRIABLE_SIZE:
                raise CapacityError(f"more than {MAX_FRIABLE_SIZE} friable integers below {extent}")
    arr.setflags(write=False)
    return arr


def friable_array(x: float, y: float) -> np.ndarray:
    """Sorted int64 array of the y-friable integers <= x (vectorized twin of the stream)."""
    _check_xy(x, y)
    top = math.floor(x)
    extent = max(1024, 1 << (top - 1).bit_length())
    if y >= top:
        return np.arange(1, top + 1, dtype=np.int64)
    arr = _friable_sorted(extent, math.floor(y))
    return arr[: np.searchsorted(arr, top, side="right")]


def psi_count(x: float, y: float) -> int:
    """Psi(x, y): the number of y-friable integers n <= x."""
    _check_xy(x, y)
    top = math.floor(x)
    if y >= top:
        return top
    return int(friable_array(x, y).size)


def psi_weighted(x: float, y: float, f: Callable, *, vectorized: bool = False) -> complex:
    """Psi(x, y; f) = sum of f(n) over y-friable n <= x, exactly rounded per block.

    With ``vectorized=True`` ``f`` receives the whole int64 array of friable
    integers and must return an array of the same length.
    """
    _check_xy(x, y)
    if vectorized:
        values = np.asarray(f(friable_array(x, y)), dtype=np.complex128)
    else:
        values = np.fromiter((complex(f(n)) for n in friable_enumerate(x, y)), dtype=np.complex128)
    return blocked_fsum(values)


def psi_asymptotic(q: FriableQuery, rho) -> float:
    """Leading term x * rho(u) of Psi(x, y); ``rho`` is a DickmanTable."""
    from .dickman import rho as rho_at

    return q.x * rho_at(rho, q.u)


def psi_log_density(q: FriableQuery, rho) -> float:
    """log(x rho(u)) - log x = log rho(u), the quantity compared with log(Psi/x)."""
    from .dickman import log_rho

    return log_rho(rho, q.u)


def prime_sum_deficit(x: float, sigma: float, table: PrimeTable) -> float:
    """sum_{p<=x} p^-sigma - sigma log log x - x^(1-sigma) / ((1-sigma) log x).

    The lower bound ``deficit >= C`` for an absolute C is not asserted here;
    the value is reported so a constant can be inferred from a grid.
    """
    if not x >= 3:
        raise InvalidArgumentError(f"x must be >= 3, got {x}")
    if not 0.5 < sigma < 1:
        raise InvalidArgumentError(f"sigma must lie in (1/2, 1), got {sigma}")
    if x > table.limit:
        raise CapacityError(f"x={x} exceeds table limit {table.limit}")
    log_x = math.log(x)
    if (1 - sigma) * log_x < 0.5:
        raise DomainError(f"(1 - sigma) log x = {(1 - sigma) * log_x:.4g} < 1/2")
    p = table.primes_upto(x).astype(np.float64)
    prime_sum = math.fsum(np.exp(-sigma * np.log(p)).tolist())
    return prime_sum - sigma * math.log(log_x) - x ** (1 - sigma) / ((1 - sigma) * log_x)


def infer_deficit_constant(xs, sigmas, table: PrimeTable) -> tuple[float, list[tuple[float, float, float]]]:
    """Minimum of :func:`prime_sum_deficit` over a grid, with the grid rows."""
    rows = [(float(x), float(s), prime_sum_deficit(x, s, table)) for x in xs for s in sigmas]
    return min(r[2] for r in rows), rows
