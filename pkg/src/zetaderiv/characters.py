"""Dirichlet characters mod q built from the CRT decomposition of (Z/qZ)*.

Each odd prime power p^e contributes one cyclic factor generated by the least
primitive root g mod p (lifted to p^e when g^(p-1) = 1 mod p^2).  Powers of
two contribute nothing (q = 2), the single generator -1 (q = 4), or the pair
-1, 5 (q = 2^k, k >= 3).  Discrete logarithms are tabulated per factor, so
every character value is an exact rational multiple of a full turn and only
becomes a complex double at the very end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

import numpy as np

from .errors import CapacityError, InvalidArgumentError

MAX_MODULUS = 10**6


@dataclass(frozen=True)
class Component:
    modulus: int
    generator: int
    order: int


def _factor_small(q: int) -> list[tuple[int, int]]:
    out = []
    d = 2
    while d * d <= q:
        if q % d == 0:
            e = 0
            while q % d == 0:
                q //= d
                e += 1
            out.append((d, e))
        d += 1
    if q > 1:
        out.append((q, 1))
    return out


def least_primitive_root(p: int) -> int:
    """Least primitive root modulo an odd prime p."""
    phi = p - 1
    prime_divisors = [r for r, _ in _factor_small(phi)]
    for g in range(2, p):
        if all(pow(g, phi // r, p) != 1 for r in prime_divisors):
            return g
    raise InvalidArgumentError(f"{p} is not an odd prime")


def _cyclic_log_table(modulus: int, generator: int, order: int) -> np.ndarray:
    table = np.full(modulus, -1, dtype=np.int64)
    x = 1
    for k in range(order):
        table[x] = k
        x = x * generator % modulus
    return table


def _components(q: int) -> tuple[list[Component], list[np.ndarray]]:
    comps: list[Component] = []
    logs: list[np.ndarray] = []
    for p, e in _factor_small(q):
        pe = p**e
        if p == 2:
            if e == 1:
                continue
            if e == 2:
                comps.append(Component(4, 3, 2))
                logs.append(_cyclic_log_table(4, 3, 2))
                continue
            half = pe >> 2
            sign_log = np.full(pe, -1, dtype=np.int64)
            five_log = np.full(pe, -1, dtype=np.int64)
            x = 1
            for b in range(half):
                sign_log[x], five_log[x] = 0, b
                sign_log[pe - x], five_log[pe - x] = 1, b
                x = x * 5 % pe
            comps += [Component(pe, pe - 1, 2), Component(pe, 5, half)]
            logs += [sign_log, five_log]
        else:
            g = least_primitive_root(p)
            if e > 1 and pow(g, p - 1, p * p) == 1:
                g += p
            order = (p - 1) * p ** (e - 1)
            comps.append(Component(pe, g, order))
            logs.append(_cyclic_log_table(pe, g, order))
    return comps, logs


@dataclass(eq=False)
class Character:
    """One character, identified by its exponent on each cyclic factor."""

    group: "CharacterGroup"
    index: tuple[int, ...]

    @property
    def is_principal(self) -> bool:
        return not any(self.index)

    @cached_property
    def exponents(self) -> np.ndarray:
        """chi(n) = exp(2 pi i e(n) / L) with L = group.exponent; -1 where gcd(n, q) > 1."""
        g = self.group
        e = np.zeros(g.q, dtype=np.int64)
        for a, comp, col in zip(self.index, g.components, g.log_columns):
            if a:
                e += a * (g.exponent // comp.order) * col
        e %= g.exponent
        e[~g.coprime] = -1
        e.setflags(write=False)
        return e

    @cached_property
    def table(self) -> np.ndarray:
        """chi(n) for n = 0..q-1 as complex doubles."""
        e = self.exponents
        out = np.where(e >= 0, self.group.roots[np.maximum(e, 0)], 0)
        out.setflags(write=False)
        return out

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.isin(self.exponents, (-1, 0, self.group.exponent // 2))))

    def __call__(self, n):
        return evaluate(self, n)


@dataclass(eq=False)
class CharacterGroup:
    """All phi(q) Dirichlet characters modulo q.

    Characters are ordered lexicographically by index vector, the first
    component most significant; the principal character (all zeros) is index 0.
    """

    q: int
    components: list[Component] = field(init=False)
    phi: int = field(init=False)
    principal_index: int = field(init=False, default=0)

    def __post_init__(self):
        comps, logs = _components(self.q)
        self.components = comps
        self._logs = logs
        self.phi = math.prod(c.order for c in comps)

    @cached_property
    def coprime(self) -> np.ndarray:
        return np.gcd(np.arange(self.q), self.q) == 1

    @cached_property
    def log_columns(self) -> list[np.ndarray]:
        """Discrete log of n mod each component's modulus, for n = 0..q-1."""
        n = np.arange(self.q)
        return [table[n % c.modulus] for c, table in zip(self.components, self._logs)]

    @cached_property
    def exponent(self) -> int:
        """Group exponent: lcm of the component orders."""
        return math.lcm(*(c.order for c in self.components)) if self.components else 1

    @cached_property
    def roots(self) -> np.ndarray:
        L = self.exponent
        k = np.arange(L)
        out = np.exp(2j * np.pi * k / L)
        quarter = (4 * k) % L == 0
        out[quarter] = np.array([1, 1j, -1, -1j])[(4 * k[quarter] // L) % 4]
        return out

    def index_vector(self, i: int) -> tuple[int, ...]:
        if not 0 <= i < self.phi:
            raise IndexError(f"character index {i} outside [0, {self.phi})")
        digits = []
        for c in reversed(self.components):
            i, r = divmod(i, c.order)
            digits.append(r)
        return tuple(reversed(digits))

    def __len__(self) -> int:
        return self.phi

    def __getitem__(self, i: int) -> Character:
        return Character(self, self.index_vector(i))

    def __iter__(self) -> Iterator[Character]:
        return (self[i] for i in range(self.phi))

    @property
    def principal(self) -> Character:
        return self[self.principal_index]

    def nonprincipal(self) -> Iterator[tuple[int, Character]]:
        return ((i, self[i]) for i in range(1, self.phi))

    def value_matrix(self) -> np.ndarray:
        """phi(q) x q matrix of all character values (small q only)."""
        return np.array([chi.table for chi in self])


def build_character_group(q: int) -> CharacterGroup:
    if int(q) != q or q < 3:
        raise InvalidArgumentError(f"modulus must be an integer >= 3, got {q!r}")
    if q > MAX_MODULUS:
        raise CapacityError(f"modulus {q} exceeds {MAX_MODULUS}")
    return CharacterGroup(int(q))


def evaluate(chi: Character, n):
    """chi(n); accepts an integer or an integer array (n >= 0)."""
    if np.ndim(n) == 0:
        if n < 0:
            raise InvalidArgumentError(f"n must be nonnegative, got {n}")
        return complex(chi.table[int(n) % chi.group.q])
    return chi.table[np.asarray(n) % chi.group.q]
