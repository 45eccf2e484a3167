"""Truncated Dirichlet-series evaluators for zeta, log zeta and L-function derivatives.

Sign convention: every evaluator returns an approximation to the derivative
itself.  The zeta partial sum carries the factor (-1)^ell explicitly,

    zeta^(ell)(s) ~ (-1)^ell * sum_{n<=N} (log n)^ell n^-s,

while the L-function sum already has it inside, (-log k)^ell.

Unit phases n^-it are exp(-i t log n) with ``t log n`` formed in double-double
arithmetic and reduced mod 2 pi (see :mod:`zetaderiv._numerics`).  All sums
are block-ordered and exactly rounded per block, so a value is bit-identical
for a given block length no matter how the work is scheduled.

The big-O constants of the truncation errors are not known; every error bound
here uses a declared constant (default 1) and is flagged ``heuristic``
wherever the underlying estimate is not a proven inequality with that constant.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import arith_core
from ._numerics import BLOCK, blocked_fsum, fsum_complex, log_table, reduced_phase
from .characters import Character, CharacterGroup
from .errors import DomainError, InvalidArgumentError

SIGMA_MIN = 0.5
SIGMA_MAX = 2.0
ELL_MAX = 10
EPSILON_MAX = 0.25

#: Declared constant in front of the L-function truncation error.
L_ERROR_CONSTANT = 1.0
#: Declared constant in front of the zeta truncation error.
ZETA_ERROR_CONSTANT = 1.0


@dataclass(frozen=True)
class EvalPoint:
    """s = sigma + i t, optionally tagged with A(T) = (1 - sigma) log log T."""

    sigma: float
    t: float
    A_of_T: Optional[float] = None

    def __post_init__(self):
        if not SIGMA_MIN < self.sigma <= SIGMA_MAX:
            raise InvalidArgumentError(f"sigma must lie in (1/2, {SIGMA_MAX}], got {self.sigma}")
        if not math.isfinite(self.t):
            raise InvalidArgumentError(f"t must be finite, got {self.t}")
        if self.A_of_T is not None and self.sigma <= 1 and self.A_of_T < 0:
            raise InvalidArgumentError("A(T) must be nonnegative when sigma <= 1")

    @classmethod
    def for_height(cls, sigma: float, t: float, T: float) -> "EvalPoint":
        return cls(sigma, t, (1 - sigma) * math.log(math.log(T)))

    @classmethod
    def at_sigma_A(cls, A: float, t: float, T: float) -> "EvalPoint":
        """The point sigma_A + i t with sigma_A = 1 - A / log log T."""
        return cls(1 - A / math.log(math.log(T)), t, A)


@dataclass(frozen=True)
class SeriesTruncation:
    N: int
    ell: int = 0
    epsilon: float = EPSILON_MAX

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise InvalidArgumentError(f"N must be an integer >= 2, got {self.N}")
        if int(self.ell) != self.ell or not 0 <= self.ell <= ELL_MAX:
            raise InvalidArgumentError(f"ell must be an integer in [0, {ELL_MAX}], got {self.ell}")
        if not 0 < self.epsilon <= EPSILON_MAX:
            raise InvalidArgumentError(f"epsilon must lie in (0, 1/4], got {self.epsilon}")


@dataclass(frozen=True)
class Approximation:
    """A truncated-series value with its error estimate."""

    value: complex
    error_bound: float
    heuristic: bool
    bound_valid: bool = True


def _phases(t: float, hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
    """exp(-i t log n) given the double-double pieces of log n."""
    return np.exp(-1j * reduced_phase(t, hi, lo))


def unit_phase(t: float):
    """Vectorized n -> n^(-i t), for use with :func:`arith_core.psi_weighted`."""

    def f(n):
        n = np.asarray(n, dtype=np.int64)
        if n.size == 0:
            return np.zeros(0, dtype=np.complex128)
        hi, lo = log_table(int(n.max()))
        return _phases(t, hi[n - 1], lo[n - 1])

    return f


def zeta_sum(x: float, t: float) -> complex:
    """sum_{n <= x} n^(-i t), exactly rounded per block."""
    if not x >= 1:
        raise InvalidArgumentError(f"x must be >= 1, got {x}")
    N = math.floor(x)
    if t == 0:
        return complex(N, 0.0)
    hi, lo = log_table(N)
    return blocked_fsum(_phases(t, hi, lo))


def _dirichlet_block(sigma: float, t: float, ell: int, hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
    mag = np.exp(-sigma * hi)
    if ell:
        mag = mag * hi**ell
    if t == 0:
        return mag.astype(np.complex128)
    return mag * _phases(t, hi, lo)


def dirichlet_partial_sum(sigma: float, t: float, ell: int, N: int) -> complex:
    """sum_{n <= N} (log n)^ell n^-(sigma + i t), without the (-1)^ell factor."""
    hi, lo = log_table(N)
    partials = [fsum_complex(_dirichlet_block(sigma, t, ell, hi[s:s + BLOCK], lo[s:s + BLOCK]))
                for s in range(0, N, BLOCK)]
    return complex(math.fsum(p.real for p in partials), math.fsum(p.imag for p in partials))


def log_power_tail_integral(N: float, sigma: float, ell: int) -> float:
    """int_N^inf (log x)^ell x^-sigma dx for sigma > 1 (closed form)."""
    s = sigma - 1
    L = math.log(N)
    total = math.fsum(math.factorial(ell) / math.factorial(ell - j) * L ** (ell - j) / s ** (j + 1)
                      for j in range(ell + 1))
    return N ** (-s) * total


def zeta_deriv_truncated(pt: EvalPoint, tr: SeriesTruncation) -> Approximation:
    """Approximation to zeta^(ell)(sigma + i t) by the length-N Dirichlet polynomial.

    ``error_bound`` is ell! eps^-ell N^(eps - sigma) (declared constant 1) plus,
    for sigma > 1, the tail sum_{n > N} (log n)^ell n^-sigma bounded by its
    integral.  For sigma <= 1 there is no convergent tail and the bound is
    flagged heuristic.
    """
    ell = tr.ell
    raw = dirichlet_partial_sum(pt.sigma, pt.t, ell, tr.N)
    value = -raw if ell % 2 else raw
    bound = ZETA_ERROR_CONSTANT * math.factorial(ell) * tr.epsilon ** (-ell) * tr.N ** (tr.epsilon - pt.sigma)
    heuristic = pt.sigma <= 1
    if not heuristic:
        if tr.N < math.exp(ell / pt.sigma):
            heuristic = True
        bound += log_power_tail_integral(tr.N, pt.sigma, ell)
    return Approximation(value=value, error_bound=bound, heuristic=heuristic)


def log_zeta_truncated(pt: EvalPoint, y: float) -> tuple[complex, float]:
    """sum_{2 <= n <= y} Lambda(n) / (n^s log n), and sigma_1 for the error term.

    Returns ``(value, sigma1)`` with sigma1 = min(1/2 + 1/log y, sigma/2 + 1/4).
    """
    if not y >= 2:
        raise InvalidArgumentError(f"y must be >= 2, got {y}")
    if not 0.5 < pt.sigma <= 1:
        raise DomainError(f"sigma must lie in (1/2, 1], got {pt.sigma}")
    if pt.t < y + 3:
        raise DomainError(f"t={pt.t} < y + 3; the prime-sum formula is only claimed for t >= y + 3")
    top = math.floor(y)
    table = arith_core.build_prime_table(max(top, 2))
    lam = arith_core.von_mangoldt_array(table, top)
    n = np.flatnonzero(lam)
    hi, lo = log_table(top)
    logn = hi[n - 1]
    terms = lam[n] / logn * np.exp(-pt.sigma * logn) * _phases(pt.t, hi[n - 1], lo[n - 1])
    sigma1 = min(0.5 + 1 / math.log(y), pt.sigma / 2 + 0.25)
    return fsum_complex(terms), sigma1


def log_zeta_error_envelope(pt: EvalPoint, y: float) -> float:
    """log t / (sigma1 - 1/2)^2 * y^(sigma1 - sigma), constant 1."""
    sigma1 = min(0.5 + 1 / math.log(y), pt.sigma / 2 + 0.25)
    return math.log(pt.t) / (sigma1 - 0.5) ** 2 * y ** (sigma1 - pt.sigma)


def l_residue_sums(q: int, sigma: float, ell: int, N: int) -> np.ndarray:
    """B[c] = sum_{k <= N, k = c mod q} (-log k)^ell k^-sigma for c = 0..q-1."""
    out = np.zeros(q)
    partial: list[list[float]] = [[] for _ in range(q)]
    for start in range(0, N, BLOCK):
        stop = min(start + BLOCK, N)
        k = np.arange(start + 1, stop + 1)
        logk = np.log(k)
        terms = np.exp(-sigma * logk)
        if ell:
            terms = terms * (-logk) ** ell
        res = k % q
        order = np.argsort(res, kind="stable")
        bounds = np.searchsorted(res[order], np.arange(q + 1))
        sorted_terms = terms[order]
        for c in range(q):
            a, b = bounds[c], bounds[c + 1]
            if b > a:
                partial[c].append(math.fsum(sorted_terms[a:b].tolist()))
    for c in range(q):
        out[c] = math.fsum(partial[c])
    return out


def l_deriv_truncated(group: CharacterGroup, chi: Character, sigma: float,
                      tr: SeriesTruncation) -> Approximation:
    """sum_{k <= N} chi(k) (-log k)^ell k^-sigma, approximating L^(ell)(sigma, chi).

    The error bound c sqrt(q) log q (log N)^ell / N (c = 1, heuristic) needs a
    non-principal character; for chi_0 it is returned as NaN with
    ``bound_valid=False``.
    """
    ell = tr.ell
    if not sigma > 0.5:
        raise InvalidArgumentError(f"sigma must exceed 1/2, got {sigma}")
    if ell > math.log(tr.N):
        raise DomainError(f"ell={ell} exceeds log N={math.log(tr.N):.3g}")
    q = group.q
    table = chi.table
    partials = []
    for start in range(0, tr.N, BLOCK):
        stop = min(start + BLOCK, tr.N)
        k = np.arange(start + 1, stop + 1)
        logk = np.log(k)
        terms = table[k % q] * np.exp(-sigma * logk)
        if ell:
            terms = terms * (-logk) ** ell
        partials.append(fsum_complex(terms))
    value = complex(math.fsum(p.real for p in partials), math.fsum(p.imag for p in partials))
    if chi.is_principal:
        return Approximation(value=value, error_bound=math.nan, heuristic=True, bound_valid=False)
    bound = L_ERROR_CONSTANT * math.sqrt(q) * math.log(q) * math.log(tr.N) ** ell / tr.N
    return Approximation(value=value, error_bound=bound, heuristic=True)


@dataclass(frozen=True)
class FriableApproxReport:
    """Zeta sum against its friable part; an empirical record, no bound asserted."""

    x: float
    y: float
    t: float
    zeta_sum: complex
    psi_weighted: complex
    abs_difference: float
    psi_count: int
    normalized_discrepancy: float

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("zeta_sum", "psi_weighted"):
            z = d.pop(key)
            d[key + "_re"], d[key + "_im"] = z.real, z.imag
        return d


def friable_approx_report(x: float, y: float, t: float) -> FriableApproxReport:
    if not x >= 2:
        raise InvalidArgumentError(f"x must be >= 2, got {x}")
    full = zeta_sum(x, t)
    friable = arith_core.psi_weighted(x, y, unit_phase(t), vectorized=True)
    count = arith_core.psi_count(x, y)
    diff = abs(full - friable)
    return FriableApproxReport(x=float(x), y=float(y), t=float(t), zeta_sum=full, psi_weighted=friable,
                               abs_difference=diff, psi_count=count, normalized_discrepancy=diff / count)
