"""Resonators, Gal-type divisor sums and lower-bound certificates.

The resonator weight is the indicator of M = {n : n | P}, P = prod_{p<=y} p^(b-1).
For that choice the normalized resonance sum factors over primes,

    (1/|M|) sum_{n in M} sum_{k | n} k^-s = prod_{p<=y} sum_{v<b} (1 - v/b) p^(-v s),

and the log-weighted variants are (-1)^ell times the ell-th derivative in s.
Everything a certificate reports at finite T is a number with its error-term
magnitudes (constant 1); no finite-T inequality with unknown constants is
asserted.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from scipy.optimize import brentq

from . import arith_core
from ._numerics import fsum_complex
from .characters import CharacterGroup
from .errors import CapacityError, DomainError, InvalidArgumentError
from .evaluators import l_residue_sums

#: Largest resonator support b^w that gal_bruteforce will enumerate.
MAX_BRUTEFORCE_SUPPORT = 10**7

_ENUM_CHUNK = 1 << 16


@dataclass(frozen=True)
class Resonator:
    """The divisor set of prod_{p<=y} p^(b-1)."""

    y: float
    b: int
    primes: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if int(self.b) != self.b or self.b < 1:
            raise InvalidArgumentError(f"b must be a positive integer, got {self.b}")
        if not self.y > 0:
            raise InvalidArgumentError(f"y must be positive, got {self.y}")
        object.__setattr__(self, "primes", tuple(arith_core.primes_upto(self.y).tolist()))

    @property
    def degenerate(self) -> bool:
        """y < 2: no primes, the recipe has not kicked in."""
        return self.y < 2

    @property
    def w(self) -> int:
        return len(self.primes)

    @property
    def log_P(self) -> float:
        return (self.b - 1) * math.fsum(math.log(p) for p in self.primes)

    @property
    def log_support_size(self) -> float:
        return self.w * math.log(self.b)

    @property
    def support_size(self) -> float:
        """b^w as a float (inf if it overflows); see :attr:`log_support_size`."""
        try:
            return float(self.b**self.w)
        except OverflowError:
            return math.inf


@dataclass(frozen=True)
class RecipeParams:
    y: float
    b: int
    degenerate: bool

    def resonator(self) -> Resonator:
        return Resonator(self.y, self.b)


def _loglog(T: float = None, log_T: float = None) -> tuple[float, float]:
    if log_T is None:
        if not T >= 16:
            raise InvalidArgumentError(f"T must be >= 16, got {T}")
        log_T = math.log(T)
    elif not log_T >= math.log(16):
        raise InvalidArgumentError(f"log T must be >= log 16, got {log_T}")
    return log_T, math.log(log_T)


def resonator_params_1line(T: float = None, A: float = 0.0, *, log_T: float = None) -> RecipeParams:
    """y = log T / (3 (log log T)^(2e^A+1)), b = floor((log log T)^(2e^A+1)).

    Pass ``log_T`` instead of ``T`` for heights beyond double range.
    """
    if not A >= 0:
        raise InvalidArgumentError(f"A must be nonnegative, got {A}")
    L, LL = _loglog(T, log_T)
    power = LL ** (2 * math.exp(A) + 1)
    y = L / (3 * power)
    return RecipeParams(y=y, b=max(1, math.floor(power)), degenerate=y < 2)


def resonator_params_subone(T: float = None, *, log_T: float = None) -> RecipeParams:
    """y = log T / (3 log log T), b = floor(log log T)."""
    L, LL = _loglog(T, log_T)
    y = L / (3 * LL)
    return RecipeParams(y=y, b=max(1, math.floor(LL)), degenerate=y < 2)


def subone_threshold_log_T() -> float:
    """Smallest log T >= log 16 at which the sub-one recipe gives y >= 2.

    y >= 2 means L >= 6 log L with L = log T; the relevant root is the larger one.
    """
    return brentq(lambda L: L - 6 * math.log(L), 3.0, 100.0, xtol=1e-14)


def _require_nondegenerate(res: Resonator) -> None:
    if res.degenerate:
        raise InvalidArgumentError(f"degenerate resonator (y={res.y} < 2)")


def _prime_factor_derivs(p: int, b: int, sigma: float, ell: int) -> np.ndarray:
    """f_p^(m)(sigma) for m = 0..ell with f_p(s) = sum_{v<b} (1 - v/b) p^(-v s)."""
    v = np.arange(b, dtype=np.float64)
    lp = math.log(p)
    base = (1 - v / b) * np.exp(-v * sigma * lp)
    return np.array([math.fsum((base * (-v * lp) ** m).tolist()) for m in range(ell + 1)])


def _log_derivs(f: np.ndarray) -> np.ndarray:
    """h^(m) for h = log f, m = 1..ell, from f^(m) = sum_{j<m} C(m-1, j) f^(j) h^(m-j)."""
    ell = f.size - 1
    h = np.zeros(ell + 1)
    for m in range(1, ell + 1):
        acc = f[m] - math.fsum(math.comb(m - 1, j) * f[j] * h[m - j] for j in range(1, m))
        h[m] = acc / f[0]
    return h


def _gal_log_and_ratios(sigma: float, res: Resonator, ell: int) -> tuple[float, np.ndarray]:
    """log F(sigma) and the ratios F^(m)/F for m = 0..ell."""
    G = np.zeros(ell + 1)
    logs, higher = [], [[] for _ in range(ell + 1)]
    for p in res.primes:
        f = _prime_factor_derivs(p, res.b, sigma, ell)
        logs.append(math.log(f[0]))
        h = _log_derivs(f)
        for m in range(1, ell + 1):
            higher[m].append(h[m])
    G[0] = math.fsum(logs)
    for m in range(1, ell + 1):
        G[m] = math.fsum(higher[m])
    ratios = np.zeros(ell + 1)
    ratios[0] = 1.0
    for m in range(1, ell + 1):
        ratios[m] = math.fsum(math.comb(m - 1, j) * ratios[j] * G[m - j] for j in range(m))
    return G[0], ratios


def _check_sigma(sigma: float) -> None:
    if not 0.5 < sigma <= 1:
        raise InvalidArgumentError(f"sigma must lie in (1/2, 1], got {sigma}")


def gal_product(sigma: float, res: Resonator) -> float:
    """prod_{p<=y} sum_{v<b} (1 - v/b) p^(-v sigma), formed in log space."""
    _check_sigma(sigma)
    _require_nondegenerate(res)
    return math.exp(_gal_log_and_ratios(sigma, res, 0)[0])


def gal_weighted_sum(ell: int, sigma: float, res: Resonator) -> float:
    """(1/|M|) sum_{n in M} sum_{k|n} (log k)^ell k^-sigma as (-1)^ell F^(ell)(sigma)."""
    if int(ell) != ell or ell < 0:
        raise InvalidArgumentError(f"ell must be a nonnegative integer, got {ell}")
    _check_sigma(sigma)
    _require_nondegenerate(res)
    logF, ratios = _gal_log_and_ratios(sigma, res, int(ell))
    value = float(ratios[ell]) * math.exp(logF)
    return -value if ell % 2 else value


def gal_bruteforce(ell: int, sigma: float, res: Resonator, k_cap: Optional[float] = None,
                   omega_cap: Optional[int] = None) -> float:
    """Direct enumeration over k in M, each weighted by #{n in M : k | n} / |M|.

    That count is prod_p (b - v_p(k)), so no pair (n, k) is ever skipped.  The
    optional caps restrict k to k <= k_cap and Omega(k) <= omega_cap.
    """
    if int(ell) != ell or ell < 0:
        raise InvalidArgumentError(f"ell must be a nonnegative integer, got {ell}")
    _check_sigma(sigma)
    _require_nondegenerate(res)
    b, w = res.b, res.w
    if res.log_support_size > math.log(MAX_BRUTEFORCE_SUPPORT):
        raise CapacityError(f"support b^w = {b}^{w} exceeds {MAX_BRUTEFORCE_SUPPORT}")
    size = b**w
    logp = np.log(np.array(res.primes, dtype=np.float64))
    exact_k = res.log_P < 43  # k fits comfortably in int64
    pvec = np.array(res.primes, dtype=np.int64)
    partials = []
    for start in range(0, size, _ENUM_CHUNK):
        idx = np.arange(start, min(start + _ENUM_CHUNK, size), dtype=np.int64)
        V = np.empty((idx.size, w), dtype=np.int64)
        rem = idx
        for j in range(w - 1, -1, -1):
            rem, V[:, j] = np.divmod(rem, b)
        keep = np.ones(idx.size, dtype=bool)
        if omega_cap is not None:
            keep &= V.sum(axis=1) <= omega_cap
        if k_cap is not None:
            if exact_k:
                k = np.prod(pvec[None, :] ** V, axis=1)
                keep &= k <= k_cap
            elif k_cap > 0:
                keep &= V @ logp <= math.log(k_cap)
            else:
                keep[:] = False
        V = V[keep]
        logk = V @ logp
        weight = np.prod(1 - V / b, axis=1)
        terms = weight * np.exp(-sigma * logk)
        if ell:
            terms = terms * logk**ell
        partials.append(math.fsum(terms.tolist()))
    return math.fsum(partials)


def short_sum_check(y: float, sigma: float) -> dict:
    """Compare sum_{k<=sqrt y} k^-sigma with y^((1-sigma)/2) / ((1-sigma) log y).

    The inequality is used inside a proof for large (1 - sigma) log y; here it
    is only evaluated and reported.
    """
    if not y >= 2 or not 0.5 < sigma < 1:
        raise InvalidArgumentError("need y >= 2 and sigma in (1/2, 1)")
    K = math.isqrt(math.floor(y))
    lhs = math.fsum(k ** -sigma for k in range(1, K + 1))
    rhs = y ** ((1 - sigma) / 2) / ((1 - sigma) * math.log(y))
    return {"y": float(y), "sigma": float(sigma), "short_sum": lhs, "claimed_bound": rhs, "holds": lhs <= rhs}


@dataclass
class CertificateReport:
    target: str
    parameters: dict
    certificate_value: float
    predicted_envelope: float
    validity: dict = field(default_factory=dict)
    error_terms: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def claimed(self) -> bool:
        return all(self.validity.values())

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "parameters": dict(self.parameters),
            "certificate_value": self.certificate_value,
            "predicted_envelope": self.predicted_envelope,
            "claimed": self.claimed,
            "validity": dict(self.validity),
            "error_terms": [{"description": d, "magnitude": m} for d, m in self.error_terms],
            "details": dict(self.details),
            "notes": list(self.notes),
        }


TARGETS = ("zeta-1line", "zeta-subone")


def zeta_certificate(T: float, ell: int, sigma: float, override_params: Optional[tuple[float, int]] = None,
                     target: Optional[str] = None) -> CertificateReport:
    """Resonance lower-bound certificate for max_{[T, 2T]} |zeta^(ell)(sigma + i t)|.

    Without ``target`` the recipe follows A(T) = (1 - sigma) log log T: A(T) > 1
    (the sub-one hypothesis) selects the sub-one recipe, otherwise the 1-line
    recipe with A = A(T).
    """
    from . import scan

    if not T >= 16:
        raise InvalidArgumentError(f"T must be >= 16, got {T}")
    if int(ell) != ell or ell < 0:
        raise InvalidArgumentError(f"ell must be a nonnegative integer, got {ell}")
    _check_sigma(sigma)
    LL = math.log(math.log(T))
    A = (1 - sigma) * LL
    if target is None:
        target = "zeta-subone" if A > 1 else "zeta-1line"
    if target not in TARGETS:
        raise InvalidArgumentError(f"unknown target {target!r}; expected one of {TARGETS}")
    notes = []
    if override_params is not None:
        y, b = override_params
        res = Resonator(float(y), int(b))
        source = "override"
    else:
        params = resonator_params_subone(T) if target == "zeta-subone" else resonator_params_1line(T, A)
        res = params.resonator()
        source = "recipe"
        if params.degenerate:
            notes.append("recipe gives y < 2 at this T; the recipe is asymptotic only")

    if res.degenerate:
        value = 1.0 if ell == 0 else 0.0  # M = {1}
    else:
        value = gal_weighted_sum(ell, sigma, res)

    validity = {
        "nondegenerate": not res.degenerate,
        "nontrivial": res.b > 1 and not res.degenerate,
        "support_fits": res.log_P <= 0.5 * math.log(T),
    }
    error_terms = [
        ("T^(-3/2) (log T)^(ell+1)", T**-1.5 * math.log(T) ** (ell + 1)),
        ("(log log T)^ell", LL**ell),
    ]
    if target == "zeta-1line":
        envelope = scan.predicted_omega(ell, max(A, 0.0), T)
    else:
        try:
            envelope = scan.predicted_subone(ell, sigma, T)
        except DomainError as exc:
            envelope = math.nan
            notes.append(f"envelope undefined: {exc}")
        if not res.degenerate and sigma < 1:
            details_short = short_sum_check(res.y, sigma)
            notes.append(f"short-sum bound at y={res.y:.6g}: holds={details_short['holds']}")
    notes.append("error-term constants are taken as 1; the lower bound is heuristic at finite T")
    return CertificateReport(
        target=target,
        parameters={"T": float(T), "ell": int(ell), "sigma": float(sigma), "A": A, "y": res.y, "b": res.b,
                    "w": res.w, "log_P": res.log_P, "params_source": source},
        certificate_value=value,
        predicted_envelope=envelope,
        validity=validity,
        error_terms=error_terms,
        details={"scaled_value": value / LL ** (ell + 1)},
        notes=notes,
    )


def _resonator_sums(group: CharacterGroup, r: Mapping[int, float], M: int) -> np.ndarray:
    """Residue-class weights W[c] = sum_{m<=M, m = c mod q} r(m)."""
    W = np.zeros(group.q)
    for m, weight in sorted(r.items()):
        if 1 <= m <= M:
            W[m % group.q] += weight
    return W


def character_resonance(group: CharacterGroup, ell: int, sigma: float, r: Mapping[int, float], M: int, N: int,
                        threads: int = 1) -> CertificateReport:
    """V1, V2 and the ratio |V2|/V1 over the non-principal characters mod q.

    V1 = sum |R_chi|^2 and V2 = sum (-1)^ell L^(ell)(sigma, chi; N) |R_chi|^2 with
    R_chi = sum_{m<=M} chi(m) r(m).  The finite inequality
    max |L^(ell)(sigma, chi; N)| >= |V2| / V1 and the full-group orthogonality
    identity are both checked by direct evaluation.
    """
    if int(ell) != ell or ell < 0:
        raise InvalidArgumentError(f"ell must be a nonnegative integer, got {ell}")
    if not sigma > 0.5:
        raise InvalidArgumentError(f"sigma must exceed 1/2, got {sigma}")
    if M < 1 or N < 1:
        raise InvalidArgumentError("M and N must be positive")
    q = group.q
    sign = -1.0 if ell % 2 else 1.0
    B = l_residue_sums(q, sigma, ell, N)  # carries (-log k)^ell
    W = _resonator_sums(group, r, M)

    def per_character(i: int) -> tuple[complex, float]:
        tab = group[i].table
        L = fsum_complex(tab * B)
        R = fsum_complex(tab * W)
        return L, abs(R) ** 2

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(per_character, range(group.phi)))

    L_vals = [row[0] for row in rows]
    R_sq = [row[1] for row in rows]
    V1 = math.fsum(R_sq[1:])
    if V1 == 0:
        raise InvalidArgumentError("degenerate resonator: R_chi = 0 for every non-principal character")
    V2 = complex(math.fsum(sign * L.real * w for L, w in zip(L_vals[1:], R_sq[1:])),
                 math.fsum(sign * L.imag * w for L, w in zip(L_vals[1:], R_sq[1:])))
    ratio = abs(V2) / V1
    abs_L = [abs(L) for L in L_vals[1:]]
    best = int(np.argmax(abs_L))  # first index on ties
    max_L = abs_L[best]

    # Full-group identity: sum over all chi equals phi(q) times the congruence sum.
    lhs = complex(math.fsum(sign * L.real * w for L, w in zip(L_vals, R_sq)),
                  math.fsum(sign * L.imag * w for L, w in zip(L_vals, R_sq)))
    coprime = group.coprime
    terms = []
    for m, rm in sorted(r.items()):
        if not 1 <= m <= M or not coprime[m % q]:
            continue
        m_inv = pow(m, -1, q)
        for n, rn in sorted(r.items()):
            if 1 <= n <= M and coprime[n % q]:
                terms.append(sign * rm * rn * B[n * m_inv % q])
    rhs = group.phi * math.fsum(terms)
    residual = abs(lhs - rhs) / max(1.0, abs(rhs))

    return CertificateReport(
        target="L-char",
        parameters={"q": q, "ell": int(ell), "sigma": float(sigma), "M": int(M), "N": int(N)},
        certificate_value=ratio,
        predicted_envelope=math.nan,
        validity={"finite_inequality": max_L >= ratio - 1e-10, "orthogonality": residual <= 1e-9},
        error_terms=[],
        details={"V1": V1, "V2_re": V2.real, "V2_im": V2.imag, "ratio": ratio, "max_abs_L": max_L,
                 "argmax_index": best + 1, "orthogonality_lhs": lhs.real, "orthogonality_rhs": rhs,
                 "orthogonality_residual": residual},
        notes=["orthogonality residual is |lhs - rhs| / max(1, |rhs|)"],
    )


def default_character_weights(M: int) -> dict[int, float]:
    """r = indicator of {1, ..., M}."""
    return {m: 1.0 for m in range(1, M + 1)}
