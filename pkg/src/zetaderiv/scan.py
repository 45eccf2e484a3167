"""Extreme-value scans of |zeta^(ell)| on [T, 2T] and of |L^(ell)| over characters.

The coarse grid t_j = T + j h is evaluated block by block with a type-1
non-uniform FFT: for a block centred at t_c,

    sum_n a_n n^(-i(t_c + k h)) = sum_n [a_n e^(-i t_c log n)] e^(-i k (h log n)),

which is exactly a type-1 transform with sources at h log n.  Only the
candidate selection uses these values.  The best local maxima are refined
by golden-section search on a local Taylor expansion around the grid point,
and the reported value is always a direct evaluation.

Block length, NUFFT tolerance and the order of reductions are fixed, so the
result does not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional

import finufft
import numpy as np

from . import dickman
from ._numerics import log_table, reduced_phase
from .characters import CharacterGroup
from .errors import CapacityError, DomainError, InvalidArgumentError
from .evaluators import EvalPoint, SeriesTruncation, l_residue_sums, zeta_deriv_truncated

MIN_T = 1e3
MAX_HEIGHT = 1e9
MAX_SCAN_N = 10**7
DEFAULT_STEP_FACTOR = 0.1
MAX_STEP_FACTOR = 0.5
DEFAULT_REFINE_ITERS = 40
TOP_CANDIDATES = 8

NUFFT_BLOCK = 1 << 20
NUFFT_EPS = 1e-11
TAYLOR_TERMS = 24

_INV_PHI = (math.sqrt(5) - 1) / 2


@lru_cache(maxsize=64)
def _moment(ell: int, a: float) -> float:
    return dickman.weighted_moment(dickman.default_table(), ell, a).value


def predicted_upper_rh(ell: int, A: float, t: float) -> float:
    """2^(ell+1) C_ell(A) (log log t)^(ell+1), the o(1) dropped.

    A = 0 is accepted and gives the sigma = 1 form with Y_ell in place of C_ell.
    """
    if not t >= 16:
        raise InvalidArgumentError(f"t must be >= 16, got {t}")
    if not A >= 0:
        raise InvalidArgumentError(f"A must be nonnegative, got {A}")
    return 2 ** (ell + 1) * _moment(int(ell), 2.0 * A) * math.log(math.log(t)) ** (ell + 1)


def predicted_omega(ell: int, A: float, T: float) -> float:
    """D_ell(A) (log log T)^(ell+1), the o(1) dropped."""
    if not T >= 16:
        raise InvalidArgumentError(f"T must be >= 16, got {T}")
    if not A >= 0:
        raise InvalidArgumentError(f"A must be nonnegative, got {A}")
    return _moment(int(ell), float(A)) * math.log(math.log(T)) ** (ell + 1)


def predicted_subone(ell: int, sigma: float, T: float) -> float:
    """exp(e^A / A - A) (log log T)^(ell+1) with A = (1 - sigma) log log T, constant 1."""
    if not T >= 16:
        raise InvalidArgumentError(f"T must be >= 16, got {T}")
    LL = math.log(math.log(T))
    if not 0.5 < sigma < 1 - 1 / LL:
        raise DomainError(f"sigma={sigma} outside (1/2, 1 - 1/log log T) = (1/2, {1 - 1 / LL:.6g})")
    A = (1 - sigma) * LL
    return math.exp(math.exp(A) / A - A) * LL ** (ell + 1)


@dataclass(frozen=True)
class ScanConfig:
    T: float
    sigma: float
    ell: int
    N: int
    grid_step: Optional[float] = None
    refine_iters: int = DEFAULT_REFINE_ITERS

    def __post_init__(self):
        if not self.T >= MIN_T:
            raise InvalidArgumentError(f"T must be >= {MIN_T:g}, got {self.T}")
        if 2 * self.T > MAX_HEIGHT:
            raise CapacityError(f"2T = {2 * self.T:g} exceeds the phase-accuracy budget {MAX_HEIGHT:g}")
        if not 0.5 < self.sigma <= 1:
            raise InvalidArgumentError(f"sigma must lie in (1/2, 1], got {self.sigma}")
        SeriesTruncation(self.N, self.ell)  # validates N and ell
        if self.N > MAX_SCAN_N:
            raise CapacityError(f"N={self.N} exceeds {MAX_SCAN_N}")
        if self.grid_step is None:
            object.__setattr__(self, "grid_step", DEFAULT_STEP_FACTOR / math.log(self.N))
        if not 0 < self.grid_step <= MAX_STEP_FACTOR / math.log(self.N):
            raise InvalidArgumentError(
                f"grid_step={self.grid_step} must lie in (0, 0.5/log N = {MAX_STEP_FACTOR / math.log(self.N):.6g}]")
        if int(self.refine_iters) != self.refine_iters or self.refine_iters < 0:
            raise InvalidArgumentError(f"refine_iters must be a nonnegative integer, got {self.refine_iters}")

    @classmethod
    def from_A(cls, T: float, A: float, ell: int, N: int, **kw) -> "ScanConfig":
        """Configuration at sigma_A = 1 - A / log log T."""
        return cls(T=T, sigma=1 - A / math.log(math.log(T)), ell=ell, N=N, **kw)

    @property
    def A(self) -> float:
        return (1 - self.sigma) * math.log(math.log(self.T))

    @property
    def grid_count(self) -> int:
        return math.floor(self.T / self.grid_step) + 1

    def grid_t(self, j: int) -> float:
        return self.T + j * self.grid_step


@dataclass
class ScanResult:
    t_star: float
    value: float
    envelope_upper: float
    envelope_omega: float
    envelope_subone: float
    grid_points: int
    candidates: list = field(default_factory=list)
    refinement_history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _coefficients(cfg: ScanConfig) -> tuple[np.ndarray, np.ndarray]:
    hi, _ = log_table(cfg.N)
    a = np.exp(-cfg.sigma * hi)
    if cfg.ell:
        a = a * hi**cfg.ell
    return a, cfg.grid_step * hi


def _block_candidates(cfg: ScanConfig, a: np.ndarray, x: np.ndarray, j0: int) -> list[tuple[float, int]]:
    """Top local maxima of |S|^2 at grid indices j0 .. j0 + K - 3.

    The transform covers j0 - 1 .. j0 + K - 2 so every reported index has
    both neighbours available; indices outside [0, grid_count) count as -inf.
    """
    K = NUFFT_BLOCK
    first = j0 - 1
    t_c = cfg.T + (first + K // 2) * cfg.grid_step
    hi, lo = log_table(cfg.N)
    c = a * np.exp(-1j * reduced_phase(t_c, hi, lo))
    f = finufft.nufft1d1(x, c, K, eps=NUFFT_EPS, isign=-1, nthreads=1)
    power = f.real**2 + f.imag**2
    j = np.arange(first, first + K)
    power[(j < 0) | (j >= cfg.grid_count)] = -np.inf
    mid = power[1:-1]
    is_max = (mid >= power[:-2]) & (mid >= power[2:]) & np.isfinite(mid)
    idx = np.flatnonzero(is_max)
    if idx.size > TOP_CANDIDATES:
        # Stable sort on -power keeps the smaller index first among ties.
        idx = idx[np.argsort(-mid[idx], kind="stable")[:TOP_CANDIDATES]]
    return [(float(mid[i]), int(j[i + 1])) for i in idx]


def _direct(cfg: ScanConfig, t: float) -> float:
    return abs(zeta_deriv_truncated(EvalPoint(cfg.sigma, t), SeriesTruncation(cfg.N, cfg.ell)).value)


class _LocalExpansion:
    """|S(t0 + d)| for |d| <= grid_step from a Taylor expansion in d.

    S(t0 + d) = sum_m (-i d)^m / m! * mu_m with mu_m = sum_n a_n n^(-i t0) (log n)^m.
    Since |d| log n <= 1/2 on the refinement window, TAYLOR_TERMS terms
    leave a truncation error far below double rounding of the sum.
    """

    def __init__(self, cfg: ScanConfig, a: np.ndarray, t0: float):
        hi, lo = log_table(cfg.N)
        term = a * np.exp(-1j * reduced_phase(t0, hi, lo))
        coef = np.empty(TAYLOR_TERMS, dtype=np.complex128)
        for m in range(TAYLOR_TERMS):
            coef[m] = term.sum() * (-1j) ** m / math.factorial(m)
            term = term * hi
        self.t0 = t0
        self.coef = coef[::-1].copy()

    def __call__(self, t: float) -> float:
        return float(abs(np.polyval(self.coef, t - self.t0)))


def _refine(cfg: ScanConfig, a: np.ndarray, j: int) -> tuple[float, float, list[float]]:
    """Golden-section search on |S| over the two grid cells around index j.

    Returns (t, value, history): history[k] is the best expansion value after
    k rounds, seeded by the grid point and its neighbours; ``value`` is the
    direct evaluation at the final t.
    """
    lo_t = max(cfg.T, cfg.grid_t(j - 1))
    hi_t = min(cfg.grid_t(cfg.grid_count - 1), cfg.grid_t(j + 1))
    local = _LocalExpansion(cfg, a, cfg.grid_t(j))
    best_t, best_v = None, -math.inf

    def consider(t):
        nonlocal best_t, best_v
        v = local(t)
        if v > best_v or (v == best_v and t < best_t):
            best_t, best_v = t, v
        return v

    for t in sorted({lo_t, cfg.grid_t(j), hi_t}):
        consider(t)
    history = [best_v]
    a_, b_ = lo_t, hi_t
    c = b_ - _INV_PHI * (b_ - a_)
    d = a_ + _INV_PHI * (b_ - a_)
    fc = fd = None
    for _ in range(cfg.refine_iters):
        if fc is None:
            fc = consider(c)
        if fd is None:
            fd = consider(d)
        if fc >= fd:
            b_, d, fd = d, c, fc
            c, fc = b_ - _INV_PHI * (b_ - a_), None
        else:
            a_, c, fc = c, d, fd
            d, fd = a_ + _INV_PHI * (b_ - a_), None
        history.append(best_v)
    return best_t, _direct(cfg, best_t), history


def _envelopes(cfg: ScanConfig) -> tuple[float, float, float]:
    A = max(cfg.A, 0.0)
    upper = predicted_upper_rh(cfg.ell, A, cfg.T)
    omega = predicted_omega(cfg.ell, A, cfg.T)
    try:
        subone = predicted_subone(cfg.ell, cfg.sigma, cfg.T)
    except DomainError:
        subone = math.nan
    return upper, omega, subone


def scan_zeta_max(cfg: ScanConfig, threads: int = 1) -> ScanResult:
    """Approximate max over t in [T, 2T] of |zeta^(ell)(sigma + i t)| (length-N polynomial).

    Envelopes are evaluated at height T.
    """
    a, x = _coefficients(cfg)
    starts = range(0, cfg.grid_count, NUFFT_BLOCK - 2)
    workers = max(1, min(int(threads), len(starts)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        per_block = list(pool.map(lambda s: _block_candidates(cfg, a, x, s), starts))
    merged = sorted((c for block in per_block for c in block), key=lambda c: (-c[0], c[1]))
    chosen = [j for _, j in merged[:TOP_CANDIDATES]]
    with ThreadPoolExecutor(max_workers=max(1, min(int(threads), len(chosen)))) as pool:
        refined = list(pool.map(lambda j: _refine(cfg, a, j), chosen))
    best = min(range(len(refined)), key=lambda i: (-refined[i][1], refined[i][0]))
    t_star, value, history = refined[best]
    upper, omega, subone = _envelopes(cfg)
    return ScanResult(
        t_star=t_star, value=value, envelope_upper=upper, envelope_omega=omega, envelope_subone=subone,
        grid_points=cfg.grid_count,
        candidates=[{"grid_t": cfg.grid_t(j), "grid_value": math.sqrt(p), "t": r[0], "value": r[1]}
                    for (p, j), r in zip(merged[:TOP_CANDIDATES], refined)],
        refinement_history=history,
    )


def dense_oracle(cfg: ScanConfig, t_center: float, factor: int = 16) -> tuple[float, float]:
    """Max of the direct evaluator on a grid of step grid_step/factor over t_center +- grid_step."""
    h = cfg.grid_step / factor
    best = (-math.inf, math.nan)
    for k in range(-factor, factor + 1):
        t = t_center + k * h
        if cfg.T <= t <= 2 * cfg.T:
            v = _direct(cfg, t)
            if v > best[0]:
                best = (v, t)
    return best[1], best[0]


def l_values(group: CharacterGroup, ell: int, sigma: float, N: int, threads: int = 1) -> list[complex]:
    """L^(ell)(sigma, chi; N) for every character, in index order."""
    B = l_residue_sums(group.q, sigma, ell, N)

    def one(i):
        v = group[i].table * B
        return complex(math.fsum(v.real.tolist()), math.fsum(v.imag.tolist()))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(one, range(group.phi)))


def scan_l_max(group: CharacterGroup, ell: int, sigma: float, N: int, threads: int = 1) -> tuple[int, float]:
    """(index, value) of max |L^(ell)(sigma, chi; N)| over non-principal chi; ties go to the smaller index."""
    if int(ell) != ell or ell < 0:
        raise InvalidArgumentError(f"ell must be a nonnegative integer, got {ell}")
    if not sigma > 0.5:
        raise InvalidArgumentError(f"sigma must exceed 1/2, got {sigma}")
    if int(N) != N or N < 1:
        raise InvalidArgumentError(f"N must be a positive integer, got {N}")
    if group.phi < 2:
        raise InvalidArgumentError("no non-principal characters")
    mags = [abs(v) for v in l_values(group, ell, sigma, N, threads)[1:]]
    i = int(np.argmax(mags))
    return i + 1, mags[i]


TREND_HEIGHTS = (1e4, 1e5, 1e6)
TREND_ELLS = (0, 1)
TREND_AS = (0.0, 0.5)


def trend_table(heights=TREND_HEIGHTS, ells=TREND_ELLS, As=TREND_AS, threads: int = 1,
                refine_iters: int = DEFAULT_REFINE_ITERS) -> list[dict]:
    """Rows of max |zeta^(ell)(sigma_A + i t)| / (log log T)^(ell+1) with N = T.

    Nothing is asserted; rows whose ratio falls outside (0, 2^(ell+1) C_ell(A)]
    carry ``violation = True``.
    """
    rows = []
    for T in heights:
        for ell in ells:
            for A in As:
                cfg = ScanConfig.from_A(T, A, ell, int(T), refine_iters=refine_iters)
                res = scan_zeta_max(cfg, threads)
                scale = math.log(math.log(T)) ** (ell + 1)
                ratio = res.value / scale
                upper_const = 2 ** (ell + 1) * _moment(ell, 2 * A)
                omega_const = _moment(ell, A)
                rows.append({
                    "T": float(T), "ell": ell, "A": float(A), "sigma": cfg.sigma, "N": cfg.N,
                    "t_star": res.t_star, "max_value": res.value, "ratio": ratio,
                    "D_ell": omega_const, "upper_const": upper_const,
                    "violation": not 0 < ratio <= upper_const,
                })
    return rows
