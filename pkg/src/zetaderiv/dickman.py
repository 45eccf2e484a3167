"""Dickman's function rho(u) on a uniform grid, and its weighted moments.

rho is obtained from the integral form ``u rho(u) = int_{u-1}^{u} rho(v) dv``
marched left to right.  The window integral is a sum of like-signed terms,
so relative accuracy survives even where rho itself is ~1e-300; values are
kept as ``log rho``.

rho is only piecewise smooth (rho^(j-1) jumps at the integer j), so each
window ``[u-1, u]`` is split at the integer it contains and each piece gets its
own end-corrected rule: Gregory's formula (weights 251/720, 897/720, 633/720,
739/720 at each end) for pieces of 8 or more steps.  Shorter pieces at the
right end of the previous interval use a degree-7 interpolant through that
interval's last 8 nodes; shorter pieces at the start of the current interval
only have their own nodes and use closed Newton-Cotes.  Integer abscissae
are always grid nodes because 1/step must be an integer.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import CapacityError, InvalidArgumentError, OutOfRangeError

DEFAULT_U_MAX = 120.0
DEFAULT_STEP = 1.0 / 1024
MAX_U_MAX = 200.0
COARSEST_STEP = 1.0 / 256

EULER_GAMMA = 0.57721566490153286061

# Gregory end weights minus one (the interior weight), four nodes per end.
_GREGORY_DELTA = (251 / 720 - 1, 897 / 720 - 1, 633 / 720 - 1, 739 / 720 - 1)
_GREGORY_MIN = 8


@lru_cache(maxsize=None)
def _newton_cotes(n_intervals: int) -> tuple[float, ...]:
    """Closed Newton-Cotes weights (unit spacing) on ``n_intervals + 1`` nodes."""
    nodes = np.arange(n_intervals + 1, dtype=float)
    weights = []
    for i in range(n_intervals + 1):
        others = np.delete(nodes, i)
        basis = np.poly1d(others, r=True) / np.prod(nodes[i] - others)
        antiderivative = basis.integ()
        weights.append(float(antiderivative(n_intervals) - antiderivative(0)))
    return tuple(weights)


@lru_cache(maxsize=None)
def _tail_weights(n_intervals: int) -> tuple[float, ...]:
    """Weights on the last 8 nodes of a smooth interval for integrating over its
    final ``n_intervals`` steps (degree-7 interpolant, unit spacing)."""
    nodes = np.arange(-7, 1, dtype=float)
    weights = []
    for i in range(8):
        others = np.delete(nodes, i)
        basis = np.poly1d(others, r=True) / np.prod(nodes[i] - others)
        antiderivative = basis.integ()
        weights.append(float(antiderivative(0) - antiderivative(-n_intervals)))
    return tuple(weights)


def piece_weights(n_intervals: int) -> np.ndarray:
    """Unit-spacing quadrature weights used for a smooth piece of given length."""
    if n_intervals < 1:
        raise InvalidArgumentError("a piece needs at least one interval")
    if n_intervals < _GREGORY_MIN:
        return np.array(_newton_cotes(n_intervals))
    w = np.ones(n_intervals + 1)
    for i, d in enumerate(_GREGORY_DELTA):
        w[i] += d
        w[n_intervals - i] += d
    return w


@dataclass(frozen=True, eq=False)
class DickmanTable:
    """log rho(u) at u = 0, step, 2 step, ..., u_max."""

    u_max: float
    step: float
    values: np.ndarray

    @property
    def per_unit(self) -> int:
        return round(1.0 / self.step)

    @property
    def u(self) -> np.ndarray:
        return np.arange(self.values.size) / self.per_unit


def _check_step(step: float) -> int:
    if not step > 0:
        raise InvalidArgumentError(f"step must be positive, got {step}")
    if step > COARSEST_STEP:
        raise InvalidArgumentError(f"step {step} coarser than {COARSEST_STEP}")
    m = round(1.0 / step)
    if abs(m * step - 1.0) > 1e-12:
        raise InvalidArgumentError(f"1/step must be an integer, got 1/{1.0 / step}")
    return m


def build_dickman_table(u_max: float = DEFAULT_U_MAX, step: float = DEFAULT_STEP) -> DickmanTable:
    m = _check_step(step)
    if not u_max >= 2:
        raise InvalidArgumentError(f"u_max must be >= 2, got {u_max}")
    if u_max > MAX_U_MAX:
        raise CapacityError(f"u_max={u_max} exceeds {MAX_U_MAX}")
    n_nodes = math.ceil(u_max * m - 1e-9) + 1
    h = 1.0 / m
    d0, d1, d2, d3 = _GREGORY_DELTA
    w_last_gregory = 1.0 + d0

    logrho = [0.0] * (m + 1)
    # Values of the current and previous unit interval, scaled by rho at the
    # interval's left end.  prev_suffix[i] = sum(prev[i:]), cur_prefix[i] = sum(cur[:i+1]).
    prev = [1.0] * (m + 1)
    prev_suffix = [float(m + 1 - i) for i in range(m + 1)]
    cur = [1.0]
    cur_prefix = [1.0]
    run_sum, run_comp = 1.0, 0.0

    for k in range(m + 1, n_nodes):
        j, d = divmod(k, m)
        u_k = k / m
        if d == 0:
            # Window is exactly [j-1, j]: one smooth piece, the previous interval's
            # nodes plus the unknown at its right end.
            known = (cur_prefix[m - 1] + d0 * cur[0] + d1 * cur[1] + d2 * cur[2] + d3 * cur[3]
                     + d1 * cur[m - 1] + d2 * cur[m - 2] + d3 * cur[m - 3])
            s = h * known / (u_k - h * w_last_gregory)
            logrho.append(logrho[k - m] + math.log(s))
            cur.append(s)
            prev = cur
            prev_suffix = np.cumsum(prev[::-1])[::-1].tolist()
            cur = [1.0]
            cur_prefix = [1.0]
            run_sum, run_comp = 1.0, 0.0
            continue

        scale_prev = math.exp(logrho[(j - 1) * m] - logrho[j * m])
        n_a = m - d
        if n_a >= _GREGORY_MIN:
            piece_a = (prev_suffix[d] + d0 * (prev[d] + prev[m]) + d1 * (prev[d + 1] + prev[m - 1])
                       + d2 * (prev[d + 2] + prev[m - 2]) + d3 * (prev[d + 3] + prev[m - 3]))
        else:
            # Short left pieces borrow earlier nodes of the same smooth interval.
            piece_a = math.fsum(w * v for w, v in zip(_tail_weights(n_a), prev[m - 7:]))
        if d >= _GREGORY_MIN:
            piece_b = (cur_prefix[d - 1] + d0 * cur[0] + d1 * cur[1] + d2 * cur[2] + d3 * cur[3]
                       + d1 * cur[d - 1] + d2 * cur[d - 2] + d3 * cur[d - 3])
            w_last = w_last_gregory
        else:
            nc = _newton_cotes(d)
            piece_b = math.fsum(w * v for w, v in zip(nc, cur))
            w_last = nc[-1]
        s = h * (scale_prev * piece_a + piece_b) / (u_k - h * w_last)
        logrho.append(logrho[j * m] + math.log(s))
        cur.append(s)
        # Neumaier-compensated running prefix sum.
        t = run_sum + s
        if abs(run_sum) >= abs(s):
            run_comp += (run_sum - t) + s
        else:
            run_comp += (s - t) + run_sum
        run_sum = t
        cur_prefix.append(run_sum + run_comp)

    values = np.array(logrho)
    values.setflags(write=False)
    return DickmanTable(u_max=(n_nodes - 1) / m, step=1.0 / m, values=values)


@lru_cache(maxsize=1)
def default_table() -> DickmanTable:
    """Table with the default range and spacing, built once per process."""
    return build_dickman_table(DEFAULT_U_MAX, DEFAULT_STEP)


def log_rho(table: DickmanTable, u: float) -> float:
    """log rho(u) by 6-point Lagrange interpolation inside one unit interval."""
    if u < 0:
        raise InvalidArgumentError(f"u must be nonnegative, got {u}")
    if u <= 1:
        return 0.0
    if u > table.u_max + 1e-12:
        raise OutOfRangeError(f"u={u} beyond table range {table.u_max}")
    m = table.per_unit
    pos = u * m
    k = round(pos)
    if abs(pos - k) < 1e-9:
        return float(table.values[min(k, table.values.size - 1)])
    lo_node = math.floor(u) * m
    hi_node = min(lo_node + m, table.values.size - 1)
    start = min(max(math.floor(pos) - 2, lo_node), hi_node - 5)
    nodes = np.arange(start, start + 6)
    x = pos - nodes
    vals = table.values[nodes]
    total = 0.0
    for i in range(6):
        others = np.delete(np.arange(6), i)
        total += vals[i] * np.prod(x[others]) / np.prod((nodes[i] - nodes[others]).astype(float))
    return float(total)


def rho(table: DickmanTable, u: float) -> float:
    """rho(u); exactly 1 on [0, 1]."""
    if 0 <= u <= 1:
        return 1.0
    return math.exp(log_rho(table, u))


def rho_asymptotic_log(u: float) -> float:
    """Leading decay -u (log u + log log(u + 2) - 1), for banding checks only."""
    if u < 2:
        raise InvalidArgumentError(f"u must be >= 2, got {u}")
    return -u * (math.log(u) + math.log(math.log(u + 2)) - 1)


def delay_residuals(table: DickmanTable) -> np.ndarray:
    """Relative residuals of u rho(u) = int_{u-1}^u rho at every grid node u > 1.

    The integral is recomputed independently of the marching rule, from a
    not-a-knot cubic spline fitted to each unit interval separately.
    """
    from scipy.interpolate import CubicSpline

    m = table.per_unit
    lr = table.values
    n = lr.size
    n_units = (n - 1) // m
    # Per unit interval j: antiderivative values (in units of rho(j)) at each node.
    cumulative = []
    for j in range(n_units):
        idx = np.arange(j * m, (j + 1) * m + 1)
        scaled = np.exp(lr[idx] - lr[j * m])
        spline = CubicSpline(np.arange(m + 1) / m, scaled)
        anti = spline.antiderivative()
        cumulative.append(anti(np.arange(m + 1) / m))
    res = np.full(n, np.nan)
    for k in range(m + 1, n_units * m + 1):
        j, d = divmod(k, m)
        if d == 0:
            integral_scaled = cumulative[j - 1][m]
            base = lr[(j - 1) * m]
        else:
            left = (cumulative[j - 1][m] - cumulative[j - 1][d]) * math.exp(lr[(j - 1) * m] - lr[j * m])
            integral_scaled = left + cumulative[j][d]
            base = lr[j * m]
        lhs = (k / m) * math.exp(lr[k] - base)
        res[k] = abs(lhs - integral_scaled) / lhs
    return res[m + 1:n_units * m + 1]


@dataclass(frozen=True)
class MomentSpec:
    """int_0^inf e^(a u) u^ell rho(u) du with its truncation record."""

    ell: int
    a: float
    value: float
    truncation_u: float
    tail_bound: float


TAIL_RATIO = 1e-15


def weighted_moment(table: DickmanTable, ell: int, a: float) -> MomentSpec:
    """Weighted Dickman moment, e.g. Y_ell (a=0), C_ell(A) (a=2A), D_ell(A) (a=A).

    The integral is truncated at the first integer U where the integrand has
    dropped below 1e-15 of the partial integral and is decreasing.  Because
    e^(a u) u^ell rho(u) is log-concave, the tail beyond U is at most
    g(U) / |(log g)'(U)|, which is reported as ``tail_bound`` and included in
    ``value``'s error budget (it is not added to ``value``).
    """
    if int(ell) != ell or ell < 0:
        raise InvalidArgumentError(f"ell must be a nonnegative integer, got {ell}")
    if not a >= 0:
        raise InvalidArgumentError(f"a must be nonnegative, got {a}")
    m = table.per_unit
    u = table.u
    with np.errstate(divide="ignore"):
        lg = a * u + table.values + (ell * np.log(u) if ell else 0.0)
    if ell:
        lg[0] = -np.inf
    shift = float(np.max(lg))
    g = np.exp(lg - shift)
    w = piece_weights(m) / m
    n_units = (u.size - 1) // m
    partial = 0.0
    for j in range(n_units):
        partial += float(np.dot(w, g[j * m:(j + 1) * m + 1]))
        U = j + 1
        if U < 2:
            continue
        k = U * m
        dlog = a + ell / U - math.exp(table.values[k - m] - table.values[k]) / U
        if dlog < 0 and g[k] < TAIL_RATIO * partial:
            tail = g[k] / -dlog
            scale = math.exp(shift)
            return MomentSpec(ell=int(ell), a=float(a), value=partial * scale,
                              truncation_u=float(U), tail_bound=tail * scale)
    raise CapacityError(
        f"moment (ell={ell}, a={a}) does not decay below the tail threshold by u_max={table.u_max}; "
        "rebuild the table with a larger u_max")


def export_csv(table: DickmanTable, path, with_rho: bool = False) -> None:
    """Write ``u, log_rho`` (or ``u, rho, log_rho``) rows with 17 significant digits."""
    u = table.u
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["u", "rho", "log_rho"] if with_rho else ["u", "log_rho"])
        for ui, li in zip(u.tolist(), table.values.tolist()):
            row = [f"{ui:.17g}"]
            if with_rho:
                row.append(f"{math.exp(li):.17g}")
            row.append(f"{li:.17g}")
            writer.writerow(row)


def import_csv(path) -> DickmanTable:
    """Read a table written by :func:`export_csv` (either column layout)."""
    with open(Path(path), newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "u" not in rows[0] or "log_rho" not in rows[0]:
        raise InvalidArgumentError(f"{path}: expected columns u and log_rho")
    u = np.array([float(r["u"]) for r in rows])
    values = np.array([float(r["log_rho"]) for r in rows])
    step = float(u[1] - u[0])
    m = _check_step(step)
    if np.max(np.abs(u - np.arange(u.size) / m)) > 1e-12 * max(1.0, u[-1]):
        raise InvalidArgumentError(f"{path}: grid is not uniform with step 1/{m}")
    values.setflags(write=False)
    return DickmanTable(u_max=(u.size - 1) / m, step=1.0 / m, values=values)
