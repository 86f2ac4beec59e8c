"""Rate-region machinery: closed-form transmit beamformer, vertex power
allocation, alternating loop with a 1-D combiner search, and the boundary
sweep over source B's target rate.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    combiner_or_endpoint,
    effective_gains,
    make_operating_point,
    relay_null_basis,
)
from .numerics import _golden_max, null_space_basis

__all__ = [
    "Infeasible",
    "P1Subproblem",
    "boundary_unit_vector",
    "solve_txbf_p1",
    "solve_power_p1",
    "power_p1_stepwise",
    "optimize_fixed_alpha_p1",
    "max_rate_given_rb",
    "rate_region",
    "region_csv_rows",
]


class Infeasible(Exception):
    """A solver subproblem has an empty feasible set.

    ``stage`` tells the failing gate apart: 'sinr_gate' (source A cannot push
    enough SINR to B at its current power), 'beam_power_gate' (the ZF null
    space cannot carry the required gain within the relay budget) or
    'power_polygon' (empty power-allocation polygon).
    """

    def __init__(self, stage, message=""):
        super().__init__(message or stage)
        self.stage = stage


@dataclass
class P1Subproblem:
    """Reduced transmit-beamformer problem after the ZF substitution.

    gamma_b is the SINR target, gamma_b_bar the transformed gain threshold
    on |h_rb^H w_t|^2, p_bar the norm-squared budget for w_t.  d1/d2 are the
    unit null-space images of h_rb/h_ra, r = |d2^H d1|, phi its argument and
    q the normalized boundary level (set only when both constraints bind).
    """

    gamma_b: float
    gamma_b_bar: float
    p_bar: float
    n_t: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    r: float
    phi: float
    q: float | None = None


def _unit_orthogonal(d):
    return null_space_basis(d)[:, 0]


def boundary_unit_vector(d1, d2, q):
    """Maximize |d2^H z|^2 over unit z with |d1^H z|^2 = q.

    Closed form: z = (r*g - sqrt(q)) e^{j(pi-phi)} d1 + g d2 with
    g = sqrt((1-q)/(1-r^2)), which attains |d2^H z|^2 =
    (r sqrt(q) + sqrt((1-q)(1-r^2)))^2.  For collinear d1, d2 the value is
    pinned to q and the leftover mass goes to any orthogonal direction.
    """
    d1 = np.asarray(d1, dtype=complex).reshape(-1)
    d2 = np.asarray(d2, dtype=complex).reshape(-1)
    if not -1e-12 <= q <= 1.0 + 1e-12:
        raise ValueError("q must lie in [0, 1]")
    q = min(max(q, 0.0), 1.0)
    inner = complex(np.vdot(d2, d1))
    r = abs(inner)
    phi = cmath.phase(inner) if r > 0 else 0.0
    one_minus_r2 = 1.0 - r * r
    if one_minus_r2 < 1e-10:
        if d1.size < 2:
            if q < 1.0 - 1e-9:
                raise Infeasible("collinear_1d", "cannot meet |d1^H z|^2 = q < 1 in dimension 1")
            return cmath.exp(-1j * phi) * d1
        z = math.sqrt(q) * cmath.exp(-1j * phi) * d1 + math.sqrt(1.0 - q) * _unit_orthogonal(d1)
        return z / np.linalg.norm(z)
    g = math.sqrt((1.0 - q) / one_minus_r2)
    b = (r * g - math.sqrt(q)) * cmath.exp(1j * (math.pi - phi))
    z = b * d1 + g * d2
    return z / np.linalg.norm(z)


def lemma_value(r, q):
    """Optimal |d2^H z|^2 of the boundary problem: (r sqrt(q) + sqrt((1-q)(1-r^2)))^2."""
    return (r * math.sqrt(q) + math.sqrt(max(0.0, (1.0 - q) * (1.0 - r * r)))) ** 2


def reduce_txbf_p1(channels, w_r, p_a, p_b, gamma_b, p_r_max, n_t=None):
    """Steps 1-2 of the beamformer solve: gates plus the reduced problem data."""
    rx_gain_a = abs(np.vdot(w_r, channels.h_ar)) ** 2
    rx_gain_b = abs(np.vdot(w_r, channels.h_br)) ** 2
    if gamma_b <= 0.0:
        gb_bar = 0.0
    else:
        margin = p_a * rx_gain_a - gamma_b
        if margin <= 0.0:
            raise Infeasible("sinr_gate")
        gb_bar = gamma_b * (p_b * abs(channels.h_bb) ** 2 + 1.0) / margin
    p_bar = p_r_max / (p_a * rx_gain_a + p_b * rx_gain_b + 1.0)
    if n_t is None:
        n_t = relay_null_basis(channels, w_r)
    a_t = n_t.conj().T @ channels.h_ra
    b_t = n_t.conj().T @ channels.h_rb
    na = np.linalg.norm(a_t)
    nb = np.linalg.norm(b_t)
    if p_bar * nb**2 < gb_bar * (1.0 - 1e-12):
        raise Infeasible("beam_power_gate")
    d2 = a_t / na if na > 1e-150 else None
    d1 = b_t / nb if nb > 1e-150 else None
    if d1 is not None and d2 is not None:
        inner = complex(np.vdot(d2, d1))
        r, phi = abs(inner), cmath.phase(inner) if abs(inner) > 0 else 0.0
    else:
        r, phi = 0.0, 0.0
    sub = P1Subproblem(gamma_b=gamma_b, gamma_b_bar=gb_bar, p_bar=p_bar, n_t=n_t,
                       d1=d1, d2=d2, r=r, phi=phi)
    return sub, na, nb


def solve_txbf_p1(channels, w_r, p_a, p_b, gamma_b, p_r_max, n_t=None):
    """Transmit beamformer maximizing the gain toward A under the B-SINR
    threshold, the relay power budget (met with equality) and ZF.

    Raises Infeasible with the failing gate in ``stage``.
    """
    sub, na, nb = reduce_txbf_p1(channels, w_r, p_a, p_b, gamma_b, p_r_max, n_t)
    n_t, p_bar, gb_bar = sub.n_t, sub.p_bar, sub.gamma_b_bar
    scale = math.sqrt(p_bar)
    if na <= 1e-150:
        # gain toward A is zero for every admissible direction; return a
        # feasible one (the B-aligned direction maximizes slack)
        if gb_bar <= 0.0 or nb <= 1e-150:
            z = np.zeros(n_t.shape[1], dtype=complex)
            z[0] = 1.0
        else:
            z = sub.d1
        return scale * (n_t @ z)
    w_t = scale * (n_t @ sub.d2)  # unconstrained maximizer at full budget
    if abs(np.vdot(channels.h_rb, w_t)) ** 2 >= gb_bar * (1.0 - 1e-12):
        return w_t
    # both constraints active
    sub.q = min(gb_bar / (p_bar * nb**2), 1.0)
    z = boundary_unit_vector(sub.d1, sub.d2, sub.q)
    return scale * (n_t @ z)


def _feasible_vertices(lines_ge, lines_le, box, tol=1e-9):
    """Vertices of {x : a.x >= c for ge-lines, a.x <= c for le-lines, x in box}."""
    p_a_max, p_b_max = box
    all_lines = [(a, b, c) for a, b, c in lines_ge + lines_le]
    all_lines += [(1.0, 0.0, 0.0), (1.0, 0.0, p_a_max), (0.0, 1.0, 0.0), (0.0, 1.0, p_b_max)]
    pts = []
    n = len(all_lines)
    for i in range(n):
        a1, b1, c1 = all_lines[i]
        for j in range(i + 1, n):
            a2, b2, c2 = all_lines[j]
            det = a1 * b2 - a2 * b1
            norm = max(abs(a1), abs(b1), 1e-300) * max(abs(a2), abs(b2), 1e-300)
            if abs(det) <= 1e-14 * norm:
                continue
            x = (c1 * b2 - c2 * b1) / det
            y = (a1 * c2 - a2 * c1) / det
            pts.append((x, y))
    out = []
    for x, y in pts:
        if not (-tol * max(1.0, p_a_max) <= x <= p_a_max * (1 + tol) + tol):
            continue
        if not (-tol * max(1.0, p_b_max) <= y <= p_b_max * (1 + tol) + tol):
            continue
        ok = True
        for a, b, c in lines_ge:
            s = max(abs(a) * p_a_max, abs(b) * p_b_max, abs(c), 1.0)
            if a * x + b * y < c - tol * s:
                ok = False
                break
        if ok:
            for a, b, c in lines_le:
                s = max(abs(a) * p_a_max, abs(b) * p_b_max, abs(c), 1.0)
                if a * x + b * y > c + tol * s:
                    ok = False
                    break
        if ok:
            out.append((min(max(x, 0.0), p_a_max), min(max(y, 0.0), p_b_max)))
    return out


def solve_power_p1(channels, w_t, w_r, gamma_b, config):
    """Source powers maximizing A's SINR subject to B's SINR threshold, the
    relay budget and the power box.

    The objective is linear-fractional, so its maximum over the feasible
    polygon sits at a vertex; all pairwise intersections of the two
    constraint lines and the box edges are enumerated and filtered.
    """
    g = effective_gains(channels, w_t, w_r)
    haa2 = abs(channels.h_aa) ** 2
    hbb2 = abs(channels.h_bb) ** 2
    nt2 = float(np.vdot(w_t, w_t).real)
    # SINR-B:  tx_gain_b*rx_gain_a * p_a - gamma_b*hbb2 * p_b >= gamma_b*(tx_gain_b+1)
    ge = [(g.tx_gain_b * g.rx_gain_a, -gamma_b * hbb2, gamma_b * (g.tx_gain_b + 1.0))] if gamma_b > 0 else []
    # relay power: nt2*rx_gain_a * p_a + nt2*rx_gain_b * p_b <= p_r_max - nt2
    le = [(nt2 * g.rx_gain_a, nt2 * g.rx_gain_b, config.p_r_max - nt2)]
    verts = _feasible_vertices(ge, le, (config.p_a_max, config.p_b_max))
    if not verts:
        raise Infeasible("power_polygon")
    best, best_val = None, -1.0
    for p_a, p_b in verts:
        val = p_b * g.tx_gain_a * g.rx_gain_b / (g.tx_gain_a + p_a * haa2 + 1.0)
        # objective ties (e.g. with no source SI) resolve to the lowest p_a,
        # then the highest p_b, so near-duplicate vertices pick the exact corner
        tol = 1e-12 * max(1.0, best_val)
        better = val > best_val + tol
        tied = best is not None and val > best_val - tol
        if better or (tied and (p_a < best[0] - 1e-12
                                or (abs(p_a - best[0]) <= 1e-12 and p_b > best[1]))):
            best, best_val = (p_a, p_b), val
    return best


def power_p1_stepwise(channels, w_t, w_r, gamma_b, config):
    """The stepwise power rule (cases 1-4) kept as a cross-check.

    Returns (p_a, p_b) or None when a step falls outside the box or fails
    its own gates.  Step 4 solves the two active-constraint equations as a
    2x2 linear system rather than transcribing a printed closed form.
    """
    g = effective_gains(channels, w_t, w_r)
    hbb2 = abs(channels.h_bb) ** 2
    nt2 = float(np.vdot(w_t, w_t).real)
    pa_max, pb_max, pr_max = config.p_a_max, config.p_b_max, config.p_r_max
    denom = g.tx_gain_b * g.rx_gain_a
    if gamma_b > 0 and pa_max * denom <= gamma_b:
        return None  # step-1 necessary gate: infeasible
    # step 2: ignore the relay power constraint
    if gamma_b <= 0:
        cand = (0.0, pb_max)
    else:
        pa_for_full_pb = gamma_b * (g.tx_gain_b + pb_max * hbb2 + 1.0) / denom
        if pa_max >= pa_for_full_pb:
            cand = (pa_for_full_pb, pb_max)
        else:
            if hbb2 > 0:
                pb = (pa_max * denom / gamma_b - 1.0 - g.tx_gain_b) / hbb2
            else:
                pb = pb_max if pa_max * denom >= gamma_b * (g.tx_gain_b + 1.0) else None
            if pb is None or pb < 0:
                return None
            cand = (pa_max, min(pb_max, pb))
    # step 3: accept if the relay power constraint holds
    if nt2 * (cand[0] * g.rx_gain_a + cand[1] * g.rx_gain_b + 1.0) <= pr_max * (1 + 1e-12):
        return cand
    # step 4: both the SINR and relay constraints active
    a = np.array([[denom, -gamma_b * hbb2],
                  [nt2 * g.rx_gain_a, nt2 * g.rx_gain_b]])
    rhs = np.array([gamma_b * (g.tx_gain_b + 1.0), pr_max - nt2])
    if abs(np.linalg.det(a)) <= 1e-14 * max(1.0, np.abs(a).max() ** 2):
        return None
    p_a, p_b = np.linalg.solve(a, rhs)
    if not (-1e-12 <= p_a <= pa_max * (1 + 1e-12) and -1e-12 <= p_b <= pb_max * (1 + 1e-12)):
        return None
    return float(min(max(p_a, 0.0), pa_max)), float(min(max(p_b, 0.0), pb_max))


def optimize_fixed_alpha_p1(channels, alpha, gamma_b, config, fixed_powers=None):
    """Alternate the beamformer and power solves for one combiner setting.

    Starts from full source powers (falling back to (p_a_max, 0) if the
    first beamformer solve is infeasible) and stops when A's SINR improves
    by less than conv_tol or iter_max is hit.  The trace of per-iteration
    SINR values is nondecreasing.
    """
    w_r = combiner_or_endpoint(channels, alpha)
    n_t = relay_null_basis(channels, w_r)
    inits = [(config.p_a_max, config.p_b_max)] if fixed_powers is None else [tuple(fixed_powers)]
    if fixed_powers is None:
        inits.append((config.p_a_max, 0.0))
    w_t = None
    powers = None
    for cand in inits:
        try:
            w_t = solve_txbf_p1(channels, w_r, cand[0], cand[1], gamma_b, config.p_r_max, n_t)
            powers = cand
            break
        except Infeasible:
            if cand is inits[-1]:
                raise
    trace = []
    prev = 0.0
    for _ in range(config.iter_max):
        if fixed_powers is None:
            powers = solve_power_p1(channels, w_t, w_r, gamma_b, config)
        g = effective_gains(channels, w_t, w_r)
        gamma_a = powers[1] * g.tx_gain_a * g.rx_gain_b / (
            g.tx_gain_a + powers[0] * abs(channels.h_aa) ** 2 + 1.0)
        trace.append(gamma_a)
        if gamma_a - prev < config.conv_tol or fixed_powers is not None:
            break
        prev = gamma_a
        w_t = solve_txbf_p1(channels, w_r, powers[0], powers[1], gamma_b, config.p_r_max, n_t)
    return make_operating_point(channels, w_t, w_r, alpha, powers[0], powers[1], trace)


def _alpha_search(evaluate, config, tol=1e-3):
    """Grid + golden search over the combiner parameter.

    ``evaluate(alpha)`` returns an OperatingPoint or raises Infeasible; the
    best feasible point over the grid and the refinement is returned.
    """
    alphas = np.linspace(0.0, 1.0, config.alpha_grid)
    best = {"point": None, "value": -math.inf, "alpha": None}

    def objective(alpha):
        try:
            pt = evaluate(float(alpha))
        except Infeasible:
            return -math.inf
        val = pt.trace[-1] if pt.trace else pt.sum_rate
        if val > best["value"]:
            best.update(point=pt, value=val, alpha=float(alpha))
        return val

    vals = [objective(a) for a in alphas]
    if best["point"] is None:
        raise Infeasible("alpha_grid", "no feasible combiner setting on the grid")
    i = int(np.argmax(vals))
    lo = float(alphas[max(i - 1, 0)])
    hi = float(alphas[min(i + 1, len(alphas) - 1)])
    _golden_max(objective, lo, hi, tol, (float(alphas[i]), vals[i]))
    return best["point"]


def _max_rate_given_gamma(channels, gamma_b, config, fixed_powers=None):
    return _alpha_search(
        lambda a: optimize_fixed_alpha_p1(channels, a, gamma_b, config, fixed_powers), config)


def max_rate_given_rb(channels, r_b, config):
    """Best operating point for A subject to B achieving rate r_b."""
    if r_b < 0:
        raise ValueError("r_b must be nonnegative")
    return _max_rate_given_gamma(channels, 2.0**r_b - 1.0, config)


def region_sweep(point_solver, r_b_cap, n_points, bisect_steps=24):
    """Generic boundary sweep used by the proposed scheme and the baselines.

    ``point_solver(r_b)`` returns an OperatingPoint or raises Infeasible.
    B's largest feasible target is located by bisection on [0, r_b_cap],
    the boundary is sampled at n_points targets and non-monotone raw
    sweeps are repaired by carrying dominating higher-target points down.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")

    def feasible(r_b):
        try:
            return point_solver(r_b)
        except Infeasible:
            return None

    lo, hi = 0.0, r_b_cap
    if feasible(hi) is not None:
        lo = hi
    else:
        for _ in range(bisect_steps):
            mid = 0.5 * (lo + hi)
            if feasible(mid) is not None:
                lo = mid
            else:
                hi = mid
    r_b_max = lo
    targets = np.linspace(0.0, r_b_max, n_points)
    entries = []
    for r_b in targets:
        entries.append((float(r_b), feasible(float(r_b))))
    # monotone repair: replace points dominated by a higher-target point
    best = None
    for k in range(len(entries) - 1, -1, -1):
        r_b, pt = entries[k]
        if pt is not None and (best is None or pt.rate_a > best.rate_a):
            best = pt
        elif best is not None and (pt is None or pt.rate_a < best.rate_a - 1e-12):
            entries[k] = (r_b, best)
    return entries


def rate_region(channels, n_points, config):
    """Boundary of the achievable (rate_a, rate_b) region as a list of
    (r_b target, OperatingPoint-or-None) pairs, swept from r_b = 0 up to
    B's largest feasible single-target rate."""
    cap = math.log2(1.0 + config.p_a_max * float(np.vdot(channels.h_ar, channels.h_ar).real))
    return region_sweep(lambda r_b: max_rate_given_rb(channels, r_b, config), cap, n_points)


def region_csv_rows(entries):
    """CSV serialization of a region sweep: one row per boundary target."""
    rows = ["r_b_target,rate_a,rate_b,p_a,p_b,alpha,feasible"]
    for r_b, pt in entries:
        if pt is None:
            rows.append(f"{r_b:.6g},,,,,,0")
        else:
            rows.append(
                f"{r_b:.6g},{pt.rate_a:.6g},{pt.rate_b:.6g},{pt.powers.p_a:.6g},"
                f"{pt.powers.p_b:.6g},{pt.beamformer.alpha:.6g},1")
    return rows
