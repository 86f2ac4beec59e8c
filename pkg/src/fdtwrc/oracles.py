"""Brute-force reference implementations for solver validation.

These are intentionally slow and structurally unrelated to the closed-form
solvers: dense grids, random sampling with local refinement, and a phase
sweep.  They import only the signal-model evaluators, never the solver
modules they validate.
"""

import math
from dataclasses import dataclass

import numpy as np

from .model import relay_null_basis

__all__ = [
    "OracleReport",
    "grid_power_oracle",
    "sampled_beamformer_oracle",
    "lagrangian_boundary_oracle",
    "dc_grid_oracle",
]


@dataclass
class OracleReport:
    """Best value found, where, and at what resolution/sample budget."""

    best_value: float
    best_point: tuple
    samples: int
    resolution: float


def _gains(channels, w_t, w_r):
    tx_a = abs(np.vdot(channels.h_ra, w_t)) ** 2
    tx_b = abs(np.vdot(channels.h_rb, w_t)) ** 2
    rx_a = abs(np.vdot(w_r, channels.h_ar)) ** 2
    rx_b = abs(np.vdot(w_r, channels.h_br)) ** 2
    return tx_a, tx_b, rx_a, rx_b


def grid_power_oracle(channels, w_t, w_r, objective, n, config, gamma_b=None):
    """Exhaustive n x n source-power grid with per-point constraint checks.

    objective 'p1' maximizes A's SINR under the B-SINR threshold; 'p2'
    maximizes the sum rate; both enforce the relay power budget and the
    power box.  An empty feasible set yields best_value = -inf.
    """
    if n < 100:
        raise ValueError("grid oracle needs n >= 100")
    tx_a, tx_b, rx_a, rx_b = _gains(channels, w_t, w_r)
    haa2 = abs(channels.h_aa) ** 2
    hbb2 = abs(channels.h_bb) ** 2
    nt2 = float(np.vdot(w_t, w_t).real)
    pa = np.linspace(0.0, config.p_a_max, n)
    pb = np.linspace(0.0, config.p_b_max, n)
    pa_g, pb_g = np.meshgrid(pa, pb, indexing="ij")
    relay_ok = nt2 * (pa_g * rx_a + pb_g * rx_b + 1.0) <= config.p_r_max * (1 + 1e-12)
    gamma_a = pb_g * tx_a * rx_b / (tx_a + pa_g * haa2 + 1.0)
    gamma_b_g = pa_g * tx_b * rx_a / (tx_b + pb_g * hbb2 + 1.0)
    if objective == "p1":
        feas = relay_ok & (gamma_b_g >= gamma_b * (1 - 1e-12))
        vals = np.where(feas, gamma_a, -np.inf)
    elif objective == "p2":
        vals = np.where(relay_ok, np.log2(1 + gamma_a) + np.log2(1 + gamma_b_g), -np.inf)
    else:
        raise ValueError(f"unknown objective {objective!r}")
    flat = int(np.argmax(vals))
    i, j = np.unravel_index(flat, vals.shape)
    best = float(vals[i, j])
    step = max(config.p_a_max, config.p_b_max) / (n - 1)
    return OracleReport(best_value=best, best_point=(float(pa[i]), float(pb[j])),
                        samples=n * n, resolution=step)


def _sample_unit(rng, count, dim):
    z = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sampled_beamformer_oracle(channels, w_r, constraints, objective, n_samples, seed):
    """Random ZF-null-space beamformers at full relay power, constraint
    filtered, then locally refined around the best sample.

    ``constraints`` carries p_a, p_b, p_r_max and optionally gamma_b (B's
    SINR threshold).  objective 'gain_a' maximizes |h_ra^H w_t|^2; the
    refined best value is reported together with the achieved sample count.
    """
    if n_samples < 10_000:
        raise ValueError("sampling oracle needs n_samples >= 1e4")
    if objective != "gain_a":
        raise ValueError(f"unknown objective {objective!r}")
    p_a = constraints["p_a"]
    p_b = constraints["p_b"]
    p_r_max = constraints["p_r_max"]
    gamma_b = constraints.get("gamma_b", 0.0)
    n_t = relay_null_basis(channels, w_r)
    dim = n_t.shape[1]
    rx_a = abs(np.vdot(w_r, channels.h_ar)) ** 2
    rx_b = abs(np.vdot(w_r, channels.h_br)) ** 2
    scale = math.sqrt(p_r_max / (p_a * rx_a + p_b * rx_b + 1.0))
    a_t = n_t.conj().T @ channels.h_ra
    b_t = n_t.conj().T @ channels.h_rb
    hbb2 = abs(channels.h_bb) ** 2

    def evaluate(z_batch):
        # rows are unit null-space directions; full-power w_t = scale * N z
        sa = np.abs(z_batch @ a_t.conj()) ** 2 * scale**2
        sb = np.abs(z_batch @ b_t.conj()) ** 2 * scale**2
        g_b = p_a * sb * rx_a / (sb + p_b * hbb2 + 1.0)
        ok = g_b >= gamma_b * (1 - 1e-12)
        return np.where(ok, sa, -np.inf)

    rng = np.random.default_rng(seed)
    z = _sample_unit(rng, n_samples, dim)
    vals = evaluate(z)
    i = int(np.argmax(vals))
    best_val, best_z = float(vals[i]), z[i]
    total = n_samples
    sigma = 0.5
    for _ in range(60):
        batch = best_z[None, :] + sigma * (
            rng.standard_normal((64, dim)) + 1j * rng.standard_normal((64, dim)))
        batch = batch / np.linalg.norm(batch, axis=1, keepdims=True)
        vals = evaluate(batch)
        total += 64
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_z = float(vals[j]), batch[j]
        else:
            sigma *= 0.7
    return OracleReport(best_value=best_val, best_point=(scale * (n_t @ best_z),),
                        samples=total, resolution=sigma)


def lagrangian_boundary_oracle(d1, d2, q, sweep_points=100_001):
    """max |d2^H z|^2 with |d1^H z|^2 = q, ||z|| = 1, by sweeping the one
    remaining degree of freedom (the relative phase in an orthonormal
    frame of span{d1, d2})."""
    d1 = np.asarray(d1, dtype=complex).reshape(-1)
    d2 = np.asarray(d2, dtype=complex).reshape(-1)
    c1 = complex(np.vdot(d2, d1))  # d2^H d1
    w = d2 - np.conj(c1) * d1
    wn = np.linalg.norm(w)
    if wn < 1e-9:
        return OracleReport(best_value=abs(c1) ** 2 * q, best_point=(q,),
                            samples=1, resolution=0.0)
    e2 = w / wn
    c2 = complex(np.vdot(d2, e2))  # real and positive by construction
    psi = np.linspace(0.0, 2.0 * math.pi, sweep_points)
    amp = math.sqrt(q) * c1 + math.sqrt(1.0 - q) * np.exp(1j * psi) * c2
    vals = np.abs(amp) ** 2
    i = int(np.argmax(vals))
    # parabolic polish around the best sweep sample
    lo, hi = psi[max(i - 1, 0)], psi[min(i + 1, sweep_points - 1)]
    fine = np.linspace(lo, hi, 4001)
    vals_f = np.abs(math.sqrt(q) * c1 + math.sqrt(1.0 - q) * np.exp(1j * fine) * c2) ** 2
    j = int(np.argmax(vals_f))
    best = float(max(vals[i], vals_f[j]))
    return OracleReport(best_value=best, best_point=(float(fine[j]),),
                        samples=sweep_points + 4001,
                        resolution=float(fine[1] - fine[0]))


def dc_grid_oracle(channels, w_r, p_a, p_b, anchor, config, n=600):
    """Grid maximization of the DC surrogate over all rank-one ZF
    beamformers, for a two-dimensional null space.

    Covers the whole unit sphere (mod global phase) with a (level, phase)
    grid in an orthonormal frame built independently of the solver.
    """
    n_t = relay_null_basis(channels, w_r)
    if n_t.shape[1] != 2:
        raise ValueError("dc grid oracle covers null-space dimension 2 only")
    rx_a = abs(np.vdot(w_r, channels.h_ar)) ** 2
    rx_b = abs(np.vdot(w_r, channels.h_br)) ** 2
    p_prime = config.p_r_max / (p_a * rx_a + p_b * rx_b + 1.0)
    a_t = n_t.conj().T @ channels.h_ra
    b_t = n_t.conj().T @ channels.h_rb
    # orthonormal frame of the null plane anchored at b_t
    nb = np.linalg.norm(b_t)
    if nb > 1e-150:
        e1 = b_t / nb
    else:
        e1 = np.array([1.0, 0.0], dtype=complex)
    e2 = np.array([-np.conj(e1[1]), np.conj(e1[0])], dtype=complex)
    ca1, ca2 = complex(np.vdot(a_t, e1)), complex(np.vdot(a_t, e2))  # a_t^H e_i
    q = np.linspace(0.0, 1.0, n)
    psi = np.linspace(0.0, 2.0 * math.pi, n)
    qg, pg = np.meshgrid(q, psi, indexing="ij")
    s_b = p_prime * (nb**2) * qg
    amp = np.sqrt(qg) * ca1 + np.sqrt(1.0 - qg) * np.exp(1j * pg) * ca2
    s_a = p_prime * np.abs(amp) ** 2
    e_a = p_b * rx_b
    e_b = p_a * rx_a
    k_a = p_a * abs(channels.h_aa) ** 2 + 1.0
    k_b = p_b * abs(channels.h_bb) ** 2 + 1.0
    s_a_k, s_b_k = anchor
    ln2 = math.log(2.0)
    vals = (np.log2((e_a + 1.0) * s_a + k_a) + np.log2((e_b + 1.0) * s_b + k_b)
            - math.log2(s_a_k + k_a) - math.log2(s_b_k + k_b)
            - (s_a - s_a_k) / (ln2 * (s_a_k + k_a))
            - (s_b - s_b_k) / (ln2 * (s_b_k + k_b)))
    flat = int(np.argmax(vals))
    i, j = np.unravel_index(flat, vals.shape)
    return OracleReport(best_value=float(vals[i, j]),
                        best_point=(float(s_a[i, j]), float(s_b[i, j])),
                        samples=n * n, resolution=1.0 / (n - 1))
