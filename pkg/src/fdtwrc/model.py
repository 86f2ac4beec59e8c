"""System configuration, channel generation and the post-ZF signal model.

All powers and channel variances are linear, noise-normalized values
(receiver noise has unit variance), so "x dB" maps to 10**(x/10).
The relay applies a rank-one amplify-and-forward matrix W = w_t w_r^H with
a unit-norm receive combiner w_r; the transmit-side zero-forcing condition
w_r^H H_rr w_t = 0 removes the relay's own loopback term from the model.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import null_space_basis

__all__ = [
    "DegenerateGeometryError",
    "SystemConfig",
    "ChannelRealization",
    "RelayBeamformer",
    "PowerAllocation",
    "EffectiveGains",
    "OperatingPoint",
    "db_to_linear",
    "linear_to_db",
    "sample_channels",
    "receive_combiner",
    "assemble_relay_matrix",
    "sinr_pair",
    "relay_output_power",
    "zf_residual",
    "effective_gains",
    "relay_null_basis",
    "channels_to_json",
    "channels_from_json",
]


class DegenerateGeometryError(ValueError):
    """Channel geometry leaves a requested direction undefined."""


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class SystemConfig:
    """Antenna counts, power budgets, residual-SI variances and solver knobs.

    m_t must be at least 2 so the ZF constraint can always be satisfied
    through the transmit-side null space.
    """

    m_t: int = 3
    m_r: int = 3
    p_a_max: float = 10.0
    p_b_max: float = 10.0
    p_r_max: float = 10.0
    sigma2_a: float = 0.01
    sigma2_b: float = 0.01
    sigma2_r: float = 0.01
    gain_br: float = 1.0
    alpha_grid: int = 21
    iter_max: int = 40
    conv_tol: float = 1e-6
    grid_points: int = 201

    def __post_init__(self):
        if self.m_t < 2:
            raise ValueError("m_t >= 2 is required for transmit-side ZF")
        if self.m_r < 1:
            raise ValueError("m_r >= 1 is required")
        for name in ("p_a_max", "p_b_max", "p_r_max", "sigma2_a", "sigma2_b", "sigma2_r", "gain_br"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.iter_max < 1:
            raise ValueError("iter_max must be >= 1")
        if self.conv_tol <= 0:
            raise ValueError("conv_tol must be positive")
        if self.alpha_grid < 2 or self.grid_points < 2:
            raise ValueError("alpha_grid and grid_points must be >= 2")


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the seven channel quantities between A, B and the relay.

    h_ar, h_br live at the relay's receive array (length m_r); h_ra, h_rb at
    its transmit array (length m_t); h_aa, h_bb are the scalar residual-SI
    channels at the sources and h_rr the m_r x m_t residual loopback at R.
    """

    h_ar: np.ndarray
    h_br: np.ndarray
    h_ra: np.ndarray
    h_rb: np.ndarray
    h_aa: complex
    h_bb: complex
    h_rr: np.ndarray

    @property
    def m_r(self):
        return self.h_ar.size

    @property
    def m_t(self):
        return self.h_ra.size

    def validate(self):
        assert self.h_br.shape == (self.m_r,)
        assert self.h_rb.shape == (self.m_t,)
        assert self.h_rr.shape == (self.m_r, self.m_t)
        for arr in (self.h_ar, self.h_br, self.h_ra, self.h_rb, self.h_rr):
            assert np.all(np.isfinite(arr.view(float)))
        return self


@dataclass(frozen=True)
class RelayBeamformer:
    """Relay processing: transmit beam w_t, unit receive combiner w_r.

    Rank-one schemes leave w_full as None; the full-matrix HD benchmark
    stores its relay matrix there and w_t/w_r hold the dominant factors.
    """

    w_t: np.ndarray
    w_r: np.ndarray
    alpha: float
    w_full: np.ndarray | None = None


@dataclass(frozen=True)
class PowerAllocation:
    p_a: float
    p_b: float
    p_r: float


@dataclass(frozen=True)
class EffectiveGains:
    """Squared channel/beam inner products the SINRs are made of."""

    tx_gain_a: float  # |h_ra^H w_t|^2, beam gain toward A's receiver
    rx_gain_b: float  # |w_r^H h_br|^2, combiner gain for B's uplink
    tx_gain_b: float  # |h_rb^H w_t|^2
    rx_gain_a: float  # |w_r^H h_ar|^2


@dataclass(frozen=True)
class OperatingPoint:
    """A feasible solver output: beamformer, powers, SINRs, rates and trace.

    Rates satisfy R = pre_log * log2(1 + gamma); pre_log is 0.5 for the
    two-phase half-duplex baseline and 1.0 otherwise.  ``trace`` holds the
    per-iteration objective values of the producing solver (nondecreasing).
    """

    beamformer: RelayBeamformer
    powers: PowerAllocation
    gamma_a: float
    gamma_b: float
    rate_a: float
    rate_b: float
    trace: list = field(default_factory=list)
    pre_log: float = 1.0

    @property
    def sum_rate(self):
        return self.rate_a + self.rate_b

    def to_report(self):
        """JSON-ready solver report: rates, powers, alpha, iterations, trace."""
        return {
            "rate_a": self.rate_a,
            "rate_b": self.rate_b,
            "sum_rate": self.sum_rate,
            "gamma_a": self.gamma_a,
            "gamma_b": self.gamma_b,
            "p_a": self.powers.p_a,
            "p_b": self.powers.p_b,
            "p_r": self.powers.p_r,
            "alpha": self.beamformer.alpha,
            "pre_log": self.pre_log,
            "iterations": len(self.trace),
            "trace": list(self.trace),
        }


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def sample_channels(config, seed):
    """Draw one flat-fading realization, deterministic in (config, seed).

    h_ar/h_ra entries are unit-variance circularly-symmetric Gaussian;
    the B-side links are scaled by config.gain_br and the residual-SI
    channels by their configured variances.
    """
    rng = np.random.default_rng(seed)
    g_br = math.sqrt(config.gain_br)
    h_ar = _crandn(rng, config.m_r)
    h_br = g_br * _crandn(rng, config.m_r)
    h_ra = _crandn(rng, config.m_t)
    h_rb = g_br * _crandn(rng, config.m_t)
    h_aa = math.sqrt(config.sigma2_a) * _crandn(rng)
    h_bb = math.sqrt(config.sigma2_b) * _crandn(rng)
    h_rr = math.sqrt(config.sigma2_r) * _crandn(rng, config.m_r, config.m_t)
    return ChannelRealization(h_ar, h_br, h_ra, h_rb, complex(h_aa), complex(h_bb), h_rr)


def receive_combiner(channels, alpha, normalize=True):
    """Receive combiner mixing the h_br direction with its complement.

    w_r(alpha) = alpha * u_par + sqrt(1-alpha) * u_perp, where u_par/u_perp
    are the unit projections of h_ar onto span{h_br} and its complement.
    The raw combination has norm sqrt(alpha^2 + 1 - alpha) <= 1; it is
    rescaled to unit norm unless ``normalize=False``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    h_ar, h_br = channels.h_ar, channels.h_br
    nb = np.linalg.norm(h_br)
    if nb <= 1e-300:
        raise DegenerateGeometryError("h_br is zero; combiner direction undefined")
    inner = np.vdot(h_br, h_ar)  # h_br^H h_ar
    par = h_br * (inner / nb**2)
    par_norm = np.linalg.norm(par)
    if par_norm > 1e-12 * np.linalg.norm(h_ar):
        u_par = par / par_norm
    else:
        u_par = h_br / nb  # orthogonal channels: the span direction is h_br itself
    perp = h_ar - par
    perp_norm = np.linalg.norm(perp)
    if perp_norm < 1e-10:
        raise DegenerateGeometryError("h_ar parallel to h_br; fall back to alpha=1 endpoint")
    u_perp = perp / perp_norm
    w = alpha * u_par + math.sqrt(1.0 - alpha) * u_perp
    if normalize:
        w = w / np.linalg.norm(w)
    return w


def combiner_or_endpoint(channels, alpha):
    """receive_combiner with the documented alpha=1 fallback for degenerate geometry."""
    try:
        return receive_combiner(channels, alpha)
    except DegenerateGeometryError:
        h_br, h_ar = channels.h_br, channels.h_ar
        nb = np.linalg.norm(h_br)
        if nb <= 1e-300:
            raise
        inner = np.vdot(h_br, h_ar)
        phase = inner / abs(inner) if abs(inner) > 0 else 1.0
        return (h_br / nb) * phase


def assemble_relay_matrix(w_t, w_r):
    """Rank-one relay matrix W = w_t w_r^H mapping receive space to transmit space."""
    w_t = np.asarray(w_t, dtype=complex).reshape(-1)
    w_r = np.asarray(w_r, dtype=complex).reshape(-1)
    return np.outer(w_t, w_r.conj())


def sinr_pair(channels, w_t, w_r, p_a, p_b):
    """Post-ZF SINRs at the two sources for the rank-one relay matrix.

    gamma_a = p_b |h_ra^H w_t|^2 |w_r^H h_br|^2
              / (|h_ra^H w_t|^2 + p_a |h_aa|^2 + 1), and symmetrically for B.
    """
    g = effective_gains(channels, w_t, w_r)
    gamma_a = p_b * g.tx_gain_a * g.rx_gain_b / (g.tx_gain_a + p_a * abs(channels.h_aa) ** 2 + 1.0)
    gamma_b = p_a * g.tx_gain_b * g.rx_gain_a / (g.tx_gain_b + p_b * abs(channels.h_bb) ** 2 + 1.0)
    return gamma_a, gamma_b


def relay_output_power(channels, w_t, w_r, p_a, p_b):
    """Relay transmit power p_a ||w_t||^2 |w_r^H h_ar|^2 + p_b ||w_t||^2 |w_r^H h_br|^2 + ||w_t||^2."""
    nt2 = float(np.vdot(w_t, w_t).real)
    rx_a = abs(np.vdot(w_r, channels.h_ar)) ** 2
    rx_b = abs(np.vdot(w_r, channels.h_br)) ** 2
    return nt2 * (p_a * rx_a + p_b * rx_b + 1.0)


def zf_residual(channels, w_t, w_r):
    """|w_r^H H_rr w_t|; zero when the loopback is nulled."""
    return abs(np.conj(w_r) @ channels.h_rr @ w_t)


def effective_gains(channels, w_t, w_r):
    return EffectiveGains(
        tx_gain_a=abs(np.vdot(channels.h_ra, w_t)) ** 2,
        rx_gain_b=abs(np.vdot(w_r, channels.h_br)) ** 2,
        tx_gain_b=abs(np.vdot(channels.h_rb, w_t)) ** 2,
        rx_gain_a=abs(np.vdot(w_r, channels.h_ar)) ** 2,
    )


def relay_null_basis(channels, w_r):
    """Basis of transmit directions satisfying ZF for the given combiner.

    Null space of the row w_r^H H_rr; when that row (numerically) vanishes,
    e.g. with a zeroed loopback channel, every direction is admissible and
    the identity is returned.
    """
    v = channels.h_rr.conj().T @ w_r  # column v with v^H = w_r^H H_rr
    scale = np.linalg.norm(channels.h_rr)
    if np.linalg.norm(v) <= 1e-12 * max(1.0, scale):
        return np.eye(channels.m_t, dtype=complex)
    return null_space_basis(v)


def make_operating_point(channels, w_t, w_r, alpha, p_a, p_b, trace, pre_log=1.0):
    gamma_a, gamma_b = sinr_pair(channels, w_t, w_r, p_a, p_b)
    p_r = relay_output_power(channels, w_t, w_r, p_a, p_b)
    return OperatingPoint(
        beamformer=RelayBeamformer(w_t=w_t, w_r=w_r, alpha=alpha),
        powers=PowerAllocation(p_a=p_a, p_b=p_b, p_r=p_r),
        gamma_a=gamma_a,
        gamma_b=gamma_b,
        rate_a=pre_log * math.log2(1.0 + gamma_a),
        rate_b=pre_log * math.log2(1.0 + gamma_b),
        trace=list(trace),
        pre_log=pre_log,
    )


def _c2pair(z):
    return [float(np.real(z)), float(np.imag(z))]


def _vec2json(v):
    return [_c2pair(z) for z in np.asarray(v).reshape(-1)]


def _mat2json(m):
    return [[_c2pair(z) for z in row] for row in np.asarray(m)]


def channels_to_json(channels):
    """Serialize a realization to a JSON document (complex as [re, im])."""
    doc = {
        "m_r": channels.m_r,
        "m_t": channels.m_t,
        "h_ar": _vec2json(channels.h_ar),
        "h_br": _vec2json(channels.h_br),
        "h_ra": _vec2json(channels.h_ra),
        "h_rb": _vec2json(channels.h_rb),
        "h_aa": _c2pair(channels.h_aa),
        "h_bb": _c2pair(channels.h_bb),
        "h_rr": _mat2json(channels.h_rr),
    }
    return json.dumps(doc)


def channels_from_json(text):
    doc = json.loads(text)
    vec = lambda pairs: np.array([complex(re, im) for re, im in pairs])
    mat = lambda rows: np.array([[complex(re, im) for re, im in row] for row in rows])
    return ChannelRealization(
        h_ar=vec(doc["h_ar"]),
        h_br=vec(doc["h_br"]),
        h_ra=vec(doc["h_ra"]),
        h_rb=vec(doc["h_rb"]),
        h_aa=complex(doc["h_aa"][0], doc["h_aa"][1]),
        h_bb=complex(doc["h_bb"][0], doc["h_bb"][1]),
        h_rr=mat(doc["h_rr"]).reshape(doc["m_r"], doc["m_t"]),
    ).validate()


def zero_loopback(channels):
    """Copy of the realization with the relay loopback channel H_rr set to zero."""
    return replace(channels, h_rr=np.zeros_like(channels.h_rr))


def strip_source_si(channels):
    """Copy with the source self-interference channels removed (half-duplex sources)."""
    return replace(channels, h_aa=0j, h_bb=0j)
