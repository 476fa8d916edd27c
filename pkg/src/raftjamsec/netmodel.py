"""Spatial deployment, pathloss and instantaneous SIR.

The leader sits at the origin. Followers form a Poisson field on a disk and
jammers a Poisson field on an annulus around the leader. Powers are given in
dBm and thresholds in dB at the boundary; everything internal is linear.

All randomness comes from an explicit :class:`numpy.random.Generator`; there
is no module-level RNG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, DomainError, UnsupportedExponentError

__all__ = [
    "DEFAULT_RHO_FOLLOWER",
    "ChannelParams",
    "DeploymentConfig",
    "JammerAnnulus",
    "PppField",
    "db_to_linear",
    "as_generator",
    "sample_disk",
    "sample_annulus",
    "sample_field",
    "pathloss_db",
    "sample_rayleigh_power",
    "sir_downlink",
    "sir_uplink",
]

# 15 followers on average over a disk of radius 500 m
DEFAULT_RHO_FOLLOWER = 15.0 / (math.pi * 500.0**2)


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def as_generator(seed) -> np.random.Generator:
    """Accept a Generator, a SeedSequence or an integer seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class ChannelParams:
    """Pathloss exponent, transmit powers (dBm) and SIR thresholds (dB)."""

    alpha: float = 3.0
    p_leader: float = 30.0
    p_follower: float = 20.0
    p_jammer: float = 10.0
    beta_dl: float = -20.0
    beta_ul: float = -20.0

    def __post_init__(self):
        if not self.alpha > 2.0:
            raise UnsupportedExponentError(f"alpha must exceed 2, got {self.alpha!r}")
        for name in ("p_leader", "p_follower", "p_jammer", "beta_dl", "beta_ul"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    @property
    def p_leader_mw(self) -> float:
        return float(db_to_linear(self.p_leader))

    @property
    def p_follower_mw(self) -> float:
        return float(db_to_linear(self.p_follower))

    @property
    def p_jammer_mw(self) -> float:
        return float(db_to_linear(self.p_jammer))

    @property
    def beta_dl_linear(self) -> float:
        return float(db_to_linear(self.beta_dl))

    @property
    def beta_ul_linear(self) -> float:
        return float(db_to_linear(self.beta_ul))

    @property
    def gamma_dl(self) -> float:
        """Jammer-to-leader power ratio."""
        return self.p_jammer_mw / self.p_leader_mw

    @property
    def gamma_ul(self) -> float:
        """Jammer-to-follower power ratio."""
        return self.p_jammer_mw / self.p_follower_mw


@dataclass(frozen=True)
class DeploymentConfig:
    rho_follower: float = DEFAULT_RHO_FOLLOWER
    radius: float = 500.0
    seed: int = 0

    def __post_init__(self):
        if not (self.rho_follower > 0 and self.radius > 0):
            raise DomainError("rho_follower and radius must be positive")

    @property
    def mean_followers(self) -> float:
        return self.rho_follower * math.pi * self.radius**2


@dataclass(frozen=True)
class JammerAnnulus:
    """Jammers are confined to ``z1 <= |x| <= z2`` with intensity ``rho_jammer``."""

    z1: float = 50.0
    z2: float = 300.0
    rho_jammer: float = DEFAULT_RHO_FOLLOWER

    def __post_init__(self):
        if not (0.0 <= self.z1 <= self.z2):
            raise DomainError(f"need 0 <= z1 <= z2, got z1={self.z1}, z2={self.z2}")
        if not self.rho_jammer >= 0.0:
            raise DomainError("rho_jammer must be non-negative")

    @property
    def area(self) -> float:
        return math.pi * (self.z2**2 - self.z1**2)

    @property
    def mean_jammers(self) -> float:
        return self.rho_jammer * self.area


@dataclass
class PppField:
    """One realization of followers and jammers; the leader is the origin."""

    followers: np.ndarray
    jammers: np.ndarray
    leader: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @property
    def n_followers(self) -> int:
        return len(self.followers)

    @property
    def n_jammers(self) -> int:
        return len(self.jammers)

    def follower_distances(self) -> np.ndarray:
        return np.hypot(self.followers[:, 0], self.followers[:, 1])


def sample_annulus(rng: np.random.Generator, n: int, r_in: float, r_out: float) -> np.ndarray:
    """``n`` points uniform in area on the annulus ``r_in <= |x| <= r_out``."""
    u = rng.random(n)
    theta = rng.random(n) * (2.0 * math.pi)
    r = np.sqrt(r_in**2 + u * (r_out**2 - r_in**2))
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def sample_disk(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    return sample_annulus(rng, n, 0.0, radius)


def sample_field(dep: DeploymentConfig, jam: JammerAnnulus, rng=None) -> PppField:
    """Draw follower and jammer Poisson fields.

    ``rng`` defaults to a generator seeded with ``dep.seed``. Followers are
    drawn before jammers, so the follower layout for a given seed does not
    depend on the jammer configuration.
    """
    rng = as_generator(dep.seed if rng is None else rng)
    n_f = rng.poisson(dep.mean_followers)
    followers = sample_disk(rng, n_f, dep.radius)
    n_j = rng.poisson(jam.mean_jammers) if jam.mean_jammers > 0 else 0
    jammers = sample_annulus(rng, n_j, jam.z1, jam.z2)
    return PppField(followers=followers, jammers=jammers)


def pathloss_db(d, alpha: float):
    """Pathloss in dB at distance ``d`` metres: ``10 alpha log10(d)``."""
    da = np.asarray(d, dtype=float)
    if np.any(~(da > 0)):
        raise DomainError("pathloss_db requires d > 0")
    out = 10.0 * alpha * np.log10(da)
    return float(out) if out.ndim == 0 else out


def sample_rayleigh_power(rng, size=None):
    """Rayleigh fading power ``|h|^2 ~ Exp(1)``."""
    return as_generator(rng).exponential(1.0, size)


def _sir(signal_mw, d_signal, p_jam_mw, d_jam, alpha, rng, fading):
    if d_signal <= 0.0:
        raise DegenerateGeometryError("receiver coincides with the transmitter")
    if fading is None:
        rng = as_generator(rng)
        h = rng.exponential(1.0)
        h_j = rng.exponential(1.0, len(d_jam))
    else:
        h, h_j = fading
        h_j = np.asarray(h_j, dtype=float)
    if len(d_jam) == 0:
        return math.inf
    if np.any(d_jam <= 0.0):
        raise DegenerateGeometryError("a jammer coincides with the receiver")
    interference = p_jam_mw * float(np.sum(h_j * d_jam ** (-alpha)))
    if interference == 0.0:
        return math.inf
    return signal_mw * h * d_signal ** (-alpha) / interference


def sir_downlink(field: PppField, follower_index: int, ch: ChannelParams, rng=None, *, fading=None) -> float:
    """SIR at follower ``follower_index`` for a leader broadcast.

    Interference distances are measured from each jammer to the follower.
    Returns ``math.inf`` when there is no interference. ``fading`` may fix
    ``(|h|^2, array of |h_j|^2)`` instead of drawing them from ``rng``.
    """
    pos = field.followers[follower_index]
    d_sig = float(np.hypot(*(pos - field.leader)))
    d_jam = np.hypot(*(field.jammers - pos).T) if field.n_jammers else np.empty(0)
    return _sir(ch.p_leader_mw, d_sig, ch.p_jammer_mw, d_jam, ch.alpha, rng, fading)


def sir_uplink(field: PppField, follower_index: int, ch: ChannelParams, rng=None, *, fading=None) -> float:
    """SIR at the leader for a vote sent by follower ``follower_index``.

    Other followers do not interfere (CSMA); jammer distances are measured to
    the leader.
    """
    pos = field.followers[follower_index]
    d_sig = float(np.hypot(*(pos - field.leader)))
    d_jam = np.hypot(*(field.jammers - field.leader).T) if field.n_jammers else np.empty(0)
    return _sir(ch.p_follower_mw, d_sig, ch.p_jammer_mw, d_jam, ch.alpha, rng, fading)
