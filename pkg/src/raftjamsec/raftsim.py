"""One RAFT voting round over jammed wireless links, with optional
pathloss authentication of the votes.

A round runs four phases in order:

1. leader broadcast on the downlink; follower ``i`` hears it iff its SIR
   (jammer distances measured to the follower) clears ``beta_dl``;
2. every follower that heard the broadcast votes on the uplink; CSMA
   removes follower-follower interference, so only jammers interfere;
3. each Eve injects one forged vote while the channel is idle (always
   delivered, after the legitimate votes);
4. the leader filters votes, keeps the first vote per follower identity and
   declares consensus on a strict majority of the ``M`` registered followers.

Random draws within a round happen in a fixed order: downlink fading
(``M``, then ``M x K``), uplink fading (``M``, then ``M x K``), measurement
noise of the ``M`` legitimate votes, Eve pathloss (only when drawn from the
uniform prior) and Eve measurement noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .authn import AuthRegistry, registry_from_field
from .errors import DegenerateGeometryError, DomainError
from .mc_engine import McEstimate, block_rng
from .netmodel import ChannelParams, JammerAnnulus, PppField, as_generator, sample_annulus
from .specfun import q_function

__all__ = [
    "RoundConfig",
    "ConsensusRoundOutcome",
    "AttackImpactReport",
    "run_round",
    "consensus_probability",
    "attack_impact_report",
    "link_success_probabilities",
    "majority_probability",
    "pfa_consensus_bound",
]

_ROUND_STREAM = 2
_JAMMER_STREAM = 3


@dataclass
class RoundConfig:
    """Inputs of a voting round.

    ``eve_pathloss`` fixes the Eves' pathloss (dB); when it is ``None`` each
    Eve draws it per round from the registry support. With authentication
    off, Eve ``j`` claims the identity of follower ``j mod M``.
    """

    field: PppField
    ch: ChannelParams = field(default_factory=ChannelParams)
    reg: AuthRegistry | None = None
    n_eves: int = 0
    eve_pathloss: np.ndarray | None = None
    auth_enabled: bool = False
    seed: int = 0
    radius: float = 500.0

    def __post_init__(self):
        if self.field.n_followers == 0:
            raise DegenerateGeometryError("the network has no followers")
        if self.reg is None:
            # noise-free fingerprints by default; callers set sigma/epsilon explicitly
            self.reg = registry_from_field(self.field, self.ch.alpha, sigma=1.0, epsilon=math.inf,
                                           radius=self.radius)
        if self.reg.m != self.field.n_followers:
            raise DomainError("registry must hold one fingerprint per follower")
        if self.n_eves < 0:
            raise DomainError("n_eves must be non-negative")
        if self.eve_pathloss is not None:
            self.eve_pathloss = np.broadcast_to(np.asarray(self.eve_pathloss, dtype=float), (self.n_eves,))


@dataclass(frozen=True)
class ConsensusRoundOutcome:
    dl_successes: np.ndarray
    ul_successes: np.ndarray
    votes_received: int
    spoofed_votes_accepted: int
    spoofed_votes_counted: int
    legitimate_votes_rejected: int
    accepted_votes: int
    consensus: bool


def _link_success(rng, p_sig, d_sig, p_jam, d_jam, beta, alpha):
    """Per-follower success; ``d_jam`` is (M, K)."""
    m = len(d_sig)
    h = rng.exponential(1.0, m)
    h_j = rng.exponential(1.0, d_jam.shape)
    interference = p_jam * np.sum(h_j * d_jam ** (-alpha), axis=1)
    return (interference == 0.0) | (p_sig * h * d_sig ** (-alpha) > beta * interference)


def _geometry(fld: PppField):
    d_sig = fld.follower_distances()
    if np.any(d_sig == 0.0):
        raise DegenerateGeometryError("a follower sits on the leader")
    if fld.n_jammers:
        d_dl = np.hypot(*(fld.followers[:, None, :] - fld.jammers[None, :, :]).transpose(2, 0, 1))
        d_ul = np.broadcast_to(np.hypot(fld.jammers[:, 0], fld.jammers[:, 1]), d_dl.shape)
    else:
        d_dl = d_ul = np.empty((fld.n_followers, 0))
    return d_sig, d_dl, d_ul


def run_round(cfg: RoundConfig, rng=None) -> ConsensusRoundOutcome:
    rng = as_generator(cfg.seed if rng is None else rng)
    ch, reg = cfg.ch, cfg.reg
    m = cfg.field.n_followers
    d_sig, d_dl, d_ul = _geometry(cfg.field)

    dl = _link_success(rng, ch.p_leader_mw, d_sig, ch.p_jammer_mw, d_dl, ch.beta_dl_linear, ch.alpha)
    ul = _link_success(rng, ch.p_follower_mw, d_sig, ch.p_jammer_mw, d_ul, ch.beta_ul_linear, ch.alpha)
    ul = ul & dl  # only followers that heard the broadcast vote

    z_legit = reg.ground_truth + rng.normal(0.0, reg.sigma, m)
    if cfg.n_eves:
        if cfg.eve_pathloss is None:
            psi_e = rng.uniform(reg.psi_min, reg.psi_max, cfg.n_eves)
        else:
            psi_e = cfg.eve_pathloss
        z_eve = psi_e + rng.normal(0.0, reg.sigma, cfg.n_eves)
    else:
        z_eve = np.empty(0)

    voters = np.flatnonzero(ul)
    counted = set()
    rejected = spoof_accepted = spoof_counted = 0
    for i in voters:
        if cfg.auth_enabled:
            resid = np.abs(z_legit[i] - reg.ground_truth)
            who = int(np.argmin(resid))
            if resid[who] > reg.epsilon:
                rejected += 1
                continue
        else:
            who = int(i)
        counted.add(who)
    for j, z in enumerate(z_eve):
        if cfg.auth_enabled:
            resid = np.abs(z - reg.ground_truth)
            who = int(np.argmin(resid))
            if resid[who] > reg.epsilon:
                continue
        else:
            who = j % m
        spoof_accepted += 1
        if who not in counted:
            counted.add(who)
            spoof_counted += 1

    accepted = len(counted)
    return ConsensusRoundOutcome(
        dl_successes=dl,
        ul_successes=ul,
        votes_received=len(voters) + cfg.n_eves,
        spoofed_votes_accepted=spoof_accepted,
        spoofed_votes_counted=spoof_counted,
        legitimate_votes_rejected=rejected,
        accepted_votes=accepted,
        consensus=accepted > m // 2,
    )


def _round_config(cfg: RoundConfig, r: int, jam: JammerAnnulus | None):
    """Config for round ``r``: a fresh jammer field when ``jam`` is given."""
    if jam is None:
        return cfg
    jrng = block_rng(cfg.seed, r, stream=_JAMMER_STREAM)
    n_j = jrng.poisson(jam.mean_jammers) if jam.mean_jammers > 0 else 0
    fld = PppField(followers=cfg.field.followers, jammers=sample_annulus(jrng, n_j, jam.z1, jam.z2))
    return replace(cfg, field=fld)


def _rounds(cfg, rounds, jam):
    if rounds < 1:
        raise DomainError("rounds must be >= 1")
    for r in range(rounds):
        yield run_round(_round_config(cfg, r, jam), block_rng(cfg.seed, r, stream=_ROUND_STREAM))


def consensus_probability(cfg: RoundConfig, rounds: int, jam: JammerAnnulus | None = None) -> McEstimate:
    """Fraction of rounds that reach consensus.

    The follower layout stays fixed. Without ``jam`` the jammers of
    ``cfg.field`` are reused every round and only fading and noise change;
    with ``jam`` a new jammer field is drawn from that annulus each round.
    """
    wins = sum(out.consensus for out in _rounds(cfg, rounds, jam))
    return McEstimate.from_counts(int(wins), rounds)


@dataclass(frozen=True)
class AttackImpactReport:
    consensus_auth_on: McEstimate
    consensus_auth_off: McEstimate
    spoof_acceptance_rate: McEstimate
    legitimate_rejection_rate: McEstimate
    spoof_acceptance_rate_auth_off: McEstimate

    @property
    def consensus_gap(self) -> float:
        return self.consensus_auth_off.mean - self.consensus_auth_on.mean


def _rate(k, n):
    return McEstimate.from_counts(k, n) if n else McEstimate(0.0, 0.0, 0)


def attack_impact_report(cfg: RoundConfig, rounds: int, jam: JammerAnnulus | None = None) -> AttackImpactReport:
    """Consensus with and without authentication on identical random streams."""
    on = list(_rounds(replace(cfg, auth_enabled=True), rounds, jam))
    off = list(_rounds(replace(cfg, auth_enabled=False), rounds, jam))
    legit_sent = sum(int(o.ul_successes.sum()) for o in on)
    spoof_sent = rounds * cfg.n_eves
    return AttackImpactReport(
        consensus_auth_on=McEstimate.from_counts(sum(o.consensus for o in on), rounds),
        consensus_auth_off=McEstimate.from_counts(sum(o.consensus for o in off), rounds),
        spoof_acceptance_rate=_rate(sum(o.spoofed_votes_accepted for o in on), spoof_sent),
        legitimate_rejection_rate=_rate(sum(o.legitimate_votes_rejected for o in on), legit_sent),
        spoof_acceptance_rate_auth_off=_rate(sum(o.spoofed_votes_accepted for o in off), spoof_sent),
    )


def link_success_probabilities(fld: PppField, ch: ChannelParams, trials: int = 0, seed: int = 0):
    """Per-follower probability that both the broadcast and the vote get through.

    With ``trials == 0`` the exact value for the fixed layout is returned:
    averaging Rayleigh fading gives ``prod_j 1 / (1 + beta (P_j/P) (r/d_j)^alpha)``
    per link. With ``trials > 0`` it is estimated by simulating fading only.
    """
    d_sig, d_dl, d_ul = _geometry(fld)
    if trials == 0:
        def exact(p_sig, d_jam, beta):
            x = beta * (ch.p_jammer_mw / p_sig) * (d_sig[:, None] / d_jam) ** ch.alpha
            return np.prod(1.0 / (1.0 + x), axis=1)
        return exact(ch.p_leader_mw, d_dl, ch.beta_dl_linear) * exact(ch.p_follower_mw, d_ul, ch.beta_ul_linear)
    rng = as_generator(seed)
    hits = np.zeros(fld.n_followers, dtype=np.int64)
    for _ in range(trials):
        dl = _link_success(rng, ch.p_leader_mw, d_sig, ch.p_jammer_mw, d_dl, ch.beta_dl_linear, ch.alpha)
        ul = _link_success(rng, ch.p_follower_mw, d_sig, ch.p_jammer_mw, d_ul, ch.beta_ul_linear, ch.alpha)
        hits += dl & ul
    return hits / trials


def majority_probability(p) -> float:
    """P[more than half of independent Bernoulli(p_i) trials succeed].

    Poisson-binomial distribution by direct convolution; reduces to the
    binomial sum when all ``p_i`` are equal.
    """
    p = np.asarray(p, dtype=float)
    dist = np.array([1.0])
    for pi in p:
        dist = np.convolve(dist, [1.0 - pi, pi])
    return float(dist[len(p) // 2 + 1:].sum())


def pfa_consensus_bound(reg: AuthRegistry, m_votes: int) -> float:
    """Upper bound on the consensus loss caused by false alarms alone: the
    chance that at least one of ``m_votes`` legitimate votes is rejected."""
    pfa = 2.0 * q_function(reg.epsilon / reg.sigma) if math.isfinite(reg.epsilon) else 0.0
    return 1.0 - (1.0 - pfa) ** m_votes
