"""Monte Carlo coverage estimation by direct simulation.

Trials are grouped in fixed-size blocks. Block ``b`` draws from its own
stream ``SeedSequence(seed, spawn_key=(0, b))``, so the result depends only on
``(seed, trials, query)``: blocks can be evaluated in any order or on any
number of threads and the integer success tallies are the same.

Two geometry modes are supported:

``origin_referenced``
    The tagged follower distance is drawn from ``2 pi rho r exp(-rho pi r^2)``
    and every jammer distance is measured from the origin. This is the model
    the closed forms describe. For JOINT the two links use independent
    geometry and fading, which is what the product formula assumes.

``receiver_referenced``
    A follower field is drawn on the deployment disk, a tagged follower is
    picked uniformly from it, and interference is measured at the actual
    receiver (the follower on the downlink, the leader on the uplink). For
    JOINT both links share the geometry and use independent fading.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coverage import CoverageQuery, Link
from .errors import DomainError

__all__ = [
    "GeometryMode",
    "McConfig",
    "McEstimate",
    "BLOCK_SIZE",
    "estimate_coverage",
    "estimate_joint_dependence",
    "block_rng",
]

BLOCK_SIZE = 8192
WORKERS_ENV = "RAFTJAMSEC_WORKERS"


class GeometryMode(str, enum.Enum):
    ORIGIN = "origin_referenced"
    RECEIVER = "receiver_referenced"


@dataclass(frozen=True)
class McConfig:
    trials: int = 100_000
    seed: int = 42
    workers_hint: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be >= 1")

    def workers(self) -> int:
        if self.workers_hint is not None:
            return max(1, int(self.workers_hint))
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    trials: int
    resampled: int = 0

    @classmethod
    def from_counts(cls, successes: int, trials: int, resampled: int = 0) -> "McEstimate":
        p = successes / trials
        return cls(p, math.sqrt(p * (1.0 - p) / trials), trials, resampled)


def block_rng(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, block)))


def _block_sizes(trials: int):
    n_blocks = -(-trials // BLOCK_SIZE)
    return [min(BLOCK_SIZE, trials - b * BLOCK_SIZE) for b in range(n_blocks)]


# ---------------------------------------------------------------------------
# vectorized per-block samplers


def _jammers(rng, n, jam):
    """Jammer positions for ``n`` trials: (trial index per jammer, xy array)."""
    mean = jam.mean_jammers
    counts = rng.poisson(mean, n) if mean > 0 else np.zeros(n, dtype=np.int64)
    total = int(counts.sum())
    owner = np.repeat(np.arange(n), counts)
    u = rng.random(total)
    theta = rng.random(total) * (2.0 * math.pi)
    rad = np.sqrt(jam.z1**2 + u * (jam.z2**2 - jam.z1**2))
    return owner, np.column_stack((rad * np.cos(theta), rad * np.sin(theta)))


def _success(rng, n, p_signal, d_signal, p_jam, owner, d_jam, beta, alpha):
    """Coverage indicator per trial; fading is drawn here (signal first, then jammers)."""
    h = rng.exponential(1.0, n)
    h_j = rng.exponential(1.0, len(owner))
    interference = p_jam * np.bincount(owner, weights=h_j * d_jam ** (-alpha), minlength=n)
    signal = p_signal * h * d_signal ** (-alpha)
    return (interference == 0.0) | (signal > beta * interference)


def _link_power_beta(q, link):
    ch = q.ch
    if link is Link.DL:
        return ch.p_leader_mw, ch.beta_dl_linear
    return ch.p_follower_mw, ch.beta_ul_linear


def _origin_link(rng, n, q, link):
    rho = q.rho_distance
    r = np.sqrt(rng.exponential(1.0, n) / (rho * math.pi))
    owner, xy = _jammers(rng, n, q.jam)
    d_jam = np.hypot(xy[:, 0], xy[:, 1])
    p_sig, beta = _link_power_beta(q, link)
    return _success(rng, n, p_sig, r, q.ch.p_jammer_mw, owner, d_jam, beta, q.ch.alpha)


def _receiver_geometry(rng, n, q):
    """Tagged follower positions and the number of empty follower fields redrawn."""
    mean_f = q.dep.mean_followers
    resampled = 0
    counts = rng.poisson(mean_f, n)
    empty = counts == 0
    while np.any(empty):
        k = int(empty.sum())
        resampled += k
        counts[empty] = rng.poisson(mean_f, k)
        empty = counts == 0
    # a uniformly chosen member of a non-empty uniform field is uniform on the disk
    u = rng.random(n)
    theta = rng.random(n) * (2.0 * math.pi)
    rad = q.dep.radius * np.sqrt(u)
    return np.column_stack((rad * np.cos(theta), rad * np.sin(theta))), resampled


def _simulate_block(rng, n, q, mode, link, shared=False):
    """Returns (dl, ul) boolean arrays (either may be None) and the resample count."""
    ch = q.ch
    if mode is GeometryMode.ORIGIN and not shared:
        dl = _origin_link(rng, n, q, Link.DL) if link in (Link.DL, Link.JOINT) else None
        ul = _origin_link(rng, n, q, Link.UL) if link in (Link.UL, Link.JOINT) else None
        return dl, ul, 0

    resampled = 0
    if mode is GeometryMode.ORIGIN:
        r = np.sqrt(rng.exponential(1.0, n) / (q.rho_distance * math.pi))
        owner, xy = _jammers(rng, n, q.jam)
        d_jam = np.hypot(xy[:, 0], xy[:, 1])
        d_jam_dl = d_jam_ul = d_jam
    else:
        pos, resampled = _receiver_geometry(rng, n, q)
        r = np.hypot(pos[:, 0], pos[:, 1])
        owner, xy = _jammers(rng, n, q.jam)
        d_jam_ul = np.hypot(xy[:, 0], xy[:, 1])
        rel = xy - pos[owner]
        d_jam_dl = np.hypot(rel[:, 0], rel[:, 1])
    dl = ul = None
    if link in (Link.DL, Link.JOINT):
        dl = _success(rng, n, ch.p_leader_mw, r, ch.p_jammer_mw, owner, d_jam_dl, ch.beta_dl_linear, ch.alpha)
    if link in (Link.UL, Link.JOINT):
        ul = _success(rng, n, ch.p_follower_mw, r, ch.p_jammer_mw, owner, d_jam_ul, ch.beta_ul_linear, ch.alpha)
    return dl, ul, resampled


def _run_blocks(fn, mc: McConfig):
    """Apply ``fn(block_index, n)`` to every block and return results in block order."""
    sizes = _block_sizes(mc.trials)
    workers = mc.workers()
    if workers == 1 or len(sizes) == 1:
        return [fn(b, n) for b, n in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda bn: fn(*bn), enumerate(sizes)))


def estimate_coverage(q: CoverageQuery, mc: McConfig | None = None, geometry_mode=GeometryMode.ORIGIN) -> McEstimate:
    """Fraction of simulated trials where the requested link(s) clear the SIR threshold."""
    mc = mc or McConfig()
    mode = GeometryMode(geometry_mode)
    link = q.link

    def block(b, n):
        dl, ul, resampled = _simulate_block(block_rng(mc.seed, b), n, q, mode, link)
        if link is Link.DL:
            ok = dl
        elif link is Link.UL:
            ok = ul
        else:
            ok = dl & ul
        return int(np.count_nonzero(ok)), resampled

    tallies = _run_blocks(block, mc)
    return McEstimate.from_counts(sum(t[0] for t in tallies), mc.trials, sum(t[1] for t in tallies))


@dataclass(frozen=True)
class DependenceGap:
    joint: McEstimate
    product: McEstimate
    dl: McEstimate
    ul: McEstimate

    @property
    def gap(self) -> float:
        return self.joint.mean - self.product.mean


def estimate_joint_dependence(q: CoverageQuery, mc: McConfig | None = None, geometry_mode=GeometryMode.ORIGIN) -> DependenceGap:
    """Joint coverage with shared geometry against the product of its marginals.

    Each trial uses one geometry for both links with independent fading. The
    product estimate carries a delta-method standard error.
    """
    mc = mc or McConfig()
    mode = GeometryMode(geometry_mode)

    def block(b, n):
        dl, ul, resampled = _simulate_block(block_rng(mc.seed, b), n, q, mode, Link.JOINT, shared=True)
        return int(np.count_nonzero(dl)), int(np.count_nonzero(ul)), int(np.count_nonzero(dl & ul)), resampled

    tallies = np.array(_run_blocks(block, mc), dtype=np.int64).sum(axis=0)
    n = mc.trials
    dl = McEstimate.from_counts(int(tallies[0]), n, int(tallies[3]))
    ul = McEstimate.from_counts(int(tallies[1]), n, int(tallies[3]))
    joint = McEstimate.from_counts(int(tallies[2]), n, int(tallies[3]))
    prod = dl.mean * ul.mean
    prod_se = math.sqrt((ul.mean * dl.std_error) ** 2 + (dl.mean * ul.std_error) ** 2)
    return DependenceGap(joint, McEstimate(prod, prod_se, n, int(tallies[3])), dl, ul)
