"""Pathloss-fingerprint authentication at the leader.

A vote arrives with a noisy pathloss measurement ``z = Psi + n``,
``n ~ N(0, sigma^2)`` (dB). The leader finds the nearest registered
fingerprint (the ML decision for Gaussian noise) and accepts the vote iff
the residual is at most ``epsilon``.

Follower indices are 0-based throughout.

Missed-detection normalization
------------------------------
The closed-form double sum carries a ``1/M`` weight on the sum over
fingerprints. Three conventions are available through ``normalization``:

``"mean"``   the sum averaged over fingerprints, with ``1/M`` (default);
``"sum"``    the same sum without ``1/M`` (exact when the acceptance
             intervals ``[Psi_i - eps, Psi_i + eps]`` are disjoint);
``"union"``  probability of landing in the union of the intervals, exact
             for any spacing. This is what the Monte Carlo oracle measures.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .mc_engine import BLOCK_SIZE, McEstimate, block_rng
from .netmodel import PppField, as_generator, pathloss_db, sample_disk
from .specfun import QuadratureSpec, integrate, q_function, q_inverse

__all__ = [
    "Hypothesis",
    "AuthRegistry",
    "EveEnsemble",
    "AuthDecision",
    "AuthMcResult",
    "RocPoint",
    "Realization",
    "DEFAULT_REALIZATION_SEED",
    "ml_identify",
    "decide",
    "threshold_for_pfa",
    "sigma_from_lq",
    "pfa_closed_form",
    "pmd_closed_form",
    "pmd_expected",
    "pmc_closed_form",
    "monte_carlo_auth",
    "roc_curve",
    "registry_from_field",
    "pinned_realization",
]

# seed of the committed M = N = 5 realization used for the reference authentication checks
DEFAULT_REALIZATION_SEED = 555

_QUAD = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-10, max_subdivisions=4000)


class Hypothesis(str, enum.Enum):
    H0 = "H0_no_impersonation"
    H1 = "H1_impersonation"


def _check_priors(priors, n, what):
    priors = np.full(n, 1.0 / n) if priors is None else np.asarray(priors, dtype=float)
    if priors.shape != (n,) or np.any(priors < 0) or abs(priors.sum() - 1.0) > 1e-9:
        raise DomainError(f"{what} priors must be {n} non-negative values summing to 1")
    return priors


@dataclass
class AuthRegistry:
    """Leader-side fingerprints and test settings (all in dB)."""

    ground_truth: np.ndarray
    sigma: float
    epsilon: float = 0.0
    priors: np.ndarray | None = None
    psi_min: float = 0.0
    psi_max: float = 30.0 * math.log10(500.0)

    def __post_init__(self):
        self.ground_truth = np.atleast_1d(np.asarray(self.ground_truth, dtype=float))
        m = len(self.ground_truth)
        if m < 1:
            raise DomainError("registry needs at least one fingerprint")
        if not np.all(np.isfinite(self.ground_truth)):
            raise DomainError("fingerprints must be finite")
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if not self.epsilon >= 0:
            raise DomainError("epsilon must be non-negative")
        if not self.psi_min < self.psi_max:
            raise DomainError("psi_min must be below psi_max")
        self.priors = _check_priors(self.priors, m, "follower")
        if len(np.unique(self.ground_truth)) < m:
            warnings.warn("duplicate fingerprints: ML decision regions are degenerate", RuntimeWarning)

    @property
    def m(self) -> int:
        return len(self.ground_truth)

    def with_(self, **changes) -> "AuthRegistry":
        kw = dict(ground_truth=self.ground_truth, sigma=self.sigma, epsilon=self.epsilon,
                  priors=self.priors, psi_min=self.psi_min, psi_max=self.psi_max)
        kw.update(changes)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return AuthRegistry(**kw)


@dataclass
class EveEnsemble:
    """Impersonators. ``eve_pathloss=None`` means each Eve's pathloss is
    uniform on the registry's ``[psi_min, psi_max]``."""

    eve_pathloss: np.ndarray | None = None
    priors: np.ndarray | None = None
    n: int | None = None

    def __post_init__(self):
        if self.eve_pathloss is not None:
            self.eve_pathloss = np.atleast_1d(np.asarray(self.eve_pathloss, dtype=float))
            self.n = len(self.eve_pathloss)
        elif self.n is None:
            self.n = 1
        if self.n < 1:
            raise DomainError("need at least one Eve")
        self.priors = _check_priors(self.priors, self.n, "Eve")

    @property
    def uniform(self) -> bool:
        return self.eve_pathloss is None


@dataclass(frozen=True)
class AuthDecision:
    hypothesis: Hypothesis
    identified_index: int
    test_statistic: float


def sigma_from_lq(lq_db: float) -> float:
    """Noise standard deviation for link quality ``LQ = 1/sigma^2`` given in dB."""
    return 10.0 ** (-lq_db / 20.0)


def ml_identify(z: float, reg: AuthRegistry):
    """Nearest fingerprint: returns ``(min_i |z - Psi_i|, argmin)``; ties go to the lowest index."""
    resid = np.abs(z - reg.ground_truth)
    i = int(np.argmin(resid))
    return float(resid[i]), i


def decide(z: float, reg: AuthRegistry) -> AuthDecision:
    ts, i = ml_identify(z, reg)
    hyp = Hypothesis.H1 if ts > reg.epsilon else Hypothesis.H0
    return AuthDecision(hyp, i, ts)


def threshold_for_pfa(target_pfa: float, sigma: float) -> float:
    """Threshold giving false-alarm probability ``2 Q(eps/sigma) = target_pfa``."""
    if not 0.0 < target_pfa <= 1.0:
        raise DomainError(f"target_pfa must lie in (0, 1], got {target_pfa!r}")
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if target_pfa == 1.0:
        return 0.0
    return sigma * q_inverse(target_pfa / 2.0)


def pfa_closed_form(reg: AuthRegistry) -> float:
    """``2 Q(eps/sigma)``; ignores acceptance by a neighbouring fingerprint."""
    return 2.0 * q_function(reg.epsilon / reg.sigma)


def _merged_intervals(reg: AuthRegistry):
    lo = np.sort(reg.ground_truth) - reg.epsilon
    hi = np.sort(reg.ground_truth) + reg.epsilon
    merged = []
    for a, b in zip(lo, hi):
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return np.array(merged)


def _acceptance_probability(psi_e, reg: AuthRegistry, normalization: str):
    """P[an Eve with pathloss ``psi_e`` is accepted], vectorized over ``psi_e``."""
    psi_e = np.asarray(psi_e, dtype=float)
    s = reg.sigma
    if normalization == "union":
        iv = _merged_intervals(reg)
        a = (iv[:, 0][None, :] - psi_e[..., None]) / s
        b = (iv[:, 1][None, :] - psi_e[..., None]) / s
        return np.sum(q_function(a) - q_function(b), axis=-1)
    d = reg.ground_truth[None, :] - psi_e[..., None]
    total = np.sum(q_function((d - reg.epsilon) / s) - q_function((d + reg.epsilon) / s), axis=-1)
    if normalization == "mean":
        return total / reg.m
    if normalization == "sum":
        return total
    raise DomainError(f"unknown normalization {normalization!r}")


def _clamped(p, what):
    if p > 1.0 + 1e-12 or p < -1e-12:
        warnings.warn(f"{what} = {p!r} falls outside [0, 1]; clamped", RuntimeWarning)
    return float(min(1.0, max(0.0, p)))


def pmd_closed_form(reg: AuthRegistry, eves: EveEnsemble, normalization: str = "mean") -> float:
    """Missed-detection probability for Eves with known pathloss."""
    if eves.uniform:
        raise DomainError("pmd_closed_form needs explicit Eve pathloss; use pmd_expected")
    per_eve = _acceptance_probability(eves.eve_pathloss, reg, normalization)
    return _clamped(float(np.dot(eves.priors, per_eve)), "P_md")


def pmd_expected(reg: AuthRegistry, eves: EveEnsemble | None = None, normalization: str = "mean") -> float:
    """Missed detection averaged over Eve pathloss uniform on ``[psi_min, psi_max]``.

    Every Eve shares the same uniform prior, so the Eve priors only enter
    through their sum (one).
    """
    if eves is not None and not eves.uniform:
        raise DomainError("pmd_expected expects the uniform-prior Eve ensemble")
    if reg.epsilon == 0.0:
        return 0.0
    lo, hi = reg.psi_min, reg.psi_max
    knots = {lo, hi}
    for psi in reg.ground_truth:
        for k in (psi - reg.epsilon - reg.sigma, psi, psi + reg.epsilon + reg.sigma):
            if lo < k < hi:
                knots.add(float(k))
    knots = sorted(knots)
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        total += integrate(lambda x: _acceptance_probability(x, reg, normalization), a, b, _QUAD).value
    return _clamped(total / (hi - lo), "expected P_md")


def pmc_closed_form(reg: AuthRegistry, boundaries: str = "infinite") -> float:
    """Probability that a legitimate vote is attributed to the wrong follower.

    Decision regions are the midpoint cells of the sorted fingerprints. The
    outermost cells extend to infinity by default; ``boundaries="support"``
    truncates them at ``psi_min`` / ``psi_max`` instead. This stage precedes
    the threshold test, so ``epsilon`` plays no part. Among duplicate
    fingerprints only the lowest index can ever be chosen; the others are
    always misclassified.
    """
    if boundaries not in ("infinite", "support"):
        raise DomainError(f"unknown boundary convention {boundaries!r}")
    values = np.unique(reg.ground_truth)
    mids = 0.5 * (values[:-1] + values[1:])
    outer_lo, outer_hi = (-math.inf, math.inf) if boundaries == "infinite" else (reg.psi_min, reg.psi_max)
    lower = np.concatenate(([outer_lo], mids))
    upper = np.concatenate((mids, [outer_hi]))

    p_mc_i = np.ones(reg.m)
    for k, v in enumerate(values):
        winner = int(np.flatnonzero(reg.ground_truth == v)[0])
        with np.errstate(invalid="ignore"):
            a = (lower[k] - v) / reg.sigma
            b = (upper[k] - v) / reg.sigma
        q_a = 1.0 if a == -math.inf else q_function(a)
        q_b = 0.0 if b == math.inf else q_function(b)
        p_mc_i[winner] = 1.0 - (q_a - q_b)
    return float(np.dot(reg.priors, p_mc_i))


@dataclass(frozen=True)
class AuthMcResult:
    pfa: McEstimate
    pmd: McEstimate
    pmc: McEstimate
    pmc_accepted: McEstimate


def monte_carlo_auth(reg: AuthRegistry, eves: EveEnsemble, draws: int, seed: int) -> AuthMcResult:
    """Simulate legitimate and impersonating transmissions.

    Each draw produces one legitimate vote (true node from the priors) and
    one Eve vote (Eve from the Eve priors, pathloss from the ensemble).

    ``pmc`` counts a wrong nearest-fingerprint index whatever the threshold
    says; ``pmc_accepted`` additionally requires the vote to be accepted.
    """
    if draws < 1:
        raise DomainError("draws must be >= 1")
    psi = reg.ground_truth
    n_blocks = -(-draws // BLOCK_SIZE)
    counts = np.zeros(4, dtype=np.int64)
    for b in range(n_blocks):
        n = min(BLOCK_SIZE, draws - b * BLOCK_SIZE)
        rng = block_rng(seed, b, stream=1)
        true_i = rng.choice(reg.m, size=n, p=reg.priors)
        z = psi[true_i] + rng.normal(0.0, reg.sigma, n)
        resid = np.abs(z[:, None] - psi[None, :])
        est = np.argmin(resid, axis=1)
        ts = resid[np.arange(n), est]
        rejected = ts > reg.epsilon
        wrong = est != true_i

        j = rng.choice(eves.n, size=n, p=eves.priors)
        if eves.uniform:
            psi_e = rng.uniform(reg.psi_min, reg.psi_max, n)
        else:
            psi_e = eves.eve_pathloss[j]
        z_e = psi_e + rng.normal(0.0, reg.sigma, n)
        ts_e = np.min(np.abs(z_e[:, None] - psi[None, :]), axis=1)
        counts += [
            np.count_nonzero(rejected),
            np.count_nonzero(ts_e <= reg.epsilon),
            np.count_nonzero(wrong),
            np.count_nonzero(wrong & ~rejected),
        ]
    return AuthMcResult(*(McEstimate.from_counts(int(c), draws) for c in counts))


@dataclass(frozen=True)
class RocPoint:
    pfa: float
    epsilon: float
    pd: float
    pd_mc: float | None = None
    pd_mc_std_error: float | None = None


def roc_curve(reg: AuthRegistry, eves: EveEnsemble, pfa_grid, draws: int = 0, seed: int = 0,
              normalization: str = "union") -> list[RocPoint]:
    """Detection probability against target false-alarm rate.

    The threshold for each grid point follows from the target rate. With
    ``draws > 0`` every point also gets a Monte Carlo detection rate; all
    points reuse the same seed, so the simulated curve is monotone too.
    """
    points = []
    for p in pfa_grid:
        eps = threshold_for_pfa(float(p), reg.sigma)
        r = reg.with_(epsilon=eps)
        if eves.uniform:
            pmd = pmd_expected(r, eves, normalization)
        else:
            pmd = pmd_closed_form(r, eves, normalization)
        if draws > 0:
            mc = monte_carlo_auth(r, eves, draws, seed)
            points.append(RocPoint(float(p), eps, 1.0 - pmd, 1.0 - mc.pmd.mean, mc.pmd.std_error))
        else:
            points.append(RocPoint(float(p), eps, 1.0 - pmd))
    return points


def registry_from_field(field: PppField, alpha: float, sigma: float, epsilon: float = 0.0,
                        radius: float = 500.0) -> AuthRegistry:
    """Fingerprints from follower distances; support spans distances ``[1 m, radius]``."""
    return AuthRegistry(
        ground_truth=pathloss_db(field.follower_distances(), alpha),
        sigma=sigma,
        epsilon=epsilon,
        psi_min=pathloss_db(1.0, alpha),
        psi_max=pathloss_db(radius, alpha),
    )


@dataclass
class Realization:
    """Fixed follower and Eve layout used for the reference authentication experiments."""

    followers: np.ndarray
    eves: np.ndarray
    alpha: float
    radius: float
    seed: int = field(default=DEFAULT_REALIZATION_SEED)

    def registry(self, sigma: float, epsilon: float = 0.0) -> AuthRegistry:
        f = PppField(followers=self.followers, jammers=np.empty((0, 2)))
        return registry_from_field(f, self.alpha, sigma, epsilon, self.radius)

    def eve_ensemble(self) -> EveEnsemble:
        return EveEnsemble(pathloss_db(np.hypot(self.eves[:, 0], self.eves[:, 1]), self.alpha))


def pinned_realization(m: int = 5, n: int = 5, alpha: float = 3.0, radius: float = 500.0,
                       seed: int = DEFAULT_REALIZATION_SEED) -> Realization:
    """``m`` followers and ``n`` Eves placed uniformly on the deployment disk.

    Conditioned on its point count, a homogeneous Poisson field is a set of
    i.i.d. uniform points, so this is one realization with ``M = m``, ``N = n``.
    """
    rng = as_generator(seed)
    followers = sample_disk(rng, m, radius)
    eves = sample_disk(rng, n, radius)
    return Realization(followers, eves, alpha, radius, seed)
