"""Closed-form coverage probabilities under a Poisson jamming field.

The analytic model conditions on the leader-follower distance ``r`` (density
``2 pi rho r exp(-rho pi r^2)``), averages the Rayleigh fading of the useful
link, and takes the Laplace transform of the aggregate jammer interference
over an annulus ``[z1, z2]`` centred at the leader. Jammer distances are
measured from the origin for both links, as in the derivation.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, UnsupportedExponentError
from .netmodel import ChannelParams, DeploymentConfig, JammerAnnulus
from .specfun import QuadratureSpec, hyp2f1_coverage, integrate

__all__ = [
    "Link",
    "CoverageQuery",
    "CoverageResult",
    "laplace_interference",
    "laplace_interference_quadrature",
    "coverage_dl",
    "coverage_ul",
    "coverage_joint",
    "coverage",
    "coverage_dl_receiver",
    "coverage_ul_receiver",
    "coverage_joint_receiver",
    "LAPLACE_CHECK_GRID",
    "laplace_check_points",
]

# z1 below this fraction of z2 switches the inner integral to quadrature
Z1_QUADRATURE_FRACTION = 1e-6

# Cross-check grid for the closed-form Laplace transform:
# alpha x r (m) x beta (dB) x (z1, z2) (m) x rho_J as a multiple of the follower intensity
LAPLACE_CHECK_GRID = {
    "alpha": (2.5, 3.0, 3.5, 4.0),
    "r": (10.0, 50.0, 100.0, 200.0, 400.0),
    "beta_db": (-30.0, -20.0, -10.0, 0.0),
    "annulus": ((0.0, 100.0), (50.0, 300.0), (100.0, 150.0), (200.0, 400.0)),
    "rho_factor": (0.25, 1.0, 4.0),
}

_OUTER = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-9, max_subdivisions=4000)
_INNER = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=2000)
_RX_OUTER = QuadratureSpec(abs_tol=1e-9, rel_tol=1e-8, max_subdivisions=2000)
_RX_INNER = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-9, max_subdivisions=2000)


class Link(str, enum.Enum):
    DL = "DL"
    UL = "UL"
    JOINT = "JOINT"


@dataclass(frozen=True)
class CoverageQuery:
    """Everything the closed forms depend on.

    ``rho_fr`` is the intensity used in the distance density of the tagged
    follower. It defaults to ``dep.rho_follower``; the jamming-distance sweep sets it to the
    jammer intensity instead.
    """

    ch: ChannelParams = field(default_factory=ChannelParams)
    dep: DeploymentConfig = field(default_factory=DeploymentConfig)
    jam: JammerAnnulus = field(default_factory=JammerAnnulus)
    link: Link = Link.DL
    rho_fr: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "link", Link(self.link))
        if self.rho_fr is not None and not self.rho_fr > 0:
            raise DomainError("rho_fr must be positive")

    @property
    def rho_distance(self) -> float:
        return self.dep.rho_follower if self.rho_fr is None else self.rho_fr

    def with_link(self, link) -> "CoverageQuery":
        return replace(self, link=Link(link))


@dataclass(frozen=True)
class CoverageResult:
    probability: float
    method: str
    quadrature_error_bound: float


def _link_params(ch: ChannelParams, link: Link):
    """(gamma * beta) product for the link."""
    if link is Link.DL:
        return ch.gamma_dl * ch.beta_dl_linear
    if link is Link.UL:
        return ch.gamma_ul * ch.beta_ul_linear
    raise DomainError("Laplace transform is defined per link, not for JOINT")


def _inner_integral(lo: float, hi: float, alpha: float) -> float:
    """``int_lo^hi du / (1 + u^(alpha/2))`` via the substitution u = exp(v)."""
    if hi <= lo:
        return 0.0
    half = alpha / 2.0

    def g(v):
        with np.errstate(over="ignore"):
            return np.exp(v) / (1.0 + np.exp(half * v))

    # the log-domain integrand is negligible beyond these limits
    v_lo = math.log(lo) if lo > 0 else -math.inf
    v_hi = math.log(hi) if math.isfinite(hi) else math.inf
    return integrate(g, v_lo, v_hi, _INNER).value


def _log_laplace(r, gb: float, alpha: float, jam: JammerAnnulus, force_quadrature=False) -> np.ndarray:
    """Natural log of the Laplace transform, vectorized over ``r``."""
    r = np.asarray(r, dtype=float)
    z1, z2, rho_j = jam.z1, jam.z2, jam.rho_jammer
    if rho_j == 0.0 or z1 == z2 or gb == 0.0:
        return np.zeros_like(r)
    if force_quadrature or z1 < Z1_QUADRATURE_FRACTION * z2:
        scale = r * gb ** (1.0 / alpha)
        inner = np.array([
            _inner_integral((z1 / s) ** 2, (z2 / s) ** 2, alpha) for s in np.atleast_1d(scale)
        ]).reshape(r.shape)
        return -math.pi * rho_j * scale**2 * inner
    c = gb * r**alpha
    bracket = (
        z2 ** (2.0 - alpha) * hyp2f1_coverage(alpha, c / z2**alpha)
        - z1 ** (2.0 - alpha) * hyp2f1_coverage(alpha, c / z1**alpha)
    )
    return math.pi * rho_j * c / (alpha / 2.0 - 1.0) * bracket


def laplace_interference(r, ch: ChannelParams, jam: JammerAnnulus, link=Link.DL, *, force_quadrature=False):
    """Laplace transform of the jammer interference evaluated at ``s = r^alpha beta / P``.

    Uses the hypergeometric closed form when ``z1 > 0``; for ``z1`` close to
    zero (or with ``force_quadrature``) the substituted one-dimensional
    integral ``int du / (1 + u^(alpha/2))`` is done by quadrature instead.
    Accepts scalar or array ``r``.
    """
    if not ch.alpha > 2.0:
        raise UnsupportedExponentError("alpha must exceed 2")
    ra = np.asarray(r, dtype=float)
    if np.any(ra <= 0):
        raise DomainError("laplace_interference requires r > 0")
    out = np.exp(_log_laplace(ra, _link_params(ch, Link(link)), ch.alpha, jam, force_quadrature))
    return float(out) if out.ndim == 0 else out


def laplace_interference_quadrature(r: float, ch: ChannelParams, jam: JammerAnnulus, link=Link.DL) -> float:
    """Same transform, by direct quadrature of the un-substituted radial integral.

    ``exp(-2 pi rho_J int_{z1}^{z2} [1 - 1/(1 + gamma beta (t/r)^-alpha)] t dt)``.
    Kept as the reference path for the closed form.
    """
    gb = _link_params(ch, Link(link))
    if jam.rho_jammer == 0.0 or jam.z1 == jam.z2:
        return 1.0
    alpha = ch.alpha

    def g(t):
        x = gb * (t / r) ** (-alpha)
        return x / (1.0 + x) * t

    val = integrate(g, jam.z1, jam.z2, _INNER).value
    return math.exp(-2.0 * math.pi * jam.rho_jammer * val)


def laplace_check_points():
    """Yield ``(r, ChannelParams, JammerAnnulus)`` over :data:`LAPLACE_CHECK_GRID`
    (downlink thresholds, default transmit powers, follower intensity of the default deployment)."""
    g = LAPLACE_CHECK_GRID
    rho_f = DeploymentConfig().rho_follower
    for alpha in g["alpha"]:
        for r in g["r"]:
            for beta in g["beta_db"]:
                ch = ChannelParams(alpha=alpha, beta_dl=beta)
                for z1, z2 in g["annulus"]:
                    for k in g["rho_factor"]:
                        yield r, ch, JammerAnnulus(z1, z2, k * rho_f)


def _clamp(p: float) -> float:
    if p > 1.0 or p < 0.0:
        if p > 1.0 + 1e-9 or p < -1e-9:
            warnings.warn(f"coverage probability {p!r} outside [0, 1] beyond tolerance", RuntimeWarning)
        return min(1.0, max(0.0, p))
    return p


def _coverage_link(q: CoverageQuery, link: Link) -> CoverageResult:
    rho = q.rho_distance
    gb = _link_params(q.ch, link)
    alpha = q.ch.alpha
    if q.jam.rho_jammer == 0.0 or q.jam.z1 == q.jam.z2:
        return CoverageResult(1.0, "closed_form", 0.0)

    def integrand(r):
        r = np.asarray(r, dtype=float)
        return np.exp(_log_laplace(r, gb, alpha, q.jam) - rho * math.pi * r * r) * (2.0 * math.pi * rho) * r

    res = integrate(integrand, 0.0, math.inf, _OUTER)
    method = "quadrature" if q.jam.z1 < Z1_QUADRATURE_FRACTION * q.jam.z2 else "closed_form"
    return CoverageResult(_clamp(res.value), method, res.error)


def coverage_dl(q: CoverageQuery) -> CoverageResult:
    """Downlink coverage ``P[SIR_DL > beta_D]``."""
    return _coverage_link(q, Link.DL)


def coverage_ul(q: CoverageQuery) -> CoverageResult:
    """Uplink coverage ``P[SIR_UL > beta_U]`` with follower transmit power."""
    return _coverage_link(q, Link.UL)


def coverage_joint(q: CoverageQuery) -> CoverageResult:
    """Product of uplink and downlink coverage."""
    dl = coverage_dl(q)
    ul = coverage_ul(q)
    err = dl.quadrature_error_bound * ul.probability + ul.quadrature_error_bound * dl.probability
    method = "quadrature" if "quadrature" in (dl.method, ul.method) else "closed_form"
    return CoverageResult(dl.probability * ul.probability, method, err)


def coverage(q: CoverageQuery) -> CoverageResult:
    """Dispatch on ``q.link``."""
    return {Link.DL: coverage_dl, Link.UL: coverage_ul, Link.JOINT: coverage_joint}[q.link](q)


# ---------------------------------------------------------------------------
# Receiver-referenced geometry: followers uniform on the deployment disk and
# downlink interference measured at the follower itself.


def _arc_measure(d, r, jam: JammerAnnulus):
    """Angle (radians) of the circle of radius ``d`` around a follower at
    distance ``r`` from the origin that lies inside the jammer annulus."""
    denom = 2.0 * r * d
    lo = np.minimum(np.maximum((jam.z1**2 - r * r - d * d) / denom, -1.0), 1.0)
    hi = np.minimum(np.maximum((jam.z2**2 - r * r - d * d) / denom, -1.0), 1.0)
    return 2.0 * (np.arccos(lo) - np.arccos(hi))


def _log_laplace_receiver_dl(r: float, gb: float, alpha: float, jam: JammerAnnulus) -> float:
    """Log Laplace transform of the interference seen by a follower at distance ``r``.

    Integrates over the distance ``d`` from the follower, weighting by the arc
    of the circle of radius ``d`` that falls inside the annulus.
    """
    c = gb * r**alpha
    lo = max(0.0, jam.z1 - r, r - jam.z2)
    hi = r + jam.z2
    knots = {lo, hi, abs(jam.z1 - r), jam.z1 + r, abs(jam.z2 - r), c ** (1.0 / alpha)}
    knots = sorted(k for k in knots if lo <= k <= hi)
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        if b <= a:
            continue
        half = 0.5 * (b - a)

        # d = a + half (1 - cos phi) smooths the square-root edges of the arc
        def g(phi, a=a, half=half):
            d = a + half * (1.0 - np.cos(phi))
            return c / (c + d**alpha) * d * _arc_measure(d, r, jam) * half * np.sin(phi)

        total += integrate(g, 0.0, math.pi, _RX_INNER).value
    return -jam.rho_jammer * total


def _disk_average(fn, radius: float, knots=()) -> CoverageResult:
    """``int_0^R (2 r / R^2) fn(r) dr`` for a vectorized ``fn``, split at ``knots``."""
    edges = sorted({0.0, radius, *(k for k in knots if 0.0 < k < radius)})
    value = error = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        res = integrate(lambda r: 2.0 * r / radius**2 * fn(np.asarray(r, dtype=float)), a, b, _RX_OUTER)
        value += res.value
        error += res.error
    return CoverageResult(_clamp(value), "quadrature", error)


def coverage_dl_receiver(q: CoverageQuery) -> CoverageResult:
    """Downlink coverage of a follower uniform on the deployment disk, with
    jammer distances measured to that follower."""
    if q.jam.rho_jammer == 0.0 or q.jam.z1 == q.jam.z2:
        return CoverageResult(1.0, "quadrature", 0.0)
    gb = _link_params(q.ch, Link.DL)
    alpha = q.ch.alpha

    def fn(r):
        return np.exp([_log_laplace_receiver_dl(float(x), gb, alpha, q.jam) for x in r])

    return _disk_average(fn, q.dep.radius, (q.jam.z1, q.jam.z2))


def coverage_ul_receiver(q: CoverageQuery) -> CoverageResult:
    """Uplink coverage of a follower uniform on the deployment disk."""
    if q.jam.rho_jammer == 0.0 or q.jam.z1 == q.jam.z2:
        return CoverageResult(1.0, "quadrature", 0.0)
    gb = _link_params(q.ch, Link.UL)
    return _disk_average(lambda r: np.exp(_log_laplace(r, gb, q.ch.alpha, q.jam)), q.dep.radius)


def coverage_joint_receiver(q: CoverageQuery) -> CoverageResult:
    """Product of the receiver-referenced link coverages."""
    dl = coverage_dl_receiver(q)
    ul = coverage_ul_receiver(q)
    err = dl.quadrature_error_bound * ul.probability + ul.quadrature_error_bound * dl.probability
    return CoverageResult(dl.probability * ul.probability, "quadrature", err)
