"""Coverage under jamming: closed form, quadrature and simulation side by side.

Run with ``python3 demos/coverage_walkthrough.py``.
"""

import numpy as np

from raftjamsec.coverage import (CoverageQuery, Link, coverage_dl, coverage_dl_receiver, coverage_joint,
                                 coverage_ul, laplace_interference, laplace_interference_quadrature)
from raftjamsec.mc_engine import GeometryMode, McConfig, estimate_coverage
from raftjamsec.netmodel import DEFAULT_RHO_FOLLOWER, ChannelParams, DeploymentConfig, JammerAnnulus


def main():
    ch = ChannelParams(beta_dl=-20.0, beta_ul=-20.0)
    jam = JammerAnnulus(z1=50.0, z2=300.0, rho_jammer=DEFAULT_RHO_FOLLOWER)

    print("Interference Laplace transform at a follower 100 m from the leader")
    print(f"  hypergeometric closed form : {laplace_interference(100.0, ch, jam):.12f}")
    print(f"  direct quadrature          : {laplace_interference_quadrature(100.0, ch, jam):.12f}")

    q = CoverageQuery(ch, DeploymentConfig(), jam)
    print("\nCoverage, jammers on [50, 300] m at the follower density, beta = -20 dB")
    for name, fn, link in (("DL", coverage_dl, Link.DL), ("UL", coverage_ul, Link.UL),
                           ("joint", coverage_joint, Link.JOINT)):
        est = estimate_coverage(q.with_link(link), McConfig(100_000, seed=42))
        print(f"  {name:5s} closed form {fn(q).probability:.5f}   simulated {est.mean:.5f} +- {est.std_error:.5f}")

    print("\nMoving a 50 m jammer ring outwards (beta = -30 dB)")
    print("   z1    DL(at follower)   UL(at leader)   joint")
    ch30 = ChannelParams(beta_dl=-30.0, beta_ul=-30.0)
    for z1 in np.arange(0.0, 301.0, 50.0):
        qz = CoverageQuery(ch30, DeploymentConfig(), JammerAnnulus(z1, z1 + 50.0, DEFAULT_RHO_FOLLOWER))
        dl = coverage_dl_receiver(qz).probability
        ul = coverage_ul(qz).probability
        print(f"  {z1:4.0f}   {dl:.5f}           {ul:.5f}         {dl * ul:.5f}")

    qz = CoverageQuery(ch30, DeploymentConfig(), JammerAnnulus(150.0, 200.0, DEFAULT_RHO_FOLLOWER), Link.DL)
    est = estimate_coverage(qz, McConfig(100_000, seed=1), GeometryMode.RECEIVER)
    print(f"\nreceiver-referenced DL at z1 = 150 m: analytic {coverage_dl_receiver(qz).probability:.5f}, "
          f"simulated {est.mean:.5f} +- {est.std_error:.5f}")


if __name__ == "__main__":
    main()
