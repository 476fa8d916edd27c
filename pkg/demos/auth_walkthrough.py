"""Pathloss-fingerprint authentication on the pinned realization.

Run with ``python3 demos/auth_walkthrough.py``.
"""

import numpy as np

from raftjamsec.authn import (decide, monte_carlo_auth, pfa_closed_form, pinned_realization, pmc_closed_form,
                              pmd_closed_form, roc_curve, sigma_from_lq, threshold_for_pfa)


def main():
    real = pinned_realization()
    sigma = sigma_from_lq(10.0)
    eps = threshold_for_pfa(0.1, sigma)
    reg = real.registry(sigma, eps)
    eves = real.eve_ensemble()
    print(f"realization seed {real.seed}")
    print("  follower fingerprints (dB):", np.round(reg.ground_truth, 2))
    print("  Eve pathloss (dB)         :", np.round(eves.eve_pathloss, 2))
    print(f"  LQ = 10 dB -> sigma = {sigma:.4f} dB, threshold for P_fa = 0.1: eps = {eps:.4f} dB")

    z = reg.ground_truth[2] + 0.3
    d = decide(z, reg)
    print(f"\nmeasurement {z:.2f} dB -> {d.hypothesis.value}, nearest follower {d.identified_index}, "
          f"residual {d.test_statistic:.2f} dB")

    mc = monte_carlo_auth(reg, eves, 1_000_000, seed=42)
    print("\n            closed form   simulated")
    print(f"  P_fa      {pfa_closed_form(reg):.5f}       {mc.pfa.mean:.5f}")
    print(f"  P_md      {pmd_closed_form(reg, eves, 'union'):.5f}       {mc.pmd.mean:.5f}")
    print(f"  P_mc      {pmc_closed_form(reg):.5f}       {mc.pmc.mean:.5f}")
    print(f"  (P_md with the 1/M weighting: {pmd_closed_form(reg, eves, 'mean'):.5f})")

    print("\nROC points (P_fa -> P_d)")
    for lq in (0.0, 5.0, 10.0, 15.0):
        pts = roc_curve(real.registry(sigma_from_lq(lq)), eves, [0.01, 0.1, 0.3])
        print(f"  LQ {lq:4.0f} dB: " + ", ".join(f"{p.pfa:g} -> {p.pd:.4f}" for p in pts))


if __name__ == "__main__":
    main()
