"""RAFT voting rounds over jammed links, with and without impersonators.

Run with ``python3 demos/consensus_walkthrough.py``.
"""

from raftjamsec.authn import registry_from_field, sigma_from_lq, threshold_for_pfa
from raftjamsec.netmodel import DEFAULT_RHO_FOLLOWER, ChannelParams, DeploymentConfig, JammerAnnulus, sample_field
from raftjamsec.raftsim import (RoundConfig, attack_impact_report, consensus_probability,
                                link_success_probabilities, majority_probability, run_round)


def main():
    fld = sample_field(DeploymentConfig(seed=0), JammerAnnulus(50.0, 300.0, DEFAULT_RHO_FOLLOWER))
    print(f"layout: {fld.n_followers} followers, {fld.n_jammers} jammers")

    for beta in (-20.0, -10.0, -5.0):
        ch = ChannelParams(beta_dl=beta, beta_ul=beta)
        out = run_round(RoundConfig(fld, ch, seed=1))
        est = consensus_probability(RoundConfig(fld, ch, seed=42), 5000)
        pred = majority_probability(link_success_probabilities(fld, ch))
        print(f"  beta {beta:5.0f} dB: one round got {out.accepted_votes} votes; consensus rate "
              f"{est.mean:.4f} (exact majority prediction {pred:.4f})")

    sigma = sigma_from_lq(10.0)
    reg = registry_from_field(fld, 3.0, sigma, threshold_for_pfa(0.1, sigma))
    ch = ChannelParams(beta_dl=-10.0, beta_ul=-10.0)
    rep = attack_impact_report(RoundConfig(fld, ch, reg, n_eves=5, seed=3), 3000)
    print("\nfive impersonators, beta = -10 dB, LQ = 10 dB, P_fa = 0.1")
    print(f"  consensus with authentication    {rep.consensus_auth_on.mean:.4f}")
    print(f"  consensus without authentication {rep.consensus_auth_off.mean:.4f}")
    print(f"  forged votes accepted            {rep.spoof_acceptance_rate.mean:.4f} "
          f"(without authentication {rep.spoof_acceptance_rate_auth_off.mean:.0f})")
    print(f"  legitimate votes rejected        {rep.legitimate_rejection_rate.mean:.4f}")
    print("  without authentication the forged votes fill in for jammed followers, so the")
    print("  higher consensus rate there is an agreement the attackers helped to reach")


if __name__ == "__main__":
    main()
