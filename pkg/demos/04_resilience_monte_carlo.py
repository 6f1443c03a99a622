"""Monte Carlo check of the directional resilience condition.

For each rule and attack we estimate <E F, g> over 4000 trials and
compare it against (1 - sin alpha) * ||g||^2 with a three-standard-error
slack.  Krum passes under every implemented attack; averaging fails as
soon as the omniscient attacker aims at -g, and the medoid fails under
collusion.
"""

import numpy as np

from byzgrad import AttackSpec, RuleSpec, estimate_resilience

n, f, d = 9, 2, 5
g = np.zeros(d)
g[0] = 20.0
direction = np.zeros(d)
direction[0] = -1.0

attacks = {
    "silence": AttackSpec("silence"),
    "sign_flip": AttackSpec("sign_flip", kappa=1.0),
    "collusion": AttackSpec("collusion_medoid", remote_magnitude=1000.0,
                            direction=direction),
    "omniscient(-g)": None,  # needs f = 1, handled below
}

print(f"n={n}, f={f}, d={d}, sigma=1, |g|=20, 4000 trials per cell\n")
print(f"{'rule':>8} {'attack':>15} {'<EF,g>':>10} {'bound':>9} {'cond (i)':>9} {'byz rate':>9}")
for kind in ("krum", "medoid", "average"):
    for name, attack in attacks.items():
        if name == "omniscient(-g)":
            report = estimate_resilience(
                RuleSpec(kind), n=n, f=1, d=d, g=g, sigma=1.0,
                attack=AttackSpec("omniscient_linear", target=-g),
                trials=4000, master_seed=51)
        else:
            report = estimate_resilience(
                RuleSpec(kind), n=n, f=f, d=d, g=g, sigma=1.0, attack=attack,
                trials=4000, master_seed=52)
        rate = ("-" if report.byzantine_selection_rate is None
                else f"{report.byzantine_selection_rate:.2f}")
        print(f"{kind:>8} {name:>15} {report.inner_product:>10.1f} "
              f"{report.bound_i:>9.1f} {str(report.condition_i_holds):>9} {rate:>9}")
    print()

print("byz rate = fraction of trials in which a Byzantine proposal was selected.")
