"""Monte Carlo of the cloning attack, compared against the closed forms.

The empirical gap between Bob's and Eve's information changes sign close to
the analytic threshold.
"""

import numpy as np

from twoway_qkd.attack import AttackConfig, Strategy, as_channel_hook
from twoway_qkd.core_math import empirical_mi
from twoway_qkd.protocol import ChannelModel, ProtocolConfig, extract_eve_pairs, extract_on_pairs, run_session
from twoway_qkd.security import mutual_informations, sigma_B_sq, sigma_E_sq, threshold_closed_form


def run(omega_sq, strategy=Strategy.BS_COMBINE, rounds=400_000, seed=7):
    cfg = ProtocolConfig(rounds=rounds, off_probability=0.0, seed=seed)
    return run_session(cfg, ChannelModel(attack=as_channel_hook(AttackConfig(omega_sq, strategy=strategy))))


def pooled_error_var(pairs):
    x, p = pairs
    return np.var(np.concatenate([x[:, 1] - x[:, 0], p[:, 1] - p[:, 0]]), ddof=1)


print("w^2    Bob var (MC / exact)   Eve var (MC / exact)")
for w in (0.25, 0.5, 0.809, 1.5):
    t = run(w)
    print(f"{w:<6} {pooled_error_var(extract_on_pairs(t)):.4f} / {sigma_B_sq(w):.4f}"
          f"      {pooled_error_var(extract_eve_pairs(t)):.4f} / {sigma_E_sq(w):.4f}")

# Heterodyning the two clones separately and subtracting gives the same error here.
t = run(0.5, Strategy.DIRECT_HETERODYNE)
print(f"\ndirect heterodyne at w^2=0.5: Eve var {pooled_error_var(extract_eve_pairs(t)):.4f}")

print(f"\nanalytic crossing at w^2 = {threshold_closed_form()[1]:.5f}")
for w in np.linspace(0.77, 0.85, 5):
    t = run(w, seed=11)
    (xb, pb), (xe, pe) = extract_on_pairs(t), extract_eve_pairs(t)
    gap = empirical_mi(xb, 100.0) + empirical_mi(pb, 100.0) - empirical_mi(xe, 100.0) - empirical_mi(pe, 100.0)
    i_ab, i_ae = mutual_informations(100.0, w)
    print(f"w^2={w:.3f} empirical gap {gap:+.4f}  exact {i_ab - i_ae:+.4f}")
