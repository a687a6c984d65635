"""Running the protocol and reading the channel noise off the OFF rounds."""

import numpy as np

from twoway_qkd.attack import AttackConfig, as_channel_hook
from twoway_qkd.protocol import ChannelModel, ProtocolConfig, estimate_channel_noise, extract_on_pairs, run_session

config = ProtocolConfig(rounds=200_000, off_probability=0.5, seed=1)

# A plain additive channel first.
t = run_session(config, ChannelModel(forward_noise=0.3, backward_noise=0.2))
est = estimate_channel_noise(t)
x, p = extract_on_pairs(t)
err = np.concatenate([x[:, 1] - x[:, 0], p[:, 1] - p[:, 0]])
print(f"plain channel: {t.n_on} ON / {t.n_off} OFF rounds")
print(f"  estimated forward {est.forward:.4f} backward {est.backward:.4f} (true 0.3, 0.2)")
print(f"  Bob's error variance {err.var(ddof=1):.4f} (expected 1 + 0.5)")

# The attack looks like ordinary noise to the OFF-round estimator.
for w in (0.25, 0.5, 1.0):
    t = run_session(config, ChannelModel(attack=as_channel_hook(AttackConfig(w))))
    est = estimate_channel_noise(t)
    print(f"attack w^2={w}: forward {est.forward:.4f} backward {est.backward:.4f} total {est.total:.4f}")
