"""Walk through the rate-region pipeline on the shipped qubit channel.

Run from the repository root::

    python3 demos/region_walkthrough.py

The script prints the asymptotic region, then the one-shot decoding region
for a split of Alice's input, then the covering thresholds that turn it into
a private region.  At desk-scale tolerances the thresholds (about 15 bits
per sender) dwarf the decoding rates, so the private region comes out
empty; the last section shows how far the tolerances must be relaxed before
the decoding region alone becomes nonempty.
"""

import numpy as np

from privmac import example_channel
from privmac.channel import build_control_state
from privmac.regions import (ToleranceConfig, asymptotic_region, decode_region_3, ih_term,
                             private_region_theta, project_to_2d, secrecy_thresholds)
from privmac.split import split_control_state


def show(title, region):
    print(f"{title}:")
    if region.is_empty():
        print("    (empty)")
    for v in region.vertices:
        print(f"    ({v[0]:.4f}, {v[1]:.4f})")


f = example_channel("qubit_mac")
cs = build_control_state(f.channel, f.p_x, f.p_y)

# 1. many channel uses: I(X:YC) etc. minus what E learns
asym = asymptotic_region(cs)
for k, v in asym.terms.items():
    print(f"I({k}) = {v:.4f}")
show("asymptotic private region", asym.difference)

# 2. one shot, with Alice's input split as X = max(U, V)
tol = ToleranceConfig()
theta = 0.5
split = split_control_state(cs, theta)
r3 = decode_region_3(split, tol.eps)
print(f"\nsplit at theta={theta}: U ~ {split.split.p_u}, V ~ {split.split.p_v}")
for k, v in r3.terms.items():
    print(f"I_H^{tol.eps}({k}) = {v:.4f}")
decode = project_to_2d(r3)
show("decoding region", decode)

# 3. covering thresholds and the private region
t = secrecy_thresholds(split, tol)
print(f"\nlog2 block sizes: K1={t.log_k1:.2f} K2={t.log_k2:.2f} K3={t.log_k3:.2f}")
show("private region", private_region_theta(decode, t, tol))

# 4. how large must eps be before decoding alone leaves room?
for eps in (0.05, 0.3, 0.6, 0.8, 0.9):
    s = project_to_2d(decode_region_3(split, eps))
    best = max((v.sum() for v in s.vertices), default=float("nan"))
    print(f"eps={eps:.2f}: sum-rate term {ih_term(cs, 'XY', 'C', eps):.3f}, "
          f"best R1+R2 in decoding region {best:.3f}")
print("\nvertices of the eps=0.9 decoding region:", np.round(s.vertices, 3).tolist())
