"""Covering deviation against block size on the leaky channel.

Run from the repository root::

    python3 demos/covering_demo.py

For a single sender the averaged eavesdropper state over a block of ``K``
iid codewords approaches the true marginal like ``K^(-1/2)``.  The table
shows the mean trace-norm deviation over 200 random blocks.
"""

import math

from privmac import example_channel
from privmac.channel import build_control_state
from privmac.mc import covering_experiment
from privmac.regions import ToleranceConfig, imax_term

f = example_channel("leaky_mac")
cs = build_control_state(f.channel, f.p_x, f.p_y)
tol = ToleranceConfig(delta=0.01, eps_prime=0.005)

need = imax_term(cs, "X", "E", tol.delta_prime) - math.log2(tol.delta) + 2
print(f"I_max(X:E) threshold asks for log2 K >= {need:.2f}, i.e. K = {2 ** math.ceil(need)}")
print(f"{'K':>6} {'mean':>10} {'stderr':>10} {'sqrt(K)*mean':>13}")
for k in (4, 16, 64, 256, 1024, 4096):
    rep = covering_experiment(cs, {"X": k}, tol, trials=200, seed=1)
    print(f"{k:6d} {rep.mean_deviation:10.5f} {rep.stderr:10.5f} "
          f"{math.sqrt(k) * rep.mean_deviation:13.4f}")
print(f"bound for one sender: delta = {tol.delta}")
