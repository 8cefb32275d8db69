"""
Randomized monotonicity check
=============================

Random trees with one pipe out of the pump, random coefficients in
[0.1, 10] and random valve settings.  Each case compares a base setting with
one where some valves are opened further (and sometimes the pump pressure is
raised).
"""

import numpy as np

import dhtree

net = dhtree.generate_random_network(seed=42, vertex_count_range=(5, 50))
print(net, "depth", max(net.depth.values()))

rng = np.random.default_rng(0)
u_lo = {l: float(rng.uniform(0.2, 0.8)) for l in net.leaves()}
opened = net.leaves()[: len(u_lo) // 2]
u_hi = {l: (u_lo[l] + 0.1 if l in opened else u_lo[l]) for l in net.leaves()}

out = dhtree.check_monotone_case(net, net.pump_pressure, u_lo, net.pump_pressure, u_hi)
print("checks:", out.checks)
print(f"total flow {out.total_lo:.6f} -> {out.total_hi:.6f}")
print("passed:", out.passed)

# the same thing 200 times over
rep = dhtree.run_property_campaign(dhtree.PropertyCampaignSpec(seed=7, cases=200))
print(rep.summary())
sizes = [c["vertices"] for c in rep.cases]
print(f"network sizes {min(sizes)}..{max(sizes)}, "
      f"{sum('unchanged_valves_lose_flow' in c['checks'] for c in rep.cases)} cases "
      "checked fixed valves")
