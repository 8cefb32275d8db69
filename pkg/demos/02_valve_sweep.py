"""
Sweeping both valves
====================

Grid over u1, u2 in {0.1, ..., 1.0}.  Opening either valve raises the total
flow, while the consumer whose valve stays put loses flow.  The table is
printed as text; pipe the CSV to a plotting tool for a picture.
"""

import numpy as np

import dhtree

net = dhtree.two_consumer_network()
spec = dhtree.SweepSpec(net, {1: (0.1, 1.0, 0.1), 2: (0.1, 1.0, 0.1)},
                        quantities=("total", "per-consumer"))
table = dhtree.run_sweep(spec)

u = np.array(sorted(set(table.column("u_1"))))
total = np.array(table.column("total")).reshape(len(u), len(u))
q2 = np.array(table.column("q_2")).reshape(len(u), len(u))

np.set_printoptions(precision=3, suppress=True, linewidth=120)
print("total flow (rows u1, columns u2)")
print(total)
print("q2 (rows u1, columns u2)")
print(q2)

# row-wise and column-wise differences are all positive for the total...
print("smallest step in u1:", np.diff(total, axis=0).min())
print("smallest step in u2:", np.diff(total, axis=1).min())
# ...and all negative for q2 along u1
print("largest change of q2 along u1:", np.diff(q2, axis=0).max())

# q1 is what remains of the total
q1 = np.array(table.column("q_1")).reshape(len(u), len(u))
print("max |q1 - (total - q2)|:", np.abs(q1 - (total - q2)).max())

# the first few CSV lines
print("\n".join(table.to_csv().splitlines()[:4]))
