"""
The two-consumer network
========================

One pump feeds a junction that splits into a nearby consumer and a second
junction further down the line.  Every pipe pair has k_supply = k_return = 0.5
and both valves have k = 1, so each edge has a combined coefficient of 1.
"""

import math

import dhtree

net = dhtree.two_consumer_network(pump_pressure=1.0)
print(net)
print("leaves:", dhtree.leaves(net), " single pipe out of the pump:", net.root_series_pipe)

# solve with both valves fully open
sol = dhtree.solve_tree(net, 1.0, {1: 1.0, 2: 1.0})
for v, p in sol.pressure.items():
    print(f"  p[{v}] = {p:.10f}")
for (i, j), q in sol.edge_flow.items():
    print(f"  q[{i}->{j}] = {q:.10f}")

# With unit coefficients the pressures can be eliminated by hand:
#   (q1 + q2)^2 + 2 q1^2 = 1  and  (q1 + q2)^2 + 3 q2^2 = 1
# so q1 = q2 * sqrt(3/2), and q2 follows from a single quadratic.
r = math.sqrt(1.5)
q2 = math.sqrt(1.0 / ((1 + r) ** 2 + 3))
print(f"by hand: q1 = {r * q2:.10f}, q2 = {q2:.10f}")

# the Newton solver works on the full equation set and should agree
other = dhtree.solve_newton(net, 1.0, {1: 1.0, 2: 1.0})
print("newton iterations:", other.diagnostics.outer_iterations)
print("largest difference:",
      max(abs(other.consumer_flow[l] - sol.consumer_flow[l]) for l in sol.consumer_flow))

# residual of every equation at the tree solution
vec, norm = dhtree.residual(net, sol, {1: 1.0, 2: 1.0})
print(f"{vec.size} equations, residual inf-norm {norm:.2e}")

# closing valve 1 halfway sends more water to consumer 2
half = dhtree.solve_tree(net, 1.0, {1: 0.5, 2: 1.0})
print(f"u1 = 0.5: q1 = {half.consumer_flow[1]:.6f}, q2 = {half.consumer_flow[2]:.6f}, "
      f"total = {half.total_consumer_flow:.6f}")
