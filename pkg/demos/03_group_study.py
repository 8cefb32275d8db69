"""
Opening whole branches
======================

The bundled 22-consumer network has three branches (8, 6 and 8 consumers).
Its coefficients are made up, so only the directions of change mean
anything here.
"""

import dhtree
from dhtree.scenarios import group_inflow_edge

nf = dhtree.load_bundled("network22")
net = nf.network
print(nf.metadata["description"])
print({g: list(m) for g, m in nf.groups.items()})

# every valve opens together: the total goes up at every step
t = dhtree.run_group_scenario(
    dhtree.GroupScenario(net, nf.groups, ["group1", "group2", "group3"], 0.3, 1.0, 15))
print(t.to_csv())

# branches 2 and 3 open while branch 1 stays at u = 0.5
t = dhtree.run_group_scenario(
    dhtree.GroupScenario(net, nf.groups, ["group2", "group3"], 0.3, 1.0, 15, fixed_u=0.5))
g1 = t.column("group1")
print("group 1 inflow:", " ".join(f"{x:.4f}" for x in g1))
print("drops at every step:", all(b < a for a, b in zip(g1, g1[1:])))

# the group inflow is also the flow on the pipe feeding the branch
sol = dhtree.solve_tree(net, None, 0.5)
e = group_inflow_edge(net, nf.groups["group1"])
print(f"edge {e.tail}->{e.head}: {sol.edge_flow[(e.tail, e.head)]:.12f}")
print(f"sum of group 1:  {sum(sol.consumer_flow[l] for l in nf.groups['group1']):.12f}")
