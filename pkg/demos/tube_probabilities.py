"""How unlikely is it to follow a curve that is not the flow?"""
from ldflows import ldp_tube_experiment, make_builtin, shifted_reference

L = make_builtin("quadratic_loading", speed=1.0, x_min=-1.5, x_max=3.0)
alpha, beta, r = 0.2, 1.0, 0.3

# the flow drifted by 2r at the final time: typical paths leave this tube
ref = shifted_reference(L, alpha, beta, 0.0, 1.0, 2 * r)
tab = ldp_tube_experiment(L, [10, 20, 40], alpha, beta, ref, r, replicas=50_000, seed=4)
print(f"cheapest admissible tube curve: J = {tab.rows[0]['action_bound']:.4f} {tab.meta['candidate_actions']}")
for row in tab.rows:
    if row["low_statistics"]:
        print(f"n={row['n']:<3} stays {row['stays']:<6} too few to estimate a rate")
    else:
        print(f"n={row['n']:<3} stays {row['stays']:<6} -(1/n) log p = {row['rate']:.4f}  "
              f"ratio to bound {row['ratio_to_bound']:.2f}")
# the rates approach the bound from above: the polynomial prefactor of p_n decays slowly in n
