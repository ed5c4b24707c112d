"""From lattice jumps to deterministic and diffusive limits."""
from ldflows import bridge_experiment, lln_experiment, make_builtin, simulate_jump_process

L = make_builtin("quadratic_loading", speed=1.0, x_min=-1.0, x_max=2.0)

path = simulate_jump_process(L, 200, 1.0, 1.0, 0.0, 1.0, seed=1)
print(f"one path at n=200: {path.event_count} jumps, X(1) = {path.end_value():+.4f}")

# law of large numbers: the sup-distance to the sinh flow shrinks like n^(-1/2)
tab = lln_experiment(L, [250, 1000, 4000], 1.0, 1.0, replicas=100, seed=2)
for row in tab.rows:
    ratio = "" if row["ratio"] is None else f"  ratio {row['ratio']:.3f}"
    print(f"n={row['n']:<5} median sup-distance {row['median_sup_distance']:.4f}{ratio}")

# with beta_n = 1/(n h) the noise survives: stationary variance h/2 around the minimum of x^2/2
frozen = make_builtin("quadratic_loading", speed=0.0, x_min=-1.0, x_max=1.0, T=3.0)
tab = bridge_experiment(frozen, [500], 1.0, 1.0, 0.02, replicas=200, seed=3, window=(1.5, 3.0), sde_dt=0.002)
row = tab.rows[0]
print(f"stationary variance: jump process {row['var_window']:.4f}, SDE {row['sde_var_window']:.4f}, "
      f"h/2 = 0.01")
