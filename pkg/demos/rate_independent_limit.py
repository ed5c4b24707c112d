"""Recovery sequences: smooth flows that approach a jumping hysteresis solution."""
from ldflows import (action_J_RI, cosh_family, make_builtin, mosco_ri_experiment, reparametrize,
                     solve_rate_independent)

# a tilted double well: the state jumps from the left to the right well once the tilt is large enough
L = make_builtin("double_well_loading", stiffness=0.5, tilt0=-0.2, tilt_rate=0.8)
A = 0.2
bv = solve_rate_independent(L, A, -1.0, 1.0)
for j in bv.jumps:
    print(f"jump at t={j.time:.4f} from {j.x_left:+.4f} to {j.x_right:+.4f}")
print(f"J_RI of the solver output: {action_J_RI(bv, L, A).total:.2e}")

pc = reparametrize(bv, L, A)
print(f"arclength-like parameter runs over [0, {pc.S:.4f}]")

# J_beta along the recovery sequence decreases to J_RI as beta grows (alpha = exp(-beta A))
tab = mosco_ri_experiment(L, bv, cosh_family(1.0, threshold=A), [10.0, 100.0, 1000.0])
for row in tab.rows:
    print(f"beta={row['beta']:<7g} J_beta={row['value']:.5f}  gap={row['gap']:.2e}")
