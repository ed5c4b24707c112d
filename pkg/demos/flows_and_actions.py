"""Three deterministic evolutions on one loading, and the actions that vanish on them."""
import numpy as np

from ldflows import (SampledCurve, action_J_alpha_beta, action_J_Q, action_J_RI, make_builtin, solve_generalized_flow,
                     solve_quadratic_flow, solve_rate_independent)

# a spring dragged at unit speed: E = (x - t)^2 / 2
L = make_builtin("quadratic_loading", speed=1.0, x_min=-2.0, x_max=2.0)

# sinh flow for a few (alpha, beta); the product alpha * beta = 1 keeps the small-force slope fixed
for alpha, beta in [(1.0, 1.0), (10.0, 0.1), (0.1, 10.0)]:
    sol = solve_generalized_flow(L, alpha, beta, 0.0, 1.0)
    print(f"sinh flow alpha={alpha:<5} beta={beta:<5} x(1)={sol.x[-1]:+.6f}  "
          f"J={action_J_alpha_beta(sol, L, alpha, beta).total:.1e}")

quad = solve_quadratic_flow(L, 1.0, 0.0, 1.0)
print(f"quadratic flow omega=1      x(1)={quad.x[-1]:+.6f}  J_Q={action_J_Q(quad, L, 1.0).total:.1e}")

# the play operator: stick until the force reaches A, then slide with the loading
bv = solve_rate_independent(L, 0.5, 0.0, 1.0)
stick_end = bv.t[np.argmax(bv.x > 1e-12)]
print(f"play operator A=0.5         x(1)={bv.x[-1]:+.6f}  sticks until t~{stick_end:.3f}  "
      f"J_RI={action_J_RI(bv, L, 0.5).total:.1e}")

# any other curve pays a positive price
t = np.linspace(0.0, 1.0, 1001)
lazy = SampledCurve(t, 0.5 * t)
print(f"half-speed line             J={action_J_alpha_beta(lazy, L, 1.0, 1.0).total:.4f}  "
      f"J_Q={action_J_Q(lazy, L, 1.0).total:.4f}")
