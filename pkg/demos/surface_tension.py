"""
Surface tension of the triangular lattice
=========================================

Cut the lattice along a straight line and count the bonds that cross it.
Per unit length the count converges to the anisotropic surface tension.
Boundaries along close-packed rows are the cheapest.
"""
import numpy as np

from filmlattice.continuum import phi
from filmlattice.harness import surface_oracle

# lattice lines are exact: the count per period equals the tension
for normal in [(0, 1), (1, 0), (-1, np.sqrt(3))]:
    row = surface_oracle(normal, [1.0], min_length=100.0)[0]
    print(f"normal {np.round(normal, 3)}  bonds/length {row['density']:.6f}  phi {row['phi']:.6f}")

# an irrational direction is approximated by a long rational staircase
row = surface_oracle((1.0, 1.0), [1.0], min_length=1e4, max_period=10_000)[0]
print(f"(1, 1) staircase period ({row['period_p']}, {row['period_q']})  rel error {row['rel_error']:.1e}")

# the Wulff shape is the unit ball of the dual norm; sample phi on the circle
angles = np.linspace(0, np.pi / 3, 7)
print("phi over one sixth of the circle:")
print(np.round(phi(np.column_stack([np.cos(angles), np.sin(angles)])), 4))
