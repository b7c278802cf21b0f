"""
Recovery sequences on refining lattices
=======================================

A tent-shaped film with a smooth displacement is sampled on lattices with
2k columns.  The table compares the lattice energy with the continuum
energy; the gap closes as the lattice spacing goes to zero.
"""
from filmlattice.continuum import LATTICE_ELASTIC_PREFACTOR, ContinuumProfile
from filmlattice.discrete import MaterialParams
from filmlattice.fields import TrigField
from filmlattice.harness import recovery_study
from filmlattice.rigidity import RigidMotion

h = ContinuumProfile.tent(1.0, 0.3, 0.35)
u = TrigField(1.0, 0.05, 0.05, 1, 0.25)
dewetting = MaterialParams(1.0, 1.0, 1.0, 0.5)

# the elastic constant of the harmonic lattice is used so the two energies are comparable
rows = recovery_study(h, u, RigidMotion(0.0, (0.0, 0.0)), 0.5, dewetting, [8, 16, 32, 64],
                      0.25, LATTICE_ELASTIC_PREFACTOR, "recovery")
print(f"{'k':>4} {'eps':>8} {'lattice':>9} {'continuum':>9} {'rel gap':>8} {'hausdorff':>9}")
for r in rows:
    print(f"{r['k']:4d} {r['epsilon']:8.4f} {r['e_total']:9.4f} {r['c_total']:9.4f} "
          f"{r['rel_gap']:8.4f} {r['hausdorff']:9.4f}")
