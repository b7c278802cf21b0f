"""
How rigid is a lattice patch?
=============================

The ratio between the distance of a deformation gradient to one best
rotation and its pointwise distance to rotations measures rigidity.
A rigid motion gives 1; bending a slab through a narrow neck makes the
ratio blow up, because almost all of the misfit is far from the neck.
"""
import numpy as np

from filmlattice.lattice import DiscreteProfile, LatticeSpec, build_region
from filmlattice.rigidity import RigidMotion, rigidity_probe

spec = LatticeSpec(0.02, 30, 0.6)
region = build_region(spec, DiscreteProfile.zeros(30))
x, L = region.positions, spec.length

print("rigid motion:", rigidity_probe(region, RigidMotion(0.7, (1.0, 0.0)).apply(x))["ratio"])

# rotate the right half by 0.2 rad, ramping across a vertical band
centre = np.array([0.5 * L, -0.3])
ang = 0.2 * np.clip((x[:, 0] - 0.45 * L) / (0.1 * L), 0, 1)
d = x - centre
y = centre + np.column_stack([np.cos(ang) * d[:, 0] - np.sin(ang) * d[:, 1],
                              np.sin(ang) * d[:, 0] + np.cos(ang) * d[:, 1]])
for width in (0.5, 0.25, 0.12, 0.06):
    def keep(c, width=width):
        band = np.abs(c[:, 0] - 0.5 * L) < 0.05 * L + 1e-9
        return ~band | (np.abs(c[:, 1] - centre[1]) < width / 2)
    print(f"neck width {width:4.2f}: ratio {rigidity_probe(region, y, subregion=keep)['ratio']:.1f}")
