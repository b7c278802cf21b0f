"""Discrete-to-continuum toolkit for epitaxially strained crystalline films.

Triangular-lattice film/substrate systems with missing-bond surface energy and
harmonic bond elasticity, their continuum counterparts, and the constructions
that connect the two (recovery states, Yosida approximants, volume matching).
"""
from .approx import (lattice_volume_match, recovery_deformation, recovery_profile,
                     volume_rebalance, yosida_transform)
from .continuum import (ELASTIC_PREFACTOR, LATTICE_ELASTIC_PREFACTOR, ContinuumParams,
                        ContinuumProfile, limit_energy, phi, surface_energy_continuum)
from .discrete import (Deformation, EnergyBreakdown, MaterialParams, PotentialSpec,
                       elastic_energy, elastic_gradient, energy, surface_energy)
from .fields import AffineField, MeshField, TrigField, builtin_field
from .hausdorff import hausdorff_distance
from .lattice import DiscreteProfile, LatticeSpec, OccupiedRegion, ProfileError, build_region
from .relax import RelaxOptions, anneal_profile, minimize_elastic
from .rigidity import RigidMotion, dist_so2, fit_rigid_motion, rigidity_probe

__version__ = "0.1.0"
