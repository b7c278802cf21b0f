"""Distance to rotations, the three-edge comparison potential, rigid fits.

All 2x2 polar decompositions are closed form: for F = [[a, b], [c, d]] the
rotation maximising tr(R^T F) has angle atan2(c - b, a + d), and
``dist(F, lam SO(2))^2 = |F|^2 - 2 lam |(a + d, c - b)| + 2 lam^2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .discrete import Deformation, MaterialParams, cell_energy, positions_of, triangle_gradients
from .lattice import SQRT3, LatticeSpec, OccupiedRegion

EDGE_E = np.array([1.0, 0.0])
EDGE_V = np.array([0.5, SQRT3 / 2])


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class RigidMotion:
    theta: float = 0.0
    translation: tuple = (0.0, 0.0)
    residual: float = float("nan")

    @property
    def matrix(self) -> np.ndarray:
        return rotation(self.theta)

    @property
    def b(self) -> np.ndarray:
        return np.asarray(self.translation, dtype=float)

    def apply(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.matrix.T + self.b


def _polar_terms(F):
    F = np.asarray(F, dtype=float)
    a, b = F[..., 0, 0], F[..., 0, 1]
    c, d = F[..., 1, 0], F[..., 1, 1]
    return F, a + d, c - b


def dist2_rotations(F, lam=1.0):
    """Squared Frobenius distance of F to lam * SO(2) (vectorised)."""
    # evaluated as |F - lam R|^2 at the optimal R to avoid cancellation near SO(2)
    F, p, q = _polar_terms(F)
    theta = np.arctan2(q, p)
    c, s = np.cos(theta), np.sin(theta)
    lam = np.asarray(lam, dtype=float)
    return ((F[..., 0, 0] - lam * c) ** 2 + (F[..., 0, 1] + lam * s) ** 2
            + (F[..., 1, 0] - lam * s) ** 2 + (F[..., 1, 1] - lam * c) ** 2)


def dist_so2(F) -> tuple[float, np.ndarray | None]:
    """Distance of F to SO(2) and, when det F > 0, the nearest rotation."""
    F, p, q = _polar_terms(F)
    if F.shape != (2, 2):
        raise ValueError("dist_so2 takes a single 2x2 matrix")
    dist = float(np.sqrt(dist2_rotations(F)))
    if np.linalg.det(F) > 0:
        return dist, rotation(np.arctan2(q, p))
    return dist, None


def nearest_rotation_angle(F) -> float:
    _, p, q = _polar_terms(F)
    if np.hypot(p, q) == 0:
        raise ValueError("nearest rotation is not unique")
    return float(np.arctan2(q, p))


def w_lambda(F, lam: float):
    """Sum of squared stretch residuals of the three unit triangle edges; +inf if det F < 0."""
    F = np.asarray(F, dtype=float)
    Fe = F @ EDGE_E
    Fv = F @ EDGE_V
    out = ((np.linalg.norm(Fe, axis=-1) - lam) ** 2 + (np.linalg.norm(Fv, axis=-1) - lam) ** 2
           + (np.linalg.norm(Fv - Fe, axis=-1) - lam) ** 2)
    out = np.where(np.linalg.det(F) < 0, np.inf, out)
    return float(out) if out.ndim == 0 else out


def fit_rigid_motion(sites, values) -> RigidMotion:
    """Least-squares proper rigid motion values ~ R sites + b (never a reflection)."""
    x = np.asarray(sites, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape or x.ndim != 2 or x.shape[1] != 2:
        raise ValueError("sites and values must both have shape (N, 2)")
    if len(np.unique(x, axis=0)) < 2:
        raise ValueError("need at least two distinct sites to fit a rigid motion")
    xc, yc = x.mean(axis=0), y.mean(axis=0)
    X, Y = x - xc, y - yc
    dot = np.sum(X * Y)
    cross = np.sum(X[:, 0] * Y[:, 1] - X[:, 1] * Y[:, 0])
    theta = float(np.arctan2(cross, dot))
    R = rotation(theta)
    b = yc - R @ xc
    residual = float(np.sum((y - (x @ R.T + b)) ** 2))
    return RigidMotion(theta, (float(b[0]), float(b[1])), residual)


@dataclass(frozen=True, eq=False)
class Displacement:
    values: np.ndarray
    frame: RigidMotion
    scale: float

    def reconstruct(self, reference_positions) -> np.ndarray:
        return self.frame.apply(reference_positions) + self.scale * self.values


def extract_displacement(region: OccupiedRegion, y, frame: RigidMotion,
                         spec: LatticeSpec | None = None) -> Displacement:
    y = positions_of(region, y)
    scale = float(np.sqrt(region.spec.epsilon))
    u = (y - frame.apply(region.positions)) / scale
    return Displacement(u, frame, scale)


# ------------------------------------------------------------------ probes

def _subregion_mask(centroids: np.ndarray, subregion) -> np.ndarray:
    if subregion is None:
        return np.ones(len(centroids), dtype=bool)
    if callable(subregion):
        return np.asarray(subregion(centroids), dtype=bool)
    x0, x1, y0, y1 = subregion
    c = centroids
    return (c[:, 0] >= x0) & (c[:, 0] <= x1) & (c[:, 1] >= y0) & (c[:, 1] <= y1)


def rigidity_probe(region: OccupiedRegion, y, spec: LatticeSpec | None = None,
                   mat: MaterialParams | None = None,
                   subregion: tuple | Callable | None = None) -> dict:
    """Empirical rigidity constant of a deformation on a set of triangles.

    Reports ``int |grad y - R|^2 / int dist^2(grad y, SO(2))`` with R the best
    single rotation; both integrals use the piecewise-constant gradient.
    Seam triangles are skipped.  The ratio is 1 by convention when both vanish.
    """
    if isinstance(y, Deformation):
        y = y.positions
    mask = _subregion_mask(region.centroids(), subregion) & ~region.triangle_wrap
    if not np.any(mask):
        raise ValueError("the subregion contains no triangles")
    F = triangle_gradients(region, y)[mask]
    area = SQRT3 / 4 * region.spec.epsilon ** 2
    dist_int = float(np.sum(dist2_rotations(F)) * area)
    M = F.sum(axis=0)
    _, p, q = _polar_terms(M)
    theta = float(np.arctan2(q, p)) if np.hypot(p, q) > 0 else 0.0
    R = rotation(theta)
    rigid_int = float(np.sum((F - R) ** 2) * area)
    scale = max(1.0, float(np.sum(F * F) * area))
    if dist_int <= 1e-28 * scale and rigid_int <= 1e-24 * scale:
        ratio = 1.0
    elif dist_int == 0:
        ratio = float("inf")
    else:
        ratio = rigid_int / dist_int
    return {"ratio": ratio, "fitted_constant": ratio, "dist_integral": dist_int,
            "rigid_integral": rigid_int, "theta": theta, "triangle_count": int(mask.sum())}


def sample_matrices(n: int, rng: np.random.Generator, norm_max: float = 3.0) -> np.ndarray:
    """Uniform samples of 2x2 matrices with |F| <= norm_max and det F >= 0."""
    out = np.empty((0, 2, 2))
    while len(out) < n:
        m = 2 * (n - len(out)) + 16
        g = rng.standard_normal((m, 4))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        g *= norm_max * rng.random((m, 1)) ** 0.25
        F = g.reshape(m, 2, 2)
        out = np.concatenate([out, F[np.linalg.det(F) >= 0]])
    return out[:n]


def lemma_distance_probe(n_samples: int = 100_000, seed: int = 0,
                         lam_range=(0.9, 1.1), norm_max: float = 3.0) -> dict:
    """sup dist^2(F, lam SO(2)) / w_lambda(F, lam) over random orientation-preserving F."""
    rng = np.random.default_rng(seed)
    F = sample_matrices(n_samples, rng, norm_max)
    lam = rng.uniform(*lam_range, size=n_samples)
    num = dist2_rotations(F, lam)
    den = w_lambda(F, lam)
    ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, 0.0))
    return {"sup_ratio": float(np.max(ratio)), "fitted_constant": float(np.max(ratio)),
            "sample_count": int(n_samples), "seed": int(seed)}


def cell_bound_probe(n_samples: int = 100_000, seed: int = 0, epsilon: float = 0.01,
                     lam_range=(0.9, 1.1), norm_max: float = 3.0,
                     mat: MaterialParams | None = None) -> dict:
    """Largest c with cell_energy(F) >= c (dist^2(F, SO(2)) - eps) over random F.

    Film triangles use a random lam in ``lam_range``; eps should satisfy
    (lam - 1)^2 <= eps, which holds for the defaults.
    """
    mat = mat or MaterialParams(1.0, 1.0, 1.0, 1.0)
    rng = np.random.default_rng(seed)
    F = sample_matrices(n_samples, rng, norm_max)
    lam = rng.uniform(*lam_range, size=n_samples)
    half = n_samples // 2
    spec_lengths = np.linalg.norm(F @ np.array([[0.0, 1.0], [SQRT3 / 2, 0.5],
                                                [SQRT3 / 2, -0.5]]).T, axis=-2)
    rest = np.where(np.arange(n_samples) < half, lam, 1.0)[:, None]
    K = np.where(np.arange(n_samples) < half, mat.K_f, mat.K_s)
    cell = 0.5 * K * np.sum((spec_lengths - rest) ** 2, axis=-1)
    gap = dist2_rotations(F) - epsilon
    active = gap > 0
    c = float(np.min(cell[active] / gap[active])) if np.any(active) else float("inf")
    return {"fitted_constant": c, "sample_count": int(n_samples), "seed": int(seed),
            "active_count": int(active.sum()), "epsilon": float(epsilon)}


def check_cell_energy_consistency(F, spec: LatticeSpec, mat: MaterialParams) -> float:
    """cell_energy of a substrate triangle minus K_s/2 * w_lambda in the lattice frame."""
    R90 = rotation(np.pi / 2)
    return cell_energy(F, "substrate", spec, mat) - 0.5 * mat.K_s * w_lambda(F @ R90, 1.0)
