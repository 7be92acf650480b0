"""Ring systems: finite planar point sets invariant under a dihedral group.

A ring system of type (a, b, c) for D_n consists of

  * a in {0, 1} points at the origin ("center"),
  * b regular n-gons centered at the origin, each with phase 0 or pi/n,
  * c "semiregular" 2n-gons: orbits of a point at angle mu with
    0 < mu < pi/n, i.e. vertices at angles +-mu + 2*pi*j/n.

The group acts with r = rotation by 2*pi/n and s = reflection across the
x-axis (`dihedral.planar_action`); every admissible ring is invariant under
both.  Points carry masses (or vorticities), constant along each ring but
otherwise arbitrary nonzero reals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dihedral import DihedralElement, full_group, planar_action

#: matching tolerance for the permutation action, relative to the largest radius
MATCH_RTOL = 1e-9


@dataclass(frozen=True)
class RingSpec:
    """One ring: kind in {"center", "regular", "semiregular"}.

    phase applies to regular rings (0.0 or pi/n); half_gap is the angle mu
    of semiregular rings.  mass is per point and must be nonzero.
    """

    kind: str
    mass: float
    radius: float = 0.0
    phase: float = 0.0
    half_gap: float = 0.0

    def __post_init__(self):
        if self.kind not in ("center", "regular", "semiregular"):
            raise ValueError("unknown ring kind %r" % (self.kind,))


def center(mass: float) -> RingSpec:
    return RingSpec("center", mass)


def regular(radius: float, mass: float, phase: float = 0.0) -> RingSpec:
    return RingSpec("regular", mass, radius=radius, phase=phase)


def semiregular(radius: float, half_gap: float, mass: float) -> RingSpec:
    return RingSpec("semiregular", mass, radius=radius, half_gap=half_gap)


@dataclass
class RingSystem:
    """A built ring system: positions, masses, and the group action on labels."""

    n: int
    rings: list[RingSpec]
    positions: np.ndarray          # (N, 2)
    masses: np.ndarray             # (N,)
    orbit_of: np.ndarray           # (N,) ring index per point
    orbit_slices: list[slice] = field(default_factory=list)

    @property
    def npoints(self) -> int:
        return self.positions.shape[0]

    @property
    def type_abc(self) -> tuple[int, int, int]:
        a = sum(1 for r in self.rings if r.kind == "center")
        b = sum(1 for r in self.rings if r.kind == "regular")
        c = sum(1 for r in self.rings if r.kind == "semiregular")
        return a, b, c

    @property
    def config_vector(self) -> np.ndarray:
        """Flattened positions (x_1, y_1, ..., x_N, y_N)."""
        return self.positions.reshape(-1).copy()

    @property
    def mass_diag(self) -> np.ndarray:
        """Diagonal of M = diag(m_1, m_1, ..., m_N, m_N), length 2N."""
        return np.repeat(self.masses, 2)

    def orbit_points(self, i: int) -> np.ndarray:
        return self.positions[self.orbit_slices[i]]

    def group(self) -> list[DihedralElement]:
        return full_group(self.n)

    def group_permutation(self, g: DihedralElement) -> np.ndarray:
        """Permutation pi with positions[pi[i]] = planar_action(g) @ positions[i]."""
        if g.n != self.n:
            raise ValueError("group order mismatch: element of D_%d on a D_%d system"
                             % (g.n, self.n))
        act = planar_action(g)
        moved = self.positions @ act.T
        scale = max(np.max(np.abs(self.positions)), 1.0)
        perm = np.full(self.npoints, -1, dtype=int)
        for i, q in enumerate(moved):
            d = np.linalg.norm(self.positions - q, axis=1)
            j = int(np.argmin(d))
            if d[j] > MATCH_RTOL * scale:
                raise ValueError("system not D_n-symmetric: point %d leaves the set under %r"
                                 % (i, g))
            perm[i] = j
        if len(set(perm.tolist())) != self.npoints:
            raise ValueError("system not D_n-symmetric: action is not a permutation")
        return perm

    def sigma_matrix(self, g: DihedralElement) -> np.ndarray:
        """2N x 2N matrix of g acting on displacement fields.

        (sigma(g) w)_i = g . w_{g^{-1}(i)}: block (pi[i], i) is the planar
        action of g, where pi is the point permutation of g.
        """
        perm = self.group_permutation(g)
        act = planar_action(g)
        out = np.zeros((2 * self.npoints, 2 * self.npoints))
        for i in range(self.npoints):
            j = perm[i]
            out[2 * j:2 * j + 2, 2 * i:2 * i + 2] = act
        return out


def ring_positions(n: int, spec: RingSpec) -> np.ndarray:
    """Points of one ring in deterministic order.

    Regular rings: angles phase + 2*pi*j/n, j ascending.  Semiregular rings:
    pairs (+mu, -mu) shifted by 2*pi*j/n, j ascending.  The first listed
    point of each ring is the seed used for basis construction.
    """
    if spec.kind == "center":
        return np.zeros((1, 2))
    if spec.radius <= 0.0:
        raise ValueError("invalid radius %g for %s ring" % (spec.radius, spec.kind))
    base = 2.0 * np.pi * np.arange(n) / n
    if spec.kind == "regular":
        if not (abs(spec.phase) < 1e-12 or abs(spec.phase - np.pi / n) < 1e-12):
            raise ValueError("invalid phase %g: regular rings allow 0 or pi/n" % spec.phase)
        ang = spec.phase + base
    else:
        if not (0.0 < spec.half_gap < np.pi / n):
            raise ValueError("invalid half_gap %g: need 0 < mu < pi/n" % spec.half_gap)
        ang = np.empty(2 * n)
        ang[0::2] = spec.half_gap + base
        ang[1::2] = -spec.half_gap + base
    return spec.radius * np.column_stack([np.cos(ang), np.sin(ang)])


def build(n: int, rings: list[RingSpec]) -> RingSystem:
    """Assemble and validate a ring system for D_n."""
    if n < 2:
        raise ValueError("group order mismatch: need n >= 2")
    if not rings:
        raise ValueError("empty ring list")
    if sum(1 for r in rings if r.kind == "center") > 1:
        raise ValueError("at most one center ring allowed")
    if all(r.kind == "center" for r in rings):
        raise ValueError("need at least one non-center ring")
    chunks, masses, orbit_of, slices = [], [], [], []
    start = 0
    for idx, spec in enumerate(rings):
        if spec.mass == 0.0 or not np.isfinite(spec.mass):
            raise ValueError("invalid mass %g in ring %d" % (spec.mass, idx))
        pts = ring_positions(n, spec)
        chunks.append(pts)
        masses.extend([spec.mass] * len(pts))
        orbit_of.extend([idx] * len(pts))
        slices.append(slice(start, start + len(pts)))
        start += len(pts)
    positions = np.vstack(chunks)
    rmax = max(np.max(np.linalg.norm(positions, axis=1)), 1.0)
    for i in range(len(positions)):
        d = np.linalg.norm(positions[i + 1:] - positions[i], axis=1)
        if d.size and np.min(d) < 1e-9 * rmax:
            j = i + 1 + int(np.argmin(d))
            raise ValueError("collision: points %d and %d coincide" % (i, j))
    return RingSystem(n=n, rings=list(rings), positions=positions,
                      masses=np.asarray(masses, dtype=float),
                      orbit_of=np.asarray(orbit_of, dtype=int),
                      orbit_slices=slices)
