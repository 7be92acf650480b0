"""Dihedral group D_n: elements, composition, and its real irreducible representations.

Elements are written r^j s^k with r the rotation by 2*pi/n, s a reflection,
j in {0..n-1}, k in {0,1}.  The composition law is

    (r^j s^k) (r^j' s^k') = r^(j + (-1)^k j') s^(k xor k').

Every real irreducible representation of D_n is carried here in a fixed
orthogonal realization:

    tau   : trivial, degree 1
    alpha : sign of the reflection part, degree 1
    phi   : (-1)^j on r^j and on r^j s            (n even only)
    psi   : (-1)^j on r^j, (-1)^(j+1) on r^j s    (n even only)
    rho_k : degree 2, rotation/reflection form, k = 1 .. (n-1)//2,
            and for even n only up to n/2 - 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DihedralElement:
    """One element r^rot s^ref of D_n."""

    n: int
    rot: int
    ref: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("group order mismatch: need n >= 2")
        object.__setattr__(self, "rot", self.rot % self.n)
        object.__setattr__(self, "ref", self.ref % 2)

    def __mul__(self, other: "DihedralElement") -> "DihedralElement":
        if self.n != other.n:
            raise ValueError("group order mismatch: cannot compose D_%d with D_%d"
                             % (self.n, other.n))
        sign = -1 if self.ref else 1
        return DihedralElement(self.n, self.rot + sign * other.rot, self.ref ^ other.ref)

    def inverse(self) -> "DihedralElement":
        if self.ref:
            # reflections are involutions
            return self
        return DihedralElement(self.n, -self.rot, 0)

    @property
    def is_identity(self) -> bool:
        return self.rot == 0 and self.ref == 0

    def __repr__(self):
        if self.is_identity:
            return "e(D_%d)" % self.n
        head = "r^%d" % self.rot if self.rot else ""
        tail = "s" if self.ref else ""
        return "%s%s(D_%d)" % (head, tail, self.n)


def identity(n: int) -> DihedralElement:
    return DihedralElement(n, 0, 0)


def rotation(n: int, j: int = 1) -> DihedralElement:
    return DihedralElement(n, j, 0)


def reflection(n: int, j: int = 0) -> DihedralElement:
    """The reflection r^j s."""
    return DihedralElement(n, j, 1)


def full_group(n: int) -> list[DihedralElement]:
    """All 2n elements, rotations first, each family in ascending rotation order."""
    return [DihedralElement(n, j, k) for k in (0, 1) for j in range(n)]


def compose(g: DihedralElement, h: DihedralElement) -> DihedralElement:
    return g * h


def inverse(g: DihedralElement) -> DihedralElement:
    return g.inverse()


def standard_rep(g: DihedralElement) -> np.ndarray:
    """2x2 matrix of g in the standard planar representation.

    sigma(r) is the rotation by 2*pi/n and sigma(s) = [[-1, 0], [0, 1]].
    This is the realization with s reflecting across the vertical axis; the
    geometric action used for ring systems is the conjugate realization
    rho_1 (reflection across the horizontal axis), see `planar_action`.
    """
    theta = 2.0 * np.pi * g.rot / g.n
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    if g.ref:
        return rot @ np.array([[-1.0, 0.0], [0.0, 1.0]])
    return rot


def planar_action(g: DihedralElement) -> np.ndarray:
    """2x2 matrix of g acting on the plane with s = reflection across the x-axis.

    Coincides with irrep_matrix(rho_1, g) for every n; this is the
    realization under which the admissible ring systems are invariant.
    """
    theta = 2.0 * np.pi * g.rot / g.n
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    if g.ref:
        return rot @ np.array([[1.0, 0.0], [0.0, -1.0]])
    return rot


@dataclass(frozen=True)
class IrrepLabel:
    """Label of a real irreducible representation of D_n.

    kind is one of "tau", "alpha", "phi", "psi", "rho"; k is meaningful for
    kind == "rho" only.
    """

    kind: str
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("tau", "alpha", "phi", "psi", "rho"):
            raise ValueError("unknown irrep kind %r" % (self.kind,))
        if self.kind == "rho" and self.k < 1:
            raise ValueError("rho label needs k >= 1")

    @property
    def degree(self) -> int:
        return 2 if self.kind == "rho" else 1

    def __repr__(self):
        if self.kind == "rho":
            return "rho_%d" % self.k
        return self.kind


TAU = IrrepLabel("tau")
ALPHA = IrrepLabel("alpha")
PHI = IrrepLabel("phi")
PSI = IrrepLabel("psi")


def rho(k: int) -> IrrepLabel:
    return IrrepLabel("rho", k)


def irrep_list(n: int) -> list[IrrepLabel]:
    """All real irreps of D_n: sum of squared degrees equals 2n.

    For n > 2 the standard representation is rho_1; for n = 2 there are no
    two-dimensional irreps and the standard representation splits as
    phi + psi.
    """
    if n < 2:
        raise ValueError("group order mismatch: need n >= 2")
    labels = [TAU, ALPHA]
    if n % 2 == 0:
        labels += [PHI, PSI]
    t = (n // 2 - 1) if n % 2 == 0 else (n - 1) // 2
    labels += [rho(k) for k in range(1, t + 1)]
    return labels


def is_standard(label: IrrepLabel, n: int) -> bool:
    """True when label realizes the planar action (rho_1, n > 2)."""
    return label.kind == "rho" and label.k == 1 and n > 2


def irrep_matrix(label: IrrepLabel, g: DihedralElement) -> np.ndarray:
    """Matrix (1x1 or 2x2) of g in the fixed orthogonal realization of the irrep."""
    n, j = g.n, g.rot
    if label.kind in ("phi", "psi") and n % 2:
        raise ValueError("irrep %r requires even group order, got n=%d" % (label, n))
    if label.kind == "rho":
        t = (n // 2 - 1) if n % 2 == 0 else (n - 1) // 2
        if not (n > 2 and 1 <= label.k <= t):
            raise ValueError("irrep %r not defined for D_%d" % (label, n))
    if label.kind == "tau":
        return np.array([[1.0]])
    if label.kind == "alpha":
        return np.array([[-1.0 if g.ref else 1.0]])
    if label.kind == "phi":
        return np.array([[(-1.0) ** j]])
    if label.kind == "psi":
        return np.array([[(-1.0) ** (j + g.ref)]])
    theta = 2.0 * np.pi * label.k * j / n
    c, s = np.cos(theta), np.sin(theta)
    if g.ref:
        return np.array([[c, s], [s, -c]])
    return np.array([[c, -s], [s, c]])
