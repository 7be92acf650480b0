"""Interaction potentials, their derivatives, and relative equilibria.

Two families of pairwise interactions on N planar bodies with weights m_i:

  * homogeneous: U_gamma(q) = 1/(2*gamma+2) * sum_{i<j} m_i m_j |q_i-q_j|^(2*gamma+2),
    gamma != -1; gamma = -3/2 is the Newtonian gravitational case.
  * vortex: H(q) = -sum_{i<j} m_i m_j log |q_i - q_j| (m_i are vorticities).

A configuration kappa rotating rigidly with angular speed omega is a relative
equilibrium when

    homogeneous:  omega^2 M kappa = grad U_gamma(kappa)
    vortex:       omega   M kappa = -grad H(kappa)

(each equivalent to a critical point of the corresponding rotating-frame
Hamiltonian).  The stability operator is A = M^{-1} D grad F(kappa); the
characteristic polynomial of the linearization is

    homogeneous:  det(A + (lambda^2 - omega^2) I + 2 lambda omega J)
    vortex:       det(A + omega I + lambda J)

with J = blockdiag([[0, -1], [1, 0]]).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import RingSpec, RingSystem, build


@dataclass(frozen=True)
class Potential:
    kind: str                 # "homogeneous" | "vortex"
    gamma: float = -1.5

    def __post_init__(self):
        if self.kind not in ("homogeneous", "vortex"):
            raise ValueError("unknown potential kind %r" % (self.kind,))
        if self.kind == "homogeneous" and self.gamma == -1.0:
            raise ValueError("gamma = -1 is excluded (use the vortex kind)")

    @property
    def is_newtonian(self) -> bool:
        return self.kind == "homogeneous" and self.gamma == -1.5


def homogeneous(gamma: float) -> Potential:
    return Potential("homogeneous", gamma)


def newtonian() -> Potential:
    return Potential("homogeneous", -1.5)


def vortex() -> Potential:
    return Potential("vortex")


def j_matrix(npoints: int) -> np.ndarray:
    """Block diagonal J, one [[0, -1], [1, 0]] block per point."""
    K = np.array([[0.0, -1.0], [1.0, 0.0]])
    out = np.zeros((2 * npoints, 2 * npoints))
    for i in range(npoints):
        out[2 * i:2 * i + 2, 2 * i:2 * i + 2] = K
    return out


def apply_j(w: np.ndarray) -> np.ndarray:
    """J @ w without forming J: (x, y) -> (-y, x) per point."""
    v = w.reshape(-1, 2)
    return np.column_stack([-v[:, 1], v[:, 0]]).reshape(w.shape)


def _pair_geometry(positions: np.ndarray):
    diff = positions[:, None, :] - positions[None, :, :]      # (N, N, 2)
    dist = np.linalg.norm(diff, axis=2)
    np.fill_diagonal(dist, 1.0)                               # avoid 0/0; diagonal unused
    return diff, dist


def potential_value(sys: RingSystem, pot: Potential) -> float:
    diff, dist = _pair_geometry(sys.positions)
    mm = np.outer(sys.masses, sys.masses)
    iu = np.triu_indices(sys.npoints, k=1)
    if pot.kind == "vortex":
        return float(-np.sum(mm[iu] * np.log(dist[iu])))
    p = 2.0 * pot.gamma + 2.0
    return float(np.sum(mm[iu] * dist[iu] ** p) / p)


def gradient(sys: RingSystem, pot: Potential) -> np.ndarray:
    """grad F as a vector of length 2N."""
    diff, dist = _pair_geometry(sys.positions)
    mm = np.outer(sys.masses, sys.masses)
    if pot.kind == "vortex":
        w = -mm / dist ** 2
    else:
        w = mm * dist ** (2.0 * pot.gamma)
    np.fill_diagonal(w, 0.0)
    return (w[:, :, None] * diff).sum(axis=1).reshape(-1)


def hessian(sys: RingSystem, pot: Potential) -> np.ndarray:
    """D grad F: 2N x 2N, symmetric, with exact translation kernel.

    Off-diagonal pair blocks:
      homogeneous: -m_i m_j d^(2*gamma) (I + 2*gamma u u^T),  u = (q_i-q_j)/d
      vortex:      -m_i m_j d^(-2) (2 u u^T - I)
    Diagonal blocks are the negated row sums, so constant fields are
    annihilated to rounding.
    """
    N = sys.npoints
    diff, dist = _pair_geometry(sys.positions)
    H = np.zeros((2 * N, 2 * N))
    for i in range(N):
        for j in range(i + 1, N):
            d = dist[i, j]
            u = diff[i, j] / d
            uu = np.outer(u, u)
            if pot.kind == "vortex":
                B = (2.0 * uu - np.eye(2)) / d ** 2
            else:
                B = d ** (2.0 * pot.gamma) * (np.eye(2) + 2.0 * pot.gamma * uu)
            B = -sys.masses[i] * sys.masses[j] * B
            H[2 * i:2 * i + 2, 2 * j:2 * j + 2] = B
            H[2 * j:2 * j + 2, 2 * i:2 * i + 2] = B
    for i in range(N):
        acc = np.zeros((2, 2))
        for j in range(N):
            if j != i:
                acc -= H[2 * i:2 * i + 2, 2 * j:2 * j + 2]
        H[2 * i:2 * i + 2, 2 * i:2 * i + 2] = acc
    return H


def hessian_fd(sys: RingSystem, pot: Potential, step: float = 1e-6) -> np.ndarray:
    """Central-difference Hessian from the analytic gradient."""
    N2 = 2 * sys.npoints
    base = sys.positions.reshape(-1)
    out = np.empty((N2, N2))
    shifted = RingSystem(n=sys.n, rings=sys.rings, positions=sys.positions.copy(),
                         masses=sys.masses, orbit_of=sys.orbit_of,
                         orbit_slices=sys.orbit_slices)
    for j in range(N2):
        h = step * max(1.0, abs(base[j]))
        for sgn in (1.0, -1.0):
            q = base.copy()
            q[j] += sgn * h
            shifted.positions = q.reshape(-1, 2)
            g = gradient(shifted, pot)
            out[:, j] = g if sgn > 0 else (out[:, j] - g)
        out[:, j] /= 2.0 * h
    return out


def hessian_fd_residual(sys: RingSystem, pot: Potential, step: float = 1e-6) -> float:
    """Relative error of the analytic Hessian against central differences."""
    H = hessian(sys, pot)
    F = hessian_fd(sys, pot, step)
    return float(np.linalg.norm(H - F) / max(np.linalg.norm(F), 1e-300))


def equivariance_residual(sys: RingSystem, pot: Potential) -> float:
    """max_g ||A sigma(g) - sigma(g) A||_F / ||A||_F for A = M^-1 D grad F."""
    A = stability_operator(sys, pot, omega=1.0).matrix
    anorm = np.linalg.norm(A)
    worst = 0.0
    for g in sys.group():
        S = sys.sigma_matrix(g)
        worst = max(worst, float(np.linalg.norm(A @ S - S @ A)))
    return worst / max(anorm, 1e-300)


def translation_kernel_residual(sys: RingSystem, pot: Potential) -> float:
    """max over both unit translations of ||A t|| / (||A|| ||t||)."""
    A = stability_operator(sys, pot, omega=1.0).matrix
    anorm = np.linalg.norm(A)
    worst = 0.0
    for d in (0, 1):
        t = np.zeros(2 * sys.npoints)
        t[d::2] = 1.0
        worst = max(worst, float(np.linalg.norm(A @ t) / (anorm * np.linalg.norm(t) + 1e-300)))
    return worst


@dataclass
class StabilityOperator:
    """A = M^{-1} D grad F at a configuration, with its context."""

    system: RingSystem
    potential: Potential
    omega: float
    matrix: np.ndarray
    releq_residual_norm: float

    @property
    def is_releq(self) -> bool:
        scale = max(np.max(np.abs(gradient(self.system, self.potential))), 1.0)
        return self.releq_residual_norm <= 1e-8 * scale


def stability_operator(sys: RingSystem, pot: Potential, omega: float) -> StabilityOperator:
    H = hessian(sys, pot)
    A = H / sys.mass_diag[:, None]
    res = releq_residual(sys, pot, omega)
    return StabilityOperator(system=sys, potential=pot, omega=omega, matrix=A,
                             releq_residual_norm=float(np.max(np.abs(res))))


def releq_residual(sys: RingSystem, pot: Potential, omega: float) -> np.ndarray:
    """Rotating-frame balance residual, length 2N; zero at a relative equilibrium."""
    g = gradient(sys, pot)
    mk = sys.mass_diag * sys.config_vector
    if pot.kind == "vortex":
        return omega * mk + g
    return omega ** 2 * mk - g


@dataclass
class ReleqSolution:
    system: RingSystem
    omega: float
    radii: np.ndarray            # per-ring radii of the solved system
    converged: bool
    iterations: int
    reduced_norm: float
    full_norm: float


def _reduced_residual(sys: RingSystem, pot: Potential, omega: float) -> np.ndarray:
    """Radial and tangential residual components at one representative per ring."""
    full = releq_residual(sys, pot, omega)
    out = []
    for i, spec in enumerate(sys.rings):
        if spec.kind == "center":
            continue
        p = sys.orbit_slices[i].start
        x = sys.positions[p]
        rhat = x / np.linalg.norm(x)
        that = np.array([-rhat[1], rhat[0]])
        r = full[2 * p:2 * p + 2]
        out.extend([r @ rhat, r @ that])
    return np.asarray(out)


def _with_radii(sys: RingSystem, radii: np.ndarray, free: list[int]) -> RingSystem:
    specs = list(sys.rings)
    for val, idx in zip(radii, free):
        spec = specs[idx]
        specs[idx] = RingSpec(spec.kind, spec.mass, radius=float(val),
                              phase=spec.phase, half_gap=spec.half_gap)
    return build(sys.n, specs)


def _omega_guess(sys: RingSystem, pot: Potential) -> float:
    g = gradient(sys, pot)
    for i, spec in enumerate(sys.rings):
        if spec.kind == "center":
            continue
        p = sys.orbit_slices[i].start
        x = sys.positions[p]
        rhat = x / np.linalg.norm(x)
        gr = g[2 * p:2 * p + 2] @ rhat
        mr = sys.masses[p] * np.linalg.norm(x)
        if pot.kind == "vortex":
            return -gr / mr
        val = gr / mr
        return np.sqrt(val) if val > 0 else 1.0
    return 1.0


def solve_releq(sys: RingSystem, pot: Potential, free_radii: tuple[int, ...] = (),
                max_iter: int = 50, tol: float = 1e-12) -> ReleqSolution:
    """Newton iteration on (free ring radii, omega) for the reduced residual.

    free_radii lists ring indices whose radius is adjusted; the first
    non-center ring is the gauge and may not be freed.  Returns the best
    iterate with a convergence flag (no exception on non-convergence).
    """
    free = sorted(set(int(i) for i in free_radii))
    first = next(i for i, r in enumerate(sys.rings) if r.kind != "center")
    for i in free:
        if not 0 <= i < len(sys.rings):
            raise ValueError("free radius index %d out of range" % i)
        if sys.rings[i].kind == "center":
            raise ValueError("free radius index %d names a center ring" % i)
        if i == first:
            raise ValueError("ring %d is the radius gauge and cannot be freed" % i)
    cur = sys
    x = np.array([sys.rings[i].radius for i in free] + [_omega_guess(sys, pot)])

    def residual(vec: np.ndarray):
        # invalid trial geometry (radius <= 0, collision) reads as "reject
        # the step" rather than an error, so backtracking can recover
        try:
            system = _with_radii(sys, vec[:-1], free)
        except ValueError:
            return None, None
        return _reduced_residual(system, pot, vec[-1]), system

    F, cur = residual(x)
    best = (np.max(np.abs(F)) if F.size else 0.0, x.copy(), cur)
    it = 0
    for it in range(1, max_iter + 1):
        norm = np.max(np.abs(F))
        if norm <= tol:
            break
        Jac = np.empty((F.size, x.size))
        for c in range(x.size):
            step = 1e-7 * abs(x[c]) + 1e-9
            xp = x.copy()
            xp[c] += step
            Fp, _ = residual(xp)
            if Fp is None:
                xp[c] = x[c] - step
                Fm, _ = residual(xp)
                if Fm is None:
                    raise RuntimeError("solver stalled: non-finite Jacobian")
                Jac[:, c] = (F - Fm) / step
            else:
                Jac[:, c] = (Fp - F) / step
        if not np.all(np.isfinite(Jac)):
            raise RuntimeError("solver stalled: non-finite Jacobian")
        dx, *_ = np.linalg.lstsq(Jac, -F, rcond=None)
        if not np.all(np.isfinite(dx)) or np.max(np.abs(dx)) > 1e8:
            raise RuntimeError("solver stalled: unbounded Newton step")
        scale = 1.0
        Ft = syst = None
        for _ in range(12):
            Ft, syst = residual(x + scale * dx)
            if Ft is not None and (np.max(np.abs(Ft)) < norm or scale < 1e-3):
                break
            scale *= 0.5
        if Ft is None:
            raise RuntimeError("solver stalled: step leaves the valid radius domain")
        x = x + scale * dx
        F, cur = Ft, syst
        if np.max(np.abs(F)) < best[0]:
            best = (np.max(np.abs(F)), x.copy(), cur)
    rnorm = float(np.max(np.abs(F))) if F.size else 0.0
    if rnorm > best[0]:
        rnorm, x, cur = best
    omega = float(x[-1])
    full = releq_residual(cur, pot, omega)
    return ReleqSolution(system=cur, omega=omega,
                         radii=np.array([r.radius for r in cur.rings]),
                         converged=bool(rnorm <= 1e-10),
                         iterations=it, reduced_norm=float(rnorm),
                         full_norm=float(np.max(np.abs(full))))
