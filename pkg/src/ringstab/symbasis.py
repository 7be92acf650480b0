"""Symmetry-adapted decomposition of displacement space for ring systems.

The 2N-dimensional displacement space of a D_n ring system splits into
isotypic components, one per irreducible representation.  This module builds
the projectors onto those components, the transfer maps between the two
copies inside each two-dimensional-irrep component, and explicit adapted
bases in which any equivariant operator is block diagonal and J takes a
standard symplectic form.

All inner products are taken with respect to M = diag(masses), which may be
indefinite when masses (vorticities) change sign; orthogonalization then
falls back to the Euclidean product and the result is flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dihedral import (ALPHA, PHI, PSI, TAU, DihedralElement, IrrepLabel,
                       irrep_list, rho)
from .dynamics import apply_j, j_matrix
from .geometry import RingSystem

#: singular values below this (relative) count as zero in rank computations
RANK_RTOL = 1e-8
#: M-norms below this relative to the Euclidean norm trigger the fallback
MNORM_RTOL = 1e-10


def _sigma_table(sys: RingSystem) -> dict[tuple[int, int], np.ndarray]:
    cache = getattr(sys, "_sigma_cache", None)
    if cache is None:
        cache = {}
        for g in sys.group():
            cache[(g.rot, g.ref)] = sys.sigma_matrix(g)
        sys._sigma_cache = cache
    return cache


def averaging_operator(sys: RingSystem, kind: str, k: int) -> np.ndarray:
    """(1/2n) sum_{j=1..n} w_j sigma(r^j) with w_j = cos (kind "c") or sin (kind "s")
    of 2*pi*k*j/n.  k is taken modulo n (cosine/sine periodicity)."""
    if kind not in ("c", "s"):
        raise ValueError("averaging kind must be 'c' or 's'")
    n = sys.n
    table = _sigma_table(sys)
    out = np.zeros((2 * sys.npoints, 2 * sys.npoints))
    for j in range(1, n + 1):
        ang = 2.0 * np.pi * k * j / n
        w = np.cos(ang) if kind == "c" else np.sin(ang)
        out += w * table[(j % n, 0)]
    return out / (2.0 * n)


def _alternating_average(sys: RingSystem) -> np.ndarray:
    """(1/2n) sum_j (-1)^j sigma(r^j); equals the k = n/2 cosine average."""
    table = _sigma_table(sys)
    out = np.zeros((2 * sys.npoints, 2 * sys.npoints))
    for j in range(1, sys.n + 1):
        out += (-1.0) ** j * table[(j % sys.n, 0)]
    return out / (2.0 * sys.n)


def _rho_range(n: int) -> range:
    return range(1, (n // 2 - 1 if n % 2 == 0 else (n - 1) // 2) + 1)


def projector(sys: RingSystem, label: IrrepLabel, part: tuple[int, int] | None = None) -> np.ndarray:
    """Projector onto an isotypic component, or one p_ij block of a rho component.

    For one-dimensional labels `part` must be None.  For rho labels, part
    (i, j) gives p_ij (p_ii project onto the i-th copy V_i, p_ij transfer
    V_j -> V_i); part None gives p_11 + p_22.
    """
    n = sys.n
    table = _sigma_table(sys)
    E = np.eye(2 * sys.npoints)
    S = table[(0, 1)]
    if label.kind != "rho":
        if part is not None:
            raise ValueError("part applies to rho labels only")
        if label.kind in ("phi", "psi") and n % 2:
            raise ValueError("irrep %r requires even n" % (label,))
        if label.kind == "tau":
            return averaging_operator(sys, "c", 0) @ (E + S)
        if label.kind == "alpha":
            return averaging_operator(sys, "c", 0) @ (E - S)
        if label.kind == "phi":
            return _alternating_average(sys) @ (E + S)
        return _alternating_average(sys) @ (E - S)
    if n == 2 or label.k not in _rho_range(n):
        raise ValueError("irrep %r not defined for D_%d" % (label, n))
    if part is None:
        return 4.0 * averaging_operator(sys, "c", label.k)
    ck = averaging_operator(sys, "c", label.k)
    sk = averaging_operator(sys, "s", label.k)
    if part == (1, 1):
        return 2.0 * ck @ (E + S)
    if part == (2, 2):
        return 2.0 * ck @ (E - S)
    if part == (1, 2):
        return 2.0 * sk @ (S - E)
    if part == (2, 1):
        return 2.0 * sk @ (E + S)
    raise ValueError("part must be one of (1,1), (1,2), (2,1), (2,2)")


def transfer(sys: RingSystem, k: int, i: int, j: int) -> np.ndarray:
    """p_ij for rho_k: an M-isometry V_j^(k) -> V_i^(k) (i != j)."""
    return projector(sys, rho(k), part=(i, j))


def m_inner(sys: RingSystem, u: np.ndarray, v: np.ndarray) -> float:
    """<u, v>_M = u^T M v; indefinite when masses change sign."""
    return float(u @ (sys.mass_diag * v))


def omega_form(sys: RingSystem, u: np.ndarray, v: np.ndarray) -> float:
    """Symplectic pairing <u, J v>_M."""
    return m_inner(sys, u, apply_j(v))


def multiplicities(n: int, a: int, b: int, c: int) -> dict[str, int]:
    """Isotypic multiplicities of a type-(a,b,c) system, keyed by irrep repr.

    For n > 2 the standard representation is rho_1 with multiplicity
    a + 2(b+2c); the other rho_k get 2(b+2c), the one-dimensional irreps
    b + 2c each.  For n = 2 there are no rho components and the center and
    translations fall into phi and psi: those get a + b + 2c each.
    """
    w = b + 2 * c
    if n == 2:
        return {"tau": w, "alpha": w, "phi": a + w, "psi": a + w}
    out = {"tau": w, "alpha": w}
    if n % 2 == 0:
        out["phi"] = w
        out["psi"] = w
    for k in _rho_range(n):
        out["rho_%d" % k] = (a + 2 * w) if k == 1 else 2 * w
    return out


@dataclass
class IsotypicComponent:
    label: IrrepLabel
    part: int                    # 0 for 1-dim labels, 1 or 2 for rho copies
    dimension: int
    basis: np.ndarray            # (2N, dimension), orthonormal (Euclidean)


def isotypic_decomposition(sys: RingSystem) -> list[IsotypicComponent]:
    """Ranks and orthonormal bases of every isotypic piece via projector SVD.

    Raises ValueError("decomposition mismatch") when computed ranks disagree
    with the multiplicity count or do not sum to 2N.
    """
    a, b, c = sys.type_abc
    expect = multiplicities(sys.n, a, b, c)
    out = []
    total = 0
    for label in irrep_list(sys.n):
        parts = [(0, projector(sys, label))] if label.kind != "rho" else \
            [(1, projector(sys, label, (1, 1))), (2, projector(sys, label, (2, 2)))]
        for part, P in parts:
            U, sv, _ = np.linalg.svd(P)
            rank = int(np.sum(sv > RANK_RTOL * sv[0])) if sv[0] > 0 else 0
            if rank != expect[repr(label)]:
                raise ValueError("decomposition mismatch: rank %d for %r part %d, expected %d"
                                 % (rank, label, part, expect[repr(label)]))
            out.append(IsotypicComponent(label=label, part=part, dimension=rank,
                                         basis=U[:, :rank]))
            total += rank
    if total != 2 * sys.npoints:
        raise ValueError("decomposition mismatch: components span %d of %d dimensions"
                         % (total, 2 * sys.npoints))
    return out


@dataclass
class ResidualReport:
    residuals: dict[str, float]
    max_residual: float
    passed: bool


def projector_algebra_check(sys: RingSystem, tol: float = 1e-11,
                            probe_dim: int = 96) -> ResidualReport:
    """Residuals of the full composition table of the projector family.

    p_a p_b = delta_ab p_a for one-dimensional labels a, b; within each
    two-dimensional family p_ij p_kl = delta_jk p_il; everything across
    distinct irreps composes to zero; and the diagonal members sum to the
    identity.  All residuals are Frobenius norms; above probe_dim the table
    is evaluated on a fixed block of unit probe vectors instead of forming
    the dense products (same scale, deterministic, O(dim^2) per pair).
    """
    n = sys.n
    dim = 2 * sys.npoints
    ops: list[tuple[str, tuple, np.ndarray]] = []
    for lab in (TAU, ALPHA) + ((PHI, PSI) if n % 2 == 0 else ()):
        ops.append(("p_%s" % lab.kind, (lab.kind,), projector(sys, lab)))
    if n > 2:
        for k in _rho_range(n):
            for ij in ((1, 1), (1, 2), (2, 1), (2, 2)):
                ops.append(("p%d%d(k=%d)" % (ij + (k,)), ("rho", k) + ij,
                            projector(sys, rho(k), ij)))
    by_id = {o[1]: o[2] for o in ops}
    probe = None
    if dim > probe_dim:
        rng = np.random.default_rng(20240817)
        probe = rng.standard_normal((dim, 4))
        probe /= np.linalg.norm(probe, axis=0)
    res = {}
    for name_a, id_a, A in ops:
        for name_b, id_b, B in ops:
            if id_a[0] != "rho" or id_b[0] != "rho":
                expected = A if id_a == id_b else None
            elif id_a[1] != id_b[1] or id_a[3] != id_b[2]:
                expected = None
            else:
                expected = by_id[("rho", id_a[1], id_a[2], id_b[3])]
            if probe is not None:
                r = A @ (B @ probe)
                if expected is not None:
                    r = r - expected @ probe
            else:
                prod = A @ B
                r = prod - expected if expected is not None else prod
            res["%s %s" % (name_a, name_b)] = float(np.linalg.norm(r))
    total = sum(P for name, id_, P in ops
                if id_[0] != "rho" or id_[2] == id_[3])
    res["completeness"] = float(np.linalg.norm(total - np.eye(dim)))
    mx = max(res.values())
    return ResidualReport(residuals=res, max_residual=mx, passed=bool(mx <= tol))


def j_relations_check(sys: RingSystem, tol: float = 1e-11) -> ResidualReport:
    """Residuals of the commutation identities between J and the group machinery.

    J commutes with rotations and anticommutes with reflections; consequently
    J intertwines p_tau with p_alpha, p_phi with p_psi, and maps the rho
    blocks as J p11 = p22 J, J p12 = -p21 J (and symmetrically).
    """
    n = sys.n
    J = j_matrix(sys.npoints)
    table = _sigma_table(sys)
    R = table[(1 % n, 0)]
    S = table[(0, 1)]
    nrm = np.linalg.norm(J)
    res = {
        "J r - r J": np.linalg.norm(J @ R - R @ J),
        "J s + s J": np.linalg.norm(J @ S + S @ J),
    }
    pt, pa = projector(sys, TAU), projector(sys, ALPHA)
    res["J p_tau - p_alpha J"] = np.linalg.norm(J @ pt - pa @ J)
    res["J p_alpha - p_tau J"] = np.linalg.norm(J @ pa - pt @ J)
    if n % 2 == 0:
        pf, pp = projector(sys, PHI), projector(sys, PSI)
        res["J p_phi - p_psi J"] = np.linalg.norm(J @ pf - pp @ J)
        res["J p_psi - p_phi J"] = np.linalg.norm(J @ pp - pf @ J)
    if n > 2:
        for k in _rho_range(n):
            p11 = projector(sys, rho(k), (1, 1))
            p22 = projector(sys, rho(k), (2, 2))
            p12 = projector(sys, rho(k), (1, 2))
            p21 = projector(sys, rho(k), (2, 1))
            res["J p11 - p22 J (k=%d)" % k] = np.linalg.norm(J @ p11 - p22 @ J)
            res["J p22 - p11 J (k=%d)" % k] = np.linalg.norm(J @ p22 - p11 @ J)
            res["J p12 + p21 J (k=%d)" % k] = np.linalg.norm(J @ p12 + p21 @ J)
            res["J p21 + p12 J (k=%d)" % k] = np.linalg.norm(J @ p21 + p12 @ J)
    res = {k: float(v / nrm) for k, v in res.items()}
    mx = max(res.values())
    return ResidualReport(residuals=res, max_residual=mx, passed=bool(mx <= tol))


def symplectic_residuals(sys: RingSystem) -> dict[str, float]:
    """Diagnostics of the pairing Omega_M(u, v) = u^T M J v (never gated).

    Reports the isotropy of the tau component (Omega_M vanishes there) and,
    per two-dimensional irrep, how far M J p12 is from symmetric, i.e. how
    far the transfer is from being a Hamiltonian vector field for Omega_M.
    """
    M = np.diag(sys.mass_diag)
    J = j_matrix(sys.npoints)
    MJ = M @ J
    out = {}
    pt = projector(sys, TAU)
    out["Omega_M on tau component"] = float(
        np.linalg.norm(pt.T @ MJ @ pt) / max(np.linalg.norm(MJ), 1e-300))
    if sys.n > 2:
        for k in _rho_range(sys.n):
            for (i, j) in ((1, 2), (2, 1)):
                X = MJ @ projector(sys, rho(k), (i, j))
                out["M J p%d%d symmetry (k=%d)" % (i, j, k)] = float(
                    np.linalg.norm(X - X.T) / max(np.linalg.norm(X), 1e-300))
    return out


# ---------------------------------------------------------------------------
# adapted bases


def _spot(sys: RingSystem, point: int, vec) -> np.ndarray:
    out = np.zeros(2 * sys.npoints)
    out[2 * point:2 * point + 2] = vec
    return out


def translation_field(sys: RingSystem, orbit: int | None = None, direction: int = 0) -> np.ndarray:
    """Unit-vector displacement on one orbit (or all points), exact."""
    e = np.zeros(2)
    e[direction] = 1.0
    out = np.zeros(2 * sys.npoints)
    if orbit is None:
        out.reshape(-1, 2)[:] = e
    else:
        sl = sys.orbit_slices[orbit]
        out.reshape(-1, 2)[sl] = e
    return out


def _pick_independent(cands: list[np.ndarray], want: int,
                      against: list[np.ndarray] | None = None) -> list[np.ndarray]:
    """First `want` candidates (original vectors) independent of each other
    and of `against`, judged by Euclidean Gram-Schmidt residual."""
    basis = [v / np.linalg.norm(v) for v in (against or []) if np.linalg.norm(v) > 0]
    scale = max((np.linalg.norm(v) for v in cands), default=1.0)
    chosen = []
    for cand in cands:
        if len(chosen) == want:
            break
        r = cand.copy()
        for b in basis:
            r -= (b @ r) * b
        if np.linalg.norm(r) > 1e-8 * max(scale, 1.0):
            chosen.append(cand)
            basis.append(r / np.linalg.norm(r))
    if len(chosen) != want:
        raise ValueError("decomposition mismatch: found %d of %d independent columns"
                         % (len(chosen), want))
    return chosen


@dataclass
class OrbitContribution:
    """Raw per-orbit basis material (V_1-side columns; J gives the partners)."""

    orbit: int
    tau: list[np.ndarray] = field(default_factory=list)
    phi: list[np.ndarray] = field(default_factory=list)
    sigma: list[np.ndarray] = field(default_factory=list)
    rho: dict[int, list[np.ndarray]] = field(default_factory=dict)


def orbit_basis(sys: RingSystem, i: int) -> dict[str, np.ndarray]:
    """One orbit's adapted columns, grouped by block label.

    Each value is a (2N, 2m) matrix whose first m columns are exactly J times
    the last m, matching the global assembly convention.  Columns are
    supported on orbit i except for shared directions (translations) that the
    projectors tie to the orbit's points only.
    """
    ct = _orbit_contribution(sys, i)

    def pack(us: list[np.ndarray]) -> np.ndarray:
        return np.column_stack([apply_j(u) for u in us] + us)

    out: dict[str, np.ndarray] = {}
    if ct.tau:
        out["tau_alpha"] = pack(ct.tau)
    if ct.phi:
        out["phi_psi"] = pack(ct.phi)
    for k in sorted(ct.rho):
        out["rho_%d" % k] = pack(ct.rho[k])
    if ct.sigma:
        out["sigma"] = pack(ct.sigma)
    return out


def _orbit_contribution(sys: RingSystem, i: int) -> OrbitContribution:
    """Seed-and-project construction of one orbit's contribution.

    Regular orbit seeds: delta_x = n (x - O) at the first vertex; semiregular
    use 2n (x - O).  tau gets the radial field (and the gap field for
    semiregular rings); phi the alternating fields; each rho_k a 2- or
    4-tuple from the p_ij projections of the seeds; the rho_1 slot (sigma)
    leads with the orbit's horizontal translation so multi-orbit assembly can
    combine translations across orbits.  For n = 2 the translation material
    lives in phi instead (there are no rho components).
    """
    n = sys.n
    spec = sys.rings[i]
    out = OrbitContribution(orbit=i)
    if spec.kind == "center":
        t = translation_field(sys, orbit=i, direction=0)
        if n == 2:
            out.phi = [t]
        else:
            out.sigma = [t]
        return out
    seed = sys.orbit_slices[i].start
    x = sys.positions[seed]
    scale = n if spec.kind == "regular" else 2 * n
    dx = _spot(sys, seed, scale * x)
    jdx = apply_j(dx)
    d1 = _spot(sys, seed, [1.0, 0.0])
    d2 = _spot(sys, seed, [0.0, 1.0])

    ptau = projector(sys, TAU)
    out.tau = [ptau @ dx]
    if spec.kind == "semiregular":
        out.tau.append(ptau @ jdx)

    if n % 2 == 0:
        pphi = projector(sys, PHI)
        cands = [pphi @ dx, pphi @ jdx]
        if n == 2:
            t = translation_field(sys, orbit=i, direction=0)
            want = 1 if spec.kind == "regular" else 2
            out.phi = [t] + (_pick_independent(cands, want - 1, against=[t])
                             if want > 1 else [])
        else:
            want = 1 if spec.kind == "regular" else 2
            out.phi = _pick_independent(cands, want)

    if n > 2:
        for k in _rho_range(sys.n):
            p11 = projector(sys, rho(k), (1, 1))
            p12 = projector(sys, rho(k), (1, 2))
            # seed pools are wider than strictly needed: at special phases
            # individual projections can vanish or collapse onto the
            # translation, but the full vertex plane always generates V_1
            pool = [p11 @ d1, p12 @ d2, p11 @ d2, p12 @ d1,
                    p11 @ dx, p12 @ jdx, p11 @ jdx, p12 @ dx]
            if k == 1:
                t = translation_field(sys, orbit=i, direction=0)
                if spec.kind == "regular":
                    eps_h = 0.5 * n * (p11 @ d1 - p12 @ d2)
                    extras = _pick_independent([eps_h] + pool, 1, against=[t])
                else:
                    eps_h = float(n) * (p11 @ d1 - p12 @ d2)
                    extras = _pick_independent(
                        [eps_h, p11 @ d2, p12 @ d1] + pool, 3, against=[t])
                out.sigma = [t] + extras
            else:
                if spec.kind == "regular":
                    out.rho[k] = _pick_independent(
                        [p11 @ dx, p12 @ jdx, p11 @ jdx, p12 @ dx] + pool, 2)
                else:
                    out.rho[k] = _pick_independent(
                        [p11 @ d1, p12 @ d2, -(p11 @ d2), p12 @ d1] + pool, 4)
    return out


@dataclass
class BlockPlan:
    """One J-paired block of the assembled basis.

    Columns come in two halves: the first `pairs` columns are exactly J times
    the last `pairs` columns, in matching order.  `lead_pair` marks blocks
    whose first column pair (J u_1, u_1) is an eigen-pair at a relative
    equilibrium and may be split off as a quadratic factor.
    """

    label: str
    start: int
    pairs: int
    lead_pair: bool = False

    @property
    def size(self) -> int:
        return 2 * self.pairs

    @property
    def cols(self) -> list[int]:
        return list(range(self.start, self.start + self.size))

    @property
    def j_pairs(self) -> list[tuple[int, int]]:
        """(u column, Ju column) index pairs, in pairing order."""
        return [(self.start + self.pairs + i, self.start + i)
                for i in range(self.pairs)]


@dataclass
class SymBasis:
    system: RingSystem
    matrix: np.ndarray           # (2N, 2N) columns
    blocks: list[BlockPlan]
    normalized: bool
    m_orthogonal: str            # "full" | "partial"
    cond: float


def gram_residual(basis: SymBasis) -> float:
    """Relative off-diagonal mass of C^T M C; zero for a fully
    M-orthogonal basis."""
    C = basis.matrix
    G = C.T @ (basis.system.mass_diag[:, None] * C)
    off = G - np.diag(np.diag(G))
    return float(np.linalg.norm(off) / max(np.linalg.norm(G), 1e-300))


def _m_gram_schmidt(sys: RingSystem, cols: list[np.ndarray],
                    normalize: bool) -> tuple[list[np.ndarray], bool]:
    """In-order Gram-Schmidt under <.,.>_M; no-op on already-orthogonal input.

    Returns (columns, full_flag); full_flag False means the M-product was too
    degenerate and the Euclidean product was used for at least one step.
    """
    md = sys.mass_diag
    done: list[np.ndarray] = []
    full = True
    for u in cols:
        v = u.copy()
        for w in done:
            mw = float(w @ (md * w))
            if abs(mw) > MNORM_RTOL * float(w @ w):
                v -= (float(w @ (md * v)) / mw) * w
            else:
                full = False
                v -= (float(w @ v) / float(w @ w)) * w
        if np.linalg.norm(v) < 1e-10 * max(np.linalg.norm(u), 1.0):
            raise ValueError("decomposition mismatch: dependent column in basis block")
        if normalize:
            mv = float(v @ (md * v))
            if abs(mv) > MNORM_RTOL * float(v @ v):
                v = v / np.sqrt(abs(mv))
            else:
                full = False
                v = v / np.linalg.norm(v)
        done.append(v)
    return done, full


def _lead_combo(sys: RingSystem, per_orbit: list[list[np.ndarray]]) -> tuple[list[np.ndarray], bool]:
    """[sum of leads, pairwise combos vanishing on the total, extras].

    Each orbit list leads with its combinable element (radial field or
    translation); combos are first + c_i * i-th with c_i killing the
    M-product against the total, the classical cross-orbit construction.
    """
    items = [lst for lst in per_orbit if lst]
    full = True
    leads = [lst[0] for lst in items]
    total = np.sum(leads, axis=0)
    md = sys.mass_diag
    combos = []
    for f in leads[1:]:
        m0 = float(leads[0] @ (md * leads[0]))
        mi = float(f @ (md * f))
        if abs(mi) > MNORM_RTOL * float(f @ f) and abs(m0) > MNORM_RTOL * float(leads[0] @ leads[0]):
            combos.append(leads[0] - (m0 / mi) * f)
        else:
            full = False
            combos.append(f)
    extras = [v for lst in items for v in lst[1:]]
    return [total] + combos + extras, full


def assemble_global_basis(sys: RingSystem, normalize: bool = True) -> SymBasis:
    """Full 2N-column adapted basis, blocks ordered tau/alpha, phi/psi,
    rho_2..rho_t, sigma (rho_1).  Within each block the columns are
    (J u_1 ... J u_m, u_1 ... u_m); the J-pairing is exact by construction.
    """
    contribs = [_orbit_contribution(sys, i) for i in range(len(sys.rings))]
    a, b, c = sys.type_abc
    expect = multiplicities(sys.n, a, b, c)
    # M-normalization only makes sense for a definite mass form; with
    # mixed-sign vorticities columns are left unnormalized
    normalize = normalize and bool(np.all(sys.masses > 0))
    cols: list[np.ndarray] = []
    blocks: list[BlockPlan] = []
    m_full = True

    def add_block(label: str, u_side: list[np.ndarray], lead: bool):
        nonlocal m_full
        u_side, ok1 = _m_gram_schmidt(sys, u_side, normalize)
        m_full = m_full and ok1
        start = len(cols)
        cols.extend(apply_j(u) for u in u_side)
        cols.extend(u_side)
        blocks.append(BlockPlan(label=label, start=start, pairs=len(u_side), lead_pair=lead))

    tau_items = [ct.tau for ct in contribs if ct.tau]
    u, ok = _lead_combo(sys, tau_items)
    m_full = m_full and ok
    if len(u) != expect["tau"]:
        raise ValueError("decomposition mismatch: tau has %d columns, expected %d"
                         % (len(u), expect["tau"]))
    add_block("tau_alpha", u, lead=True)

    if sys.n % 2 == 0:
        if sys.n == 2:
            u, ok = _lead_combo(sys, [ct.phi for ct in contribs if ct.phi])
            m_full = m_full and ok
        else:
            u = [v for ct in contribs for v in ct.phi]
        if len(u) != expect["phi"]:
            raise ValueError("decomposition mismatch: phi has %d columns, expected %d"
                             % (len(u), expect["phi"]))
        add_block("phi_psi", u, lead=(sys.n == 2))

    if sys.n > 2:
        for k in _rho_range(sys.n):
            if k == 1:
                continue
            u = [v for ct in contribs for v in ct.rho.get(k, [])]
            if len(u) != expect["rho_%d" % k]:
                raise ValueError("decomposition mismatch: rho_%d has %d columns, expected %d"
                                 % (k, len(u), expect["rho_%d" % k]))
            add_block("rho_%d" % k, u, lead=False)
        u, ok = _lead_combo(sys, [ct.sigma for ct in contribs if ct.sigma])
        m_full = m_full and ok
        if len(u) != expect["rho_1"]:
            raise ValueError("decomposition mismatch: sigma has %d columns, expected %d"
                             % (len(u), expect["rho_1"]))
        add_block("sigma", u, lead=True)

    C = np.column_stack(cols)
    if C.shape[0] != C.shape[1]:
        raise ValueError("decomposition mismatch: %d columns for dimension %d"
                         % (C.shape[1], C.shape[0]))
    cond = float(np.linalg.cond(C))
    if cond > 1e8:
        raise ValueError("basis ill-conditioned: cond = %.3g" % cond)
    return SymBasis(system=sys, matrix=C, blocks=blocks, normalized=normalize,
                    m_orthogonal="full" if m_full else "partial", cond=cond)
