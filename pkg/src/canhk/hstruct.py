"""Quaternionic structure on the total space of the conjugate tangent bundle.

Chart coordinates on the total space are p = (x, u) in R^{2n} x R^{2n}: x
the real base coordinates, u the real components of the fiber vector xi.
Tangent vectors are split by the Levi-Civita connection: the horizontal lift
of X is (X, -Gamma(X, u)) and vertical vectors are (0, V).

With T the curvature contraction of `geometry.contraction_T` and
phi in {f, 1 + f}, put M = I phi(T). In the adapted (horizontal, vertical)
frame

    J = [[0, -M^{-1}], [M, 0]],     I_X = diag(I, -M I M^{-1}),     K = I_X J.

J maps a horizontal lift of X to the vertical vector M X. On covectors this
is the block matrix (0, phi(A) I; I phi(A)^{-1}, 0) in (horizontal, vertical)
order. The vertical block of I_X is forced by I_X J = -J I_X; it reduces to
-I wherever phi(T) commutes with I.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import fgen
from .geometry import ChartModel, FiberPoint, complex_structure, contraction_T

VARIANTS = ("f", "1pf")
SLOTS = ("a", "b")


class SingularStructure(ValueError):
    """phi(A) is not safely invertible at the requested point."""


@lru_cache(maxsize=None)
def _series(terms: int) -> fgen.SeriesF:
    return fgen.coefficients(terms)


@dataclass(frozen=True)
class StructureField:
    """Recipe turning a chart point into a quaternionic triple.

    Attributes
    ----------
    chart : ChartModel
    variant : {"f", "1pf"}
        phi = f or phi = 1 + f.
    slot : {"a", "b", "jacobi"}
        Curvature contraction, see `geometry.contraction_T`.
    terms : int
        Series truncation.
    cond_max : float
        Condition number of phi(A) above which a point is excluded.
    """

    chart: ChartModel
    variant: str = "1pf"
    slot: str = "a"
    terms: int = 40
    cond_max: float = 1e8


@dataclass(frozen=True, eq=False)
class QuatTriple:
    """Endomorphisms I, J, K of the real tangent space in chart coordinates.

    Entry [a, b] is the a-th component of the image of the b-th coordinate
    vector; covectors are acted on by the transpose.

    Attributes
    ----------
    I, J, K : ndarray, shape (4n, 4n)
    frame : ndarray, shape (4n, 4n)
        Columns: horizontal lifts of the base coordinate vectors, then the
        vertical ones.
    M : ndarray, shape (2n, 2n)
        Horizontal-to-vertical block of J.
    """

    I: np.ndarray
    J: np.ndarray
    K: np.ndarray
    frame: np.ndarray
    M: np.ndarray


def quaternion_residual(t: QuatTriple) -> float:
    """max of |I^2 + 1|, |J^2 + 1|, |K^2 + 1|, |IJK + 1|, |IJ + JI| (entrywise)."""
    one = np.eye(t.I.shape[0])
    checks = (t.I @ t.I + one, t.J @ t.J + one, t.K @ t.K + one, t.I @ t.J @ t.K + one, t.I @ t.J + t.J @ t.I)
    return float(max(np.abs(c).max() for c in checks))


def phi_of_A(fld: StructureField, pt: FiberPoint) -> np.ndarray:
    """phi(T) at ``pt`` (vector side)."""
    model = fld.chart.model_at(pt.z)
    T = contraction_T(model, pt.xi, fld.slot)
    return fgen.eval_endo(_series(fld.terms), T, fld.variant, fld.terms)


def adapted_frame(chart: ChartModel, pt: FiberPoint) -> np.ndarray:
    n = chart.n
    G = chart.real_christoffel(pt.z)
    u = pt.real()[2 * n:]
    H = -np.einsum("abc,c->ab", G, u)
    one, zero = np.eye(2 * n), np.zeros((2 * n, 2 * n))
    return np.block([[one, zero], [H, one]])


def build_J(fld: StructureField, pt: FiberPoint) -> QuatTriple:
    """Assemble (I_X, J, K) at ``pt``.

    Raises
    ------
    SingularStructure
        When phi(A) has condition number above ``fld.cond_max``.
    """
    n = fld.chart.n
    fld.chart.check_point(pt.z)
    P = phi_of_A(fld, pt)
    cond = np.linalg.cond(P)
    if not np.isfinite(cond) or cond > fld.cond_max:
        raise SingularStructure(f"phi(A) has condition number {cond:.3g}")
    I = complex_structure(n)
    M = I @ P
    Minv = np.linalg.inv(M)
    zero = np.zeros((2 * n, 2 * n))
    J_ad = np.block([[zero, -Minv], [M, zero]])
    I_ad = np.block([[I, zero], [zero, -M @ I @ Minv]])
    E = adapted_frame(fld.chart, pt)
    Einv = np.linalg.inv(E)
    Ic = E @ I_ad @ Einv
    Jc = E @ J_ad @ Einv
    return QuatTriple(Ic, Jc, Ic @ Jc, E, M)


def triple_at(fld: StructureField, p: np.ndarray) -> QuatTriple:
    return build_J(fld, FiberPoint.from_real(np.asarray(p, dtype=float)))


# normalization

@dataclass(frozen=True, eq=False)
class U1Data:
    """Rotation generator and tautological section at a point.

    ``phi_vec`` is I_X applied to the vertical Euler field; ``tau_sec`` is the
    fiber vector itself, read as a tangent vector of the base.
    """

    phi_vec: np.ndarray
    tau_sec: np.ndarray


def u1_data(fld: StructureField, pt: FiberPoint, t: QuatTriple | None = None) -> U1Data:
    t = build_J(fld, pt) if t is None else t
    n = fld.chart.n
    u = pt.real()[2 * n:]
    euler = np.concatenate([np.zeros(2 * n), u])
    return U1Data(t.I @ euler, u)


def _base_norm(chart: ChartModel, z, v: np.ndarray) -> float:
    g = chart.real_metric(z)
    return float(np.sqrt(max(v @ g @ v, 0.0)))


def normalization_residual(fld: StructureField, pt: FiberPoint) -> float:
    """|d rho(J phi_vec) - tau|_g with phi_vec = I_X(Euler field)."""
    t = build_J(fld, pt)
    d = u1_data(fld, pt, t)
    n = fld.chart.n
    return _base_norm(fld.chart, pt.z, (t.J @ d.phi_vec)[: 2 * n] - d.tau_sec)


def linear_rotation_residual(fld: StructureField, pt: FiberPoint) -> float:
    """Same residual with the linear fiber rotation -I xi as generator.

    Diagnostic only: it equals |tau| |1 - 1/phi| along the radial direction
    and is not expected to vanish off the zero section.
    """
    t = build_J(fld, pt)
    n = fld.chart.n
    u = pt.real()[2 * n:]
    rot = np.concatenate([np.zeros(2 * n), -complex_structure(n) @ u])
    return _base_norm(fld.chart, pt.z, (t.J @ rot)[: 2 * n] - u)


# finite-difference checks

def _check_margin(chart: ChartModel, p: np.ndarray, step: float) -> None:
    n = chart.n
    z = p[:n] + 1j * p[n: 2 * n]
    chart.check_point(z, margin=2 * step * np.sqrt(2 * n))


def nijenhuis_tensor(F: Callable[[np.ndarray], np.ndarray], p: np.ndarray, step: float) -> np.ndarray:
    """Central-difference Nijenhuis tensor N[k, i, j] of the field F at p.

    N^k_{ij} = F^l_i d_l F^k_j - F^l_j d_l F^k_i - F^k_l (d_i F^l_j - d_j F^l_i).
    """
    dim = len(p)
    F0 = F(p)
    dF = np.empty((dim, dim, dim))  # dF[l, k, j] = d_l F^k_j
    for l in range(dim):
        e = np.zeros(dim)
        e[l] = step
        dF[l] = (F(p + e) - F(p - e)) / (2 * step)
    t1 = np.einsum("li,lkj->kij", F0, dF)
    t2 = np.einsum("kl,ilj->kij", F0, dF)
    return t1 - t1.transpose(0, 2, 1) - (t2 - t2.transpose(0, 2, 1))


def nijenhuis_residual(fld: StructureField, pt: FiberPoint, step: float) -> dict:
    """Max entry of the finite-difference Nijenhuis tensor of I_X and of J."""
    p = pt.real()
    _check_margin(fld.chart, p, step)
    cache: dict = {}

    def triple(q):
        key = q.tobytes()
        if key not in cache:
            cache[key] = triple_at(fld, q)
        return cache[key]

    return {
        "I": float(np.abs(nijenhuis_tensor(lambda q: triple(q).I, p, step)).max()),
        "J": float(np.abs(nijenhuis_tensor(lambda q: triple(q).J, p, step)).max()),
    }


@dataclass(frozen=True)
class Convergence:
    steps: tuple
    residuals: tuple
    order: float
    extrapolated: float

    def passes(self, order_tol: float = 0.5, limit: float = 1e-6, floor: float = 1e-12) -> bool:
        """Second-order decay to below ``limit``, or residuals at round-off."""
        if max(self.residuals) < floor:
            return True
        return abs(self.order - 2.0) <= order_tol and self.extrapolated < limit


def convergence(residuals: Sequence[float], steps: Sequence[float]) -> Convergence:
    """Order from the last halving and a second-order Richardson estimate."""
    r1, r2 = residuals[-2], residuals[-1]
    ratio = steps[-2] / steps[-1]
    if r1 > 0 and r2 > 0:
        order = float(np.log(r1 / r2) / np.log(ratio))
    else:
        order = float("nan")
    extrap = float(abs((ratio**2 * r2 - r1) / (ratio**2 - 1)))
    return Convergence(tuple(steps), tuple(float(r) for r in residuals), order, extrap)


def nijenhuis_convergence(fld: StructureField, pt: FiberPoint, steps: Sequence[float]) -> dict:
    res = [nijenhuis_residual(fld, pt, h) for h in steps]
    return {k: convergence([r[k] for r in res], steps) for k in ("I", "J")}


# metric-level checks

@dataclass(frozen=True, eq=False)
class OmegaForms:
    """Two-forms omega_F(U, V) = g(F U, V) and Omega = omega_J + i omega_K."""

    omega_I: np.ndarray
    omega_J: np.ndarray
    omega_K: np.ndarray
    Omega: np.ndarray
    positivity: float


def omega_from(g: np.ndarray, t: QuatTriple, tol: float = 1e-10) -> OmegaForms:
    """Forms of a hyper-hermitian metric ``g`` with respect to the triple.

    Raises
    ------
    ValueError
        If some omega_F fails to be antisymmetric (g not hyper-hermitian).
    """
    g = np.asarray(g, dtype=float)
    scale = max(1.0, float(np.abs(g).max()))
    forms = []
    pos = np.inf
    for name, F in (("I", t.I), ("J", t.J), ("K", t.K)):
        w = F.T @ g
        asym = float(np.abs(w + w.T).max())
        if asym > tol * scale:
            raise ValueError(f"omega_{name} is not antisymmetric (defect {asym:.3g})")
        forms.append(0.5 * (w - w.T))
        S = F.T @ g @ F
        pos = min(pos, float(np.linalg.eigvalsh(0.5 * (S + S.T)).min()))
    return OmegaForms(forms[0], forms[1], forms[2], forms[1] + 1j * forms[2], pos)


def exterior_derivative(form_field: Callable[[np.ndarray], np.ndarray], p: np.ndarray, step: float) -> np.ndarray:
    """Central-difference (d omega)_{abc} of a 2-form field."""
    dim = len(p)
    d = np.empty((dim, dim, dim), dtype=np.result_type(form_field(p), float))
    for a in range(dim):
        e = np.zeros(dim)
        e[a] = step
        d[a] = (form_field(p + e) - form_field(p - e)) / (2 * step)
    return d + d.transpose(1, 2, 0) + d.transpose(2, 0, 1)


def closedness_residual(form_field: Callable[[np.ndarray], np.ndarray], p: np.ndarray, step: float) -> float:
    return float(np.abs(exterior_derivative(form_field, np.asarray(p, float), step)).max())


# U(1) action

def rotate_fiber(pt: FiberPoint, theta: float) -> FiberPoint:
    return FiberPoint(pt.z, np.exp(1j * theta) * np.asarray(pt.xi, complex))


def rotation_differential(n: int, theta: float) -> np.ndarray:
    """Differential of (x, u) -> (x, R_theta u), R_theta = exp(theta I)."""
    I = complex_structure(n)
    R = np.cos(theta) * np.eye(2 * n) + np.sin(theta) * I
    zero = np.zeros((2 * n, 2 * n))
    return np.block([[np.eye(2 * n), zero], [zero, R]])


# sampling and selection

def sample_points(chart: ChartModel, rng: np.random.Generator, count: int,
                  base_scale: float = 0.4, fiber_scale: float = 0.35) -> list[FiberPoint]:
    """Seeded points with the fiber vector of g-length below ``fiber_scale``."""
    pts = []
    for _ in range(count):
        z = chart.sample_base(rng, base_scale)
        w = rng.normal(size=chart.n) + 1j * rng.normal(size=chart.n)
        h = chart.metric_at(z)
        gl = np.sqrt(2 * np.vdot(w, h @ w).real)
        r = fiber_scale * rng.uniform(0.3, 1.0)
        pts.append(FiberPoint(z, w * r / gl))
    return pts


@dataclass
class CandidateEvidence:
    variant: str
    slot: str
    excluded: int = 0
    normalization_max: float | None = None
    nijenhuis: list = field(default_factory=list)
    passed: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "slot": self.slot,
            "excluded_points": self.excluded,
            "normalization_max": self.normalization_max,
            "nijenhuis": self.nijenhuis,
            "passed": self.passed,
            "note": self.note,
        }


@dataclass
class SelectionReport:
    status: str  # "selected", "ambiguous" or "empty"
    variant: str | None
    slot: str | None
    candidates: list

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "variant": self.variant,
            "slot": self.slot,
            "candidates": [c.to_dict() for c in self.candidates],
        }


def evaluate_candidate(chart: ChartModel, variant: str, slot: str, norm_pts: Sequence[FiberPoint],
                       nij_pts: Sequence[FiberPoint], steps: Sequence[float], terms: int = 40,
                       norm_tol: float = 1e-10, limit: float = 1e-6) -> CandidateEvidence:
    fld = StructureField(chart, variant, slot, terms)
    ev = CandidateEvidence(variant, slot)
    norms = []
    for pt in norm_pts:
        try:
            norms.append(normalization_residual(fld, pt))
        except SingularStructure:
            ev.excluded += 1
    if ev.excluded:
        ev.note = f"phi(A) singular at {ev.excluded} of {len(norm_pts)} points"
        return ev
    ev.normalization_max = max(norms)
    ok = ev.normalization_max < norm_tol
    for pt in nij_pts:
        conv = nijenhuis_convergence(fld, pt, steps)
        ev.nijenhuis.append({
            k: {"residuals": list(c.residuals), "order": c.order, "extrapolated": c.extrapolated,
                "passed": c.passes(limit=limit)}
            for k, c in conv.items()
        })
        ok = ok and all(c.passes(limit=limit) for c in conv.values())
    ev.passed = bool(ok)
    if not ok:
        bad = sorted({k for d in ev.nijenhuis for k, v in d.items() if not v["passed"]})
        ev.note = "normalization failed" if ev.normalization_max >= norm_tol else ""
        if bad:
            ev.note = (ev.note + "; " if ev.note else "") + "Nijenhuis not converging for " + ",".join(bad)
    return ev


def _same_structure(chart: ChartModel, c1: CandidateEvidence, c2: CandidateEvidence,
                    pts: Sequence[FiberPoint], terms: int) -> bool:
    f1 = StructureField(chart, c1.variant, c1.slot, terms)
    f2 = StructureField(chart, c2.variant, c2.slot, terms)
    return all(
        np.abs(build_J(f1, p).J - build_J(f2, p).J).max() < 1e-14
        and np.abs(build_J(f1, p).I - build_J(f2, p).I).max() < 1e-14
        for p in pts
    )


def select_variant(chart: ChartModel, seed: int = 0, n_norm: int = 20, n_nij: int = 3,
                   steps: Sequence[float] = (0.02, 0.01, 0.005), terms: int = 40,
                   variants: Sequence[str] = VARIANTS, slots: Sequence[str] = SLOTS) -> SelectionReport:
    """Run every (variant, slot) candidate and keep the ones that pass.

    Candidates that give identical structures at every sample point (e.g. the
    two slots on the flat model) are merged and reported with slot "any".
    """
    rng = np.random.default_rng(seed)
    norm_pts = sample_points(chart, rng, n_norm)
    nij_pts = sample_points(chart, rng, n_nij)
    cands = [evaluate_candidate(chart, v, s, norm_pts, nij_pts, steps, terms) for v in variants for s in slots]
    passing = [c for c in cands if c.passed]
    if not passing:
        return SelectionReport("empty", None, None, cands)
    first = passing[0]
    if all(_same_structure(chart, first, c, norm_pts, terms) for c in passing[1:]):
        slot = first.slot if len(passing) == 1 else "any"
        if len({c.variant for c in passing}) > 1:
            return SelectionReport("ambiguous", None, None, cands)
        return SelectionReport("selected", first.variant, slot, cands)
    return SelectionReport("ambiguous", None, None, cands)
