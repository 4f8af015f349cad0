"""Model Kähler geometries and the curvature operator on the fiber.

Conventions
-----------
* Complex coordinates z = x + i y; real coordinates are ordered
  (x_1..x_n, y_1..y_n) and the complex structure acts by d/dx -> d/dy.
* A real tangent vector v has holomorphic components v^k = v_k + i v_{n+k},
  so v = v^k d_k + conj.
* The real metric is g = 2 Re h, h_{i jbar} = g(d_i, d_jbar).
* R_{i jbar k lbar} = g(R(d_i, d_jbar) d_k, d_lbar) with
  R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]. With this choice the constant
  curvature ansatz (c/2)(h h + h h) has holomorphic sectional curvature c.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SLOTS = ("a", "b")


def complex_structure(n: int) -> np.ndarray:
    """Real matrix of I on R^{2n}, d/dx_k -> d/dy_k."""
    z, e = np.zeros((n, n)), np.eye(n)
    return np.block([[z, -e], [e, z]])


def to_complex(v: np.ndarray) -> np.ndarray:
    n = len(v) // 2
    return v[:n] + 1j * v[n:]


def to_real(w: np.ndarray) -> np.ndarray:
    return np.concatenate([w.real, w.imag])


def constant_curvature_tensor(h: np.ndarray, c: float) -> np.ndarray:
    """R_{i jbar k lbar} = (c/2)(h_{i jbar} h_{k lbar} + h_{i lbar} h_{k jbar})."""
    return 0.5 * c * (np.einsum("ij,kl->ijkl", h, h) + np.einsum("il,kj->ijkl", h, h))


@dataclass(frozen=True, eq=False)
class KahlerModel:
    """Kähler data at one point.

    Attributes
    ----------
    n : int
        Complex dimension.
    h : ndarray, shape (n, n)
        Hermitian metric h_{i jbar}.
    R : ndarray, shape (n, n, n, n)
        Curvature R_{i jbar k lbar}.
    kind : str
        "flat", "cpn", "chn" or "custom".
    c : float
        Holomorphic sectional curvature of the constant curvature models.
    R20 : ndarray, optional
        A (2,0) curvature component; must vanish for a valid model.
    """

    n: int
    h: np.ndarray
    R: np.ndarray
    kind: str = "custom"
    c: float = 0.0
    R20: np.ndarray | None = field(default=None, compare=False)

    @property
    def I(self) -> np.ndarray:
        return complex_structure(self.n)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "c": self.c,
            "h": {"re": self.h.real.tolist(), "im": self.h.imag.tolist()},
            "R": {"re": self.R.real.tolist(), "im": self.R.imag.tolist()},
        }

    @staticmethod
    def from_json(data: dict) -> "KahlerModel":
        h = np.array(data["h"]["re"]) + 1j * np.array(data["h"]["im"])
        R = np.array(data["R"]["re"]) + 1j * np.array(data["R"]["im"])
        return KahlerModel(int(data["n"]), h, R, data.get("kind", "custom"), float(data.get("c", 0.0)))


def _model(kind: str, n: int, c: float, h: np.ndarray | None = None) -> KahlerModel:
    if n < 1:
        raise ValueError("n must be >= 1")
    h = np.eye(n, dtype=complex) if h is None else np.asarray(h, dtype=complex)
    m = KahlerModel(n, h, constant_curvature_tensor(h, c).astype(complex), kind, float(c))
    bad = [k for k, (ok, _) in validate(m).items() if not ok]
    if bad:
        raise ValueError(f"model invariants fail: {bad}")
    return m


def flat(n: int) -> KahlerModel:
    return _model("flat", n, 0.0)


def cpn(n: int, c: float) -> KahlerModel:
    if c <= 0:
        raise ValueError("cpn needs c > 0")
    return _model("cpn", n, c)


def chn(n: int, c: float) -> KahlerModel:
    if c >= 0:
        raise ValueError("chn needs c < 0")
    return _model("chn", n, c)


def make_model(kind: str, n: int, c: float = 0.0) -> KahlerModel:
    if kind == "flat":
        return flat(n)
    if kind == "cpn":
        return cpn(n, c)
    if kind == "chn":
        return chn(n, c)
    raise ValueError(f"unknown model {kind!r}")


def validate(model: KahlerModel, chart: "ChartModel | None" = None, tol: float = 1e-12) -> dict:
    """Run the identity suite; returns ``{name: (ok, residual)}``."""
    h, R = model.h, model.R
    out = {}
    herm = float(np.abs(h - h.conj().T).max())
    out["h_hermitian"] = (herm < tol, herm)
    ev = float(np.linalg.eigvalsh(0.5 * (h + h.conj().T)).min())
    out["h_positive"] = (ev > 0, ev)
    r = float(np.abs(R - R.transpose(2, 1, 0, 3)).max())
    out["sym_unbarred"] = (r < tol, r)
    r = float(np.abs(R - R.transpose(0, 3, 2, 1)).max())
    out["sym_barred"] = (r < tol, r)
    r = float(np.abs(R.conj() - R.transpose(1, 0, 3, 2)).max())
    out["pair_reality"] = (r < tol, r)
    r20 = 0.0 if model.R20 is None else float(np.abs(model.R20).max())
    out["no_20_part"] = (r20 < tol, r20)
    if chart is not None:
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(5):
            z = chart.sample_base(rng, 0.3)
            G = chart.christoffel_at(z)
            worst = max(worst, float(np.abs(G - G.transpose(0, 2, 1)).max()))
        out["torsion_free"] = (worst < tol, worst)
    return out


def holomorphic_sectional_curvature(model: KahlerModel, v: np.ndarray) -> float:
    v = np.asarray(v, dtype=complex)
    num = np.einsum("ijkl,i,j,k,l->", model.R, v, v.conj(), v, v.conj())
    nrm = np.einsum("ij,i,j->", model.h, v, v.conj())
    return float((num / nrm**2).real)


def ricci(model: KahlerModel) -> np.ndarray:
    """Ric_{i jbar} = h^{k lbar} R_{i jbar k lbar}."""
    hinv = np.linalg.inv(model.h)
    return np.einsum("ijkl,lk->ij", model.R, hinv)


def raised_curvature(model: KahlerModel) -> np.ndarray:
    """R_{i jbar k}^m, the action R(d_i, d_jbar) d_k = R^m d_m."""
    return np.einsum("ijkl,lm->ijkm", model.R, np.linalg.inv(model.h))


def real_curvature(model: KahlerModel, X, Y, Z) -> np.ndarray:
    """R(X, Y) Z for real vectors of length 2n."""
    x, y, z = to_complex(np.asarray(X)), to_complex(np.asarray(Y)), to_complex(np.asarray(Z))
    Rup = raised_curvature(model)
    pair = np.outer(x, y.conj()) - np.outer(y, x.conj())
    w = np.einsum("ij,ijkm,k->m", pair, Rup, z)
    return to_real(w)


def contraction_T(model: KahlerModel, xi, slot: str = "a") -> np.ndarray:
    """Vector-side operator T with A(alpha) = alpha o T.

    slot "a": T(Y) = (1/3) R(xi, I Y) I xi.
    slot "b": the other slot order, T(Y) = (1/3) R(I Y, xi) I xi.
    slot "jacobi": (1/3) R(xi, Y) xi, a control that does not annihilate I xi.
    """
    xi = np.asarray(xi, dtype=complex)
    n = model.n
    I = complex_structure(n)
    u = to_real(xi)
    Iu = I @ u
    T = np.zeros((2 * n, 2 * n))
    for b in range(2 * n):
        e = np.zeros(2 * n)
        e[b] = 1.0
        if slot == "a":
            T[:, b] = real_curvature(model, u, I @ e, Iu) / 3.0
        elif slot == "b":
            T[:, b] = real_curvature(model, I @ e, u, Iu) / 3.0
        elif slot == "jacobi":
            T[:, b] = real_curvature(model, u, e, u) / 3.0
        else:
            raise ValueError(f"unknown slot {slot!r}")
    return T


def A_operator(model: KahlerModel, xi, slot: str = "a") -> np.ndarray:
    """Curvature operator on the real cotangent fiber (rows act on covector rows).

    Returned as the matrix acting on covector components: (A alpha)_b =
    sum_a alpha_a T[a, b], i.e. the transpose of `contraction_T`.
    """
    return contraction_T(model, xi, slot).T


def complex_frame(n: int) -> np.ndarray:
    """Real components of d_1..d_n, dbar_1..dbar_n as columns."""
    e = np.eye(n)
    return np.block([[0.5 * e, 0.5 * e], [-0.5j * e, 0.5j * e]])


def covector_matrix_complex(T: np.ndarray) -> np.ndarray:
    """Matrix of alpha -> alpha o T in the basis dz.., dzbar...

    Column j is the image of the j-th basis covector.
    """
    n = T.shape[0] // 2
    P = complex_frame(n)
    Tc = np.linalg.solve(P, T @ P)
    return Tc.T


@dataclass(frozen=True)
class ChartModel:
    """Affine chart of flat space, CP^n or the ball model of CH^n.

    h(z) = (1/a) d dbar log(1 + a|z|^2) with a = c / 2, or the identity when
    c = 0.
    """

    kind: str
    n: int
    c: float = 0.0

    @property
    def a(self) -> float:
        return 0.5 * self.c

    def radius(self) -> float:
        """Radius of the chart domain (inf except for the ball)."""
        return np.inf if self.c >= 0 else 1.0 / np.sqrt(-self.a)

    def check_point(self, z, margin: float = 0.0) -> None:
        if np.linalg.norm(z) + margin >= self.radius():
            raise ValueError("point too close to the chart boundary")

    def metric_at(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.c == 0:
            return np.eye(self.n, dtype=complex)
        q = 1.0 + self.a * np.vdot(z, z).real
        return np.eye(self.n) / q - self.a * np.outer(z.conj(), z) / q**2

    def christoffel_at(self, z) -> np.ndarray:
        """Gamma[m, i, k] = Gamma^m_{ik} = h^{m lbar} d_i h_{k lbar}."""
        z = np.asarray(z, dtype=complex)
        n = self.n
        if self.c == 0:
            return np.zeros((n, n, n), dtype=complex)
        q = 1.0 + self.a * np.vdot(z, z).real
        e = np.eye(n)
        return -self.a * (np.einsum("mi,k->mik", e, z.conj()) + np.einsum("mk,i->mik", e, z.conj())) / q

    def model_at(self, z) -> KahlerModel:
        h = self.metric_at(z)
        return KahlerModel(self.n, h, constant_curvature_tensor(h, self.c).astype(complex), self.kind, self.c)

    def real_metric(self, z) -> np.ndarray:
        """g = 2 Re h in real coordinates."""
        h = self.metric_at(z)
        E = np.vstack([np.eye(self.n), 1j * np.eye(self.n)]).T  # complex comps of real basis
        return 2.0 * np.real(E.T @ h @ E.conj())

    def real_christoffel(self, z) -> np.ndarray:
        """G[a, b, c]: a-th real component of nabla_{e_b} e_c (Levi-Civita)."""
        G = self.christoffel_at(z)
        E = np.vstack([np.eye(self.n), 1j * np.eye(self.n)]).T
        w = np.einsum("mik,ib,kc->mbc", G, E, E)
        return np.concatenate([w.real, w.imag], axis=0)

    def sample_base(self, rng: np.random.Generator, scale: float) -> np.ndarray:
        r = min(scale, 0.5 * self.radius())
        return r * (rng.uniform(-1, 1, self.n) + 1j * rng.uniform(-1, 1, self.n)) / np.sqrt(2)


def chart_for(model: KahlerModel) -> ChartModel:
    return ChartModel(model.kind, model.n, model.c)


@dataclass(frozen=True, eq=False)
class FiberPoint:
    """Point (z, xi) of the total space: base point and fiber vector.

    ``xi`` holds the holomorphic components of a real tangent vector at z.
    """

    z: np.ndarray
    xi: np.ndarray

    @property
    def n(self) -> int:
        return len(self.z)

    def real(self) -> np.ndarray:
        """Real chart coordinates (Re z, Im z, Re xi, Im xi)."""
        return np.concatenate([to_real(np.asarray(self.z, complex)), to_real(np.asarray(self.xi, complex))])

    @staticmethod
    def from_real(p: np.ndarray) -> "FiberPoint":
        k = len(p) // 2
        return FiberPoint(to_complex(p[:k]), to_complex(p[k:]))
