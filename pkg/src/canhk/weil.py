"""Fiberwise Weil algebra and the even-degree curvature recursion.

The algebra is free graded-commutative on 4n generators

    s_i      S^{1,-1}   even
    sbar_i   S^{-1,1}   even
    lam_i    L^{1,0}    odd
    lambar_i L^{0,1}    odd

with numeric complex coefficients at a single point of the base. A monomial
is stored as ``(sexp, lam)``: ``sexp`` is a tuple of 2n exponents
(s_0..s_{n-1}, sbar_0..sbar_{n-1}) and ``lam`` a strictly increasing tuple of
odd indices in 0..2n-1 (lam_i is i, lambar_i is n + i). Every element
carries its fiber dimension so that degree bookkeeping is exact.

Conventions
-----------
* Graded Leibniz rule ``D(xy) = D(x) y + (-1)^{|D||x|} x D(y)``, with |x| the
  exterior degree.
* Supercommutator ``{a, b} = ab - (-1)^{|a||b|} ba``, so ab + ba for two odd maps.
* Real structure: antilinear, lam_i <-> lambar_i and s_i <-> -sbar_i.
* Component names C^{1,0}, C^{0,1}, sigma^{-1,0}, sigma^{0,-1} record the
  change in the number of (lam, lambar) factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement
from typing import Callable, Iterable, Sequence

import numpy as np

Mono = tuple  # (sexp: tuple[int, ...], lam: tuple[int, ...])
KINDS = ("s", "sbar", "lam", "lambar")


def _sort_sign(seq: Sequence[int]):
    """Sort odd indices, returning (tuple, sign), or None on a repeat."""
    arr = list(seq)
    if len(set(arr)) != len(arr):
        return None
    inv = sum(1 for i in range(len(arr)) for j in range(i + 1, len(arr)) if arr[i] > arr[j])
    return tuple(sorted(arr)), (-1 if inv % 2 else 1)


def _merge_sign(a: tuple, b: tuple):
    """Product lam_a * lam_b of two sorted words."""
    if not a:
        return b, 1
    if not b:
        return a, 1
    inv = 0
    for x in a:
        for y in b:
            if x == y:
                return None
            if x > y:
                inv += 1
    return tuple(sorted(a + b)), (-1 if inv % 2 else 1)


def _add_exp(e1: tuple, e2: tuple) -> tuple:
    return tuple(x + y for x, y in zip(e1, e2))


@dataclass(frozen=True)
class WeilElement:
    """Element of the fiberwise Weil algebra.

    Attributes
    ----------
    n : int
        Fiber (complex) dimension.
    terms : dict
        Map ``(sexp, lam) -> complex`` with no zero entries.
    """

    n: int
    terms: dict = field(default_factory=dict, compare=False)

    # construction
    @staticmethod
    def zero(n: int) -> "WeilElement":
        return WeilElement(n, {})

    @staticmethod
    def const(n: int, c: complex = 1.0) -> "WeilElement":
        return WeilElement(n, {((0,) * (2 * n), ()): complex(c)}) if c else WeilElement(n, {})

    @staticmethod
    def monomial(n: int, sexp: Sequence[int], lam: Sequence[int], c: complex = 1.0) -> "WeilElement":
        srt = _sort_sign(lam)
        if srt is None or c == 0:
            return WeilElement(n, {})
        word, sign = srt
        return WeilElement(n, {(tuple(sexp), word): sign * complex(c)})

    @staticmethod
    def gen(n: int, kind: str, i: int) -> "WeilElement":
        """Generator ``kind`` in {"s", "sbar", "lam", "lambar"} with index i."""
        if not 0 <= i < n:
            raise IndexError(i)
        sexp = [0] * (2 * n)
        if kind == "s":
            sexp[i] = 1
            return WeilElement.monomial(n, sexp, ())
        if kind == "sbar":
            sexp[n + i] = 1
            return WeilElement.monomial(n, sexp, ())
        if kind == "lam":
            return WeilElement.monomial(n, sexp, (i,))
        if kind == "lambar":
            return WeilElement.monomial(n, sexp, (n + i,))
        raise ValueError(kind)

    # arithmetic
    def _check(self, other: "WeilElement") -> None:
        if other.n != self.n:
            raise ValueError("fiber dimensions differ")

    def __add__(self, other: "WeilElement") -> "WeilElement":
        self._check(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            w = out.get(k, 0) + v
            if w == 0:
                out.pop(k, None)
            else:
                out[k] = w
        return WeilElement(self.n, out)

    def __neg__(self) -> "WeilElement":
        return WeilElement(self.n, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "WeilElement") -> "WeilElement":
        return self + (-other)

    def scale(self, c: complex) -> "WeilElement":
        if c == 0:
            return WeilElement(self.n, {})
        return WeilElement(self.n, {k: c * v for k, v in self.terms.items()})

    def __rmul__(self, c) -> "WeilElement":
        return self.scale(complex(c))

    def __mul__(self, other):
        if not isinstance(other, WeilElement):
            return self.scale(complex(other))
        self._check(other)
        out: dict = {}
        for (e1, l1), c1 in self.terms.items():
            for (e2, l2), c2 in other.terms.items():
                mg = _merge_sign(l1, l2)
                if mg is None:
                    continue
                word, sign = mg
                key = (_add_exp(e1, e2), word)
                out[key] = out.get(key, 0) + sign * c1 * c2
        return WeilElement(self.n, {k: v for k, v in out.items() if v != 0})

    # inspection
    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(v) <= tol for v in self.terms.values())

    def max_abs(self) -> float:
        return max((abs(v) for v in self.terms.values()), default=0.0)

    def __len__(self) -> int:
        return len(self.terms)

    def filter(self, pred: Callable[[Mono], bool]) -> "WeilElement":
        return WeilElement(self.n, {k: v for k, v in self.terms.items() if pred(k)})

    def truncate(self, max_aug: int) -> "WeilElement":
        """Drop monomials of total augmentation degree above ``max_aug``."""
        return self.filter(lambda k: sum(aug_degree(k, self.n)) <= max_aug)

    def conj(self) -> "WeilElement":
        """Real structure: antilinear, lam <-> lambar, s <-> -sbar."""
        n = self.n
        out: dict = {}
        for (e, l), c in self.terms.items():
            e2 = e[n:] + e[:n]
            sign = -1 if sum(e) % 2 else 1
            word, s2 = _sort_sign([(i + n) % (2 * n) for i in l])
            key = (e2, word)
            out[key] = out.get(key, 0) + sign * s2 * np.conj(c)
        return WeilElement(n, {k: v for k, v in out.items() if v != 0})

    def evaluate(self, s_values: Sequence[complex]) -> dict:
        """Substitute numbers for the 2n even generators.

        Returns a map from odd words to complex coefficients.
        """
        out: dict = {}
        sv = np.asarray(s_values, dtype=complex)
        for (e, l), c in self.terms.items():
            out[l] = out.get(l, 0) + c * np.prod(sv ** np.asarray(e))
        return out


def ext_degree(mono: Mono) -> int:
    return len(mono[1])


def hodge_degree(mono: Mono, n: int) -> tuple[int, int]:
    e, l = mono
    ns, nsb = sum(e[:n]), sum(e[n:])
    nl = sum(1 for i in l if i < n)
    nlb = len(l) - nl
    return ns - nsb + nl, nsb - ns + nlb


def aug_degree(mono: Mono, n: int) -> tuple[int, int]:
    e, l = mono
    nl = sum(1 for i in l if i < n)
    return sum(e[:n]) + nl, sum(e[n:]) + len(l) - nl


def generators(n: int) -> list[WeilElement]:
    """All 4n generators in the order s, sbar, lam, lambar."""
    return [WeilElement.gen(n, k, i) for k in KINDS for i in range(n)]


@dataclass(frozen=True)
class GradedDerivation:
    """Derivation fixed by its values on the 4n generators.

    Attributes
    ----------
    n : int
        Fiber dimension.
    images : tuple of WeilElement
        Values on s_0.., sbar_0.., lam_0.., lambar_0.. (length 4n).
    parity : int
        0 for even, 1 for odd.
    name : str
        Label used in reports.
    """

    n: int
    images: tuple
    parity: int
    name: str = ""
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("fiber dimension must be >= 1")
        if len(self.images) != 4 * self.n:
            raise ValueError("need one image per generator")

    def image(self, kind: str, i: int) -> WeilElement:
        return self.images[KINDS.index(kind) * self.n + i]

    def _apply_mono(self, mono: Mono) -> dict:
        hit = self._cache.get(mono)
        if hit is not None:
            return hit
        n = self.n
        e, l = mono
        out: dict = {}

        def acc(left_e, left_l, elem: WeilElement, right_l, coef):
            for (e2, l2), c2 in elem.terms.items():
                srt = _sort_sign(left_l + l2 + right_l)
                if srt is None:
                    continue
                word, sign = srt
                key = (_add_exp(left_e, e2), word)
                out[key] = out.get(key, 0) + sign * coef * c2

        # even part: D(S) W
        for v in range(2 * n):
            if e[v]:
                img = self.images[v]
                if img.terms:
                    le = list(e)
                    le[v] -= 1
                    acc(tuple(le), (), img, l, e[v])
        # odd part: sum_j (-1)^{|D| j} S w_<j D(w_j) w_>j
        for j, idx in enumerate(l):
            img = self.images[2 * n + idx]
            if img.terms:
                sign = -1 if (self.parity and j % 2) else 1
                acc(e, l[:j], img, l[j + 1:], sign)
        out = {k: v for k, v in out.items() if v != 0}
        self._cache[mono] = out
        return out

    def __call__(self, x: WeilElement) -> WeilElement:
        if x.n != self.n:
            raise ValueError("fiber dimensions differ")
        out: dict = {}
        for mono, c in x.terms.items():
            for k, v in self._apply_mono(mono).items():
                out[k] = out.get(k, 0) + c * v
        return WeilElement(self.n, {k: v for k, v in out.items() if v != 0})

    def scale(self, c: complex) -> "GradedDerivation":
        return GradedDerivation(self.n, tuple(g.scale(c) for g in self.images), self.parity, self.name)

    def __add__(self, other: "GradedDerivation") -> "GradedDerivation":
        if other.parity != self.parity:
            raise ValueError("cannot add derivations of different parity")
        return GradedDerivation(
            self.n, tuple(a + b for a, b in zip(self.images, other.images)), self.parity, self.name
        )

    def restrict(self, kinds: Iterable[str]) -> "GradedDerivation":
        """Keep the images of the listed generator kinds, zero elsewhere."""
        keep = set(kinds)
        imgs = tuple(
            g if KINDS[j // self.n] in keep else WeilElement.zero(self.n) for j, g in enumerate(self.images)
        )
        return GradedDerivation(self.n, imgs, self.parity, self.name)

    def filter_images(self, pred: Callable[[Mono], bool]) -> "GradedDerivation":
        return GradedDerivation(self.n, tuple(g.filter(pred) for g in self.images), self.parity, self.name)

    def max_abs(self) -> float:
        return max(g.max_abs() for g in self.images)


def _derivation(n: int, parity: int, name: str, rule: Callable[[str, int], WeilElement]) -> GradedDerivation:
    imgs = tuple(rule(k, i) for k in KINDS for i in range(n))
    return GradedDerivation(n, imgs, parity, name)


def make_sigma(n: int, part: str = "full") -> GradedDerivation:
    """Contraction sigma: lam_i -> s_i, lambar_i -> -sbar_i, zero on S^1.

    ``part="-1,0"`` keeps only lam -> s, ``part="0,-1"`` only lambar -> -sbar.
    """
    if n < 1:
        raise ValueError("fiber dimension must be >= 1")
    g = WeilElement.gen
    z = WeilElement.zero(n)

    def rule(k, i):
        if k == "lam" and part in ("full", "-1,0"):
            return g(n, "s", i)
        if k == "lambar" and part in ("full", "0,-1"):
            return -g(n, "sbar", i)
        return z

    return _derivation(n, 1, f"sigma[{part}]", rule)


def make_C(n: int, part: str = "full") -> GradedDerivation:
    """Operator C: s_i -> lam_i, sbar_i -> -lambar_i, zero on L^1.

    ``part="1,0"`` keeps only s -> lam, ``part="0,1"`` only sbar -> -lambar.
    """
    if n < 1:
        raise ValueError("fiber dimension must be >= 1")
    g = WeilElement.gen
    z = WeilElement.zero(n)

    def rule(k, i):
        if k == "s" and part in ("full", "1,0"):
            return g(n, "lam", i)
        if k == "sbar" and part in ("full", "0,1"):
            return -g(n, "lambar", i)
        return z

    return _derivation(n, 1, f"C[{part}]", rule)


def supercommutator(a: GradedDerivation, b: GradedDerivation) -> GradedDerivation:
    """{a, b} = a b - (-1)^{|a||b|} b a, again a derivation."""
    if a.n != b.n:
        raise ValueError("fiber dimensions differ")
    sign = -1 if (a.parity * b.parity) % 2 == 0 else 1
    imgs = tuple(a(b(g)) + b(a(g)).scale(sign) for g in generators(a.n))
    return GradedDerivation(a.n, imgs, (a.parity + b.parity) % 2, f"{{{a.name},{b.name}}}")


# weak Hodge condition

@dataclass(frozen=True)
class HodgeVerdict:
    ok: bool
    real: bool
    offending: tuple  # (generator index, monomial, (dp, dq))


def check_weakly_hodge(d: GradedDerivation, tol: float = 1e-12) -> HodgeVerdict:
    """Check reality and the admissible range of Hodge components.

    A map raising the weight (exterior degree) by w is weakly Hodge when it
    commutes with the real structure and every component shifts the Hodge
    bidegree by (a, w - a) with 0 <= a <= w.
    """
    n = d.n
    gens = generators(n)
    offending = []
    for j, (g, img) in enumerate(zip(gens, d.images)):
        (g_mono,) = g.terms
        gp, gq = hodge_degree(g_mono, n)
        gk = ext_degree(g_mono)
        for mono, c in img.terms.items():
            if abs(c) <= tol:
                continue
            dp = hodge_degree(mono, n)[0] - gp
            dq = hodge_degree(mono, n)[1] - gq
            w = ext_degree(mono) - gk
            if dp + dq != w or not (0 <= dp <= w):
                offending.append((j, mono, (dp, dq)))
    real = all((d(g.conj()) - d(g).conj()).is_zero(tol) for g in gens)
    return HodgeVerdict(not offending and real, real, tuple(offending))


# graded pieces and the boundary rule

def piece_basis(n: int, p: int, q: int, m: int, n2: int) -> list[Mono]:
    """Monomial basis of the graded piece B^{p,q}_{m,n2}."""
    out = []
    for a in range(m + 1):
        b = m - a
        if b > n:
            continue
        for c in range(n2 + 1):
            d = n2 - c
            if d > n:
                continue
            if a - c + b != p or c - a + d != q:
                continue
            for sv in combinations_with_replacement(range(n), a):
                for sbv in combinations_with_replacement(range(n), c):
                    e = [0] * (2 * n)
                    for i in sv:
                        e[i] += 1
                    for i in sbv:
                        e[n + i] += 1
                    for lw in combinations(range(n), b):
                        for lbw in combinations(range(n, 2 * n), d):
                            out.append((tuple(e), lw + lbw))
    return out


def operator_matrix(op: Callable[[WeilElement], WeilElement], n: int, basis: Sequence[Mono]):
    """Matrix of ``op`` on span(basis); returns (matrix, target basis)."""
    cols = [op(WeilElement(n, {b: 1.0})) for b in basis]
    target = sorted({k for c in cols for k in c.terms})
    index = {k: i for i, k in enumerate(target)}
    mat = np.zeros((len(target), len(basis)), dtype=complex)
    for j, c in enumerate(cols):
        for k, v in c.terms.items():
            mat[index[k], j] = v
    return mat, target


@dataclass(frozen=True)
class BoundaryVerdict:
    dim: int
    rank: int
    injective: bool
    zero_map: bool
    vacuous: bool
    on_boundary: bool


def boundary_injectivity(n: int, p: int, q: int, m: int, n2: int, which: str = "C10") -> BoundaryVerdict:
    """Rank of C^{1,0} (``which="C10"``) or C^{0,1} (``"C01"``) on B^{p,q}_{m,n2}.

    Injectivity is expected exactly on the boundary pieces: q = n2 - m for
    C^{1,0} and p = m - n2 for C^{0,1}, provided m, n2 >= 1.
    """
    if which not in ("C10", "C01"):
        raise ValueError(which)
    basis = piece_basis(n, p, q, m, n2)
    on_boundary = (q == n2 - m) if which == "C10" else (p == m - n2)
    if not basis:
        return BoundaryVerdict(0, 0, True, True, True, on_boundary)
    op = make_C(n, "1,0" if which == "C10" else "0,1")
    mat, _ = operator_matrix(op, n, basis)
    rank = int(np.linalg.matrix_rank(mat)) if mat.size else 0
    return BoundaryVerdict(len(basis), rank, rank == len(basis), rank == 0, False, on_boundary)


# curvature and the recursion

def _check_model(model) -> None:
    r20 = getattr(model, "R20", None)
    if r20 is not None and np.abs(r20).max() > 1e-12:
        raise ValueError("curvature has a nonzero (2,0) component")


def curvature_action(model) -> GradedDerivation:
    """R_2 = D_1 o D_1 on generators, from the (1,1) curvature of ``model``.

    With s_m the negative of the fiber coordinate xi^m,
    R_2(s_m) = - sum R_{i jbar k}^m s_k lam_i lambar_j, and R_2 is real.
    """
    _check_model(model)
    n = model.n
    Rup = np.einsum("ijkl,lm->ijkm", model.R, np.linalg.inv(model.h))
    zero = WeilElement.zero(n)
    s_imgs = []
    for m in range(n):
        terms: dict = {}
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    c = -Rup[i, j, k, m]
                    if c == 0:
                        continue
                    e = [0] * (2 * n)
                    e[k] = 1
                    key = (tuple(e), (i, n + j))
                    terms[key] = terms.get(key, 0) + c
        s_imgs.append(WeilElement(n, {k: v for k, v in terms.items() if v != 0}))
    sb_imgs = [-x.conj() for x in s_imgs]
    imgs = tuple(s_imgs + sb_imgs + [zero] * (2 * n))
    return GradedDerivation(n, imgs, 0, "R_2")


def _on_S(n: int, parity: int, name: str, fn: Callable[[WeilElement], WeilElement]) -> GradedDerivation:
    gens = generators(n)
    zero = WeilElement.zero(n)
    imgs = tuple(fn(g) if j < 2 * n else zero for j, g in enumerate(gens))
    return GradedDerivation(n, imgs, parity, name)


def d2_from_curvature(model) -> GradedDerivation:
    """D_2 = -(1/3) sigma o R_2 on S^1, zero on L^1."""
    R2 = curvature_action(model)
    sigma = make_sigma(model.n)
    return _on_S(model.n, 1, "D_2", lambda g: sigma(R2(g)).scale(-1.0 / 3.0))


def even_step(p: int, D_so_far: Sequence[GradedDerivation], R2: GradedDerivation | None = None) -> GradedDerivation:
    """D_{2p} = -1/(2p+1) sum_{l=1}^{p-1} sigma o D_{2l} o D_{2(p-l)} on S^1.

    ``D_so_far[l - 1]`` is D_{2l}. For p = 1 the curvature action ``R2`` is
    used instead: D_2 = -(1/3) sigma o R_2.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1:
        if R2 is None:
            raise ValueError("p = 1 needs the curvature action")
        n = R2.n
        sigma = make_sigma(n)
        return _on_S(n, 1, "D_2", lambda g: sigma(R2(g)).scale(-1.0 / 3.0))
    if len(D_so_far) < p - 1:
        raise ValueError(f"need D_2..D_{2 * (p - 1)}")
    n = D_so_far[0].n
    sigma = make_sigma(n)

    def rule(g):
        acc = WeilElement.zero(n)
        for l in range(1, p):
            acc = acc + D_so_far[l - 1](D_so_far[p - l - 1](g))
        return sigma(acc).scale(-1.0 / (2 * p + 1))

    return _on_S(n, 1, f"D_{2 * p}", rule)


def lambda_count_shift(mono: Mono, n: int, gen_mono: Mono) -> tuple[int, int]:
    l = mono[1]
    gl = gen_mono[1]
    nl = sum(1 for i in l if i < n) - sum(1 for i in gl if i < n)
    nlb = (len(l) - sum(1 for i in l if i < n)) - (len(gl) - sum(1 for i in gl if i < n))
    return nl, nlb


def odd_step(p: int, R_k: GradedDerivation) -> GradedDerivation:
    """Odd augmentation degree k = 2p + 1 from an externally supplied R_k.

    D^{0,1}_k = -1/(p+1) sigma^{0,-1} R^{0,2}_k and
    D^{1,0}_k = -1/(p+2) sigma^{-1,0} R^{2,0}_k on s generators, extended to
    sbar by reality and by zero on L^1.
    """
    n = R_k.n
    gens = generators(n)
    for g, img in zip(gens[: 2 * n], R_k.images[: 2 * n]):
        (gm,) = g.terms
        for mono in img.terms:
            if lambda_count_shift(mono, n, gm) not in ((2, 0), (1, 1), (0, 2)):
                raise ValueError("R_k has a component outside types (2,0), (1,1), (0,2)")
    s01 = make_sigma(n, "0,-1")
    s10 = make_sigma(n, "-1,0")
    zero = WeilElement.zero(n)
    s_imgs = []
    for i in range(n):
        g = gens[i]
        (gm,) = g.terms
        img = R_k.images[i]
        r02 = img.filter(lambda k: lambda_count_shift(k, n, gm) == (0, 2))
        r20 = img.filter(lambda k: lambda_count_shift(k, n, gm) == (2, 0))
        s_imgs.append(s01(r02).scale(-1.0 / (p + 1)) + s10(r20).scale(-1.0 / (p + 2)))
    sb_imgs = [-x.conj() for x in s_imgs]
    return GradedDerivation(n, tuple(s_imgs + sb_imgs + [zero] * (2 * n)), 1, f"D_{2 * p + 1}")


@dataclass(frozen=True)
class Recursion:
    """Outcome of running the even recursion to a given augmentation degree.

    Attributes
    ----------
    n : int
    order : int
        Maximal augmentation degree covered.
    R2 : GradedDerivation
        Curvature action.
    D : dict
        ``D[2p]`` for 1 <= p <= order // 2.
    """

    n: int
    order: int
    R2: GradedDerivation
    D: dict


def run_recursion(model, order: int) -> Recursion:
    """Build D_2, D_4, ... up to augmentation degree ``order``."""
    R2 = curvature_action(model)
    Ds: list = []
    for p in range(1, order // 2 + 1):
        Ds.append(even_step(p, Ds, R2))
    return Recursion(model.n, order, R2, {2 * (i + 1): d for i, d in enumerate(Ds)})


def verify_d_square(rec: Recursion, order: int | None = None) -> dict:
    """Max coefficient of each augmentation-degree component of D o D on S^1.

    Degree 0 is C o C. Degree 2 is R_2 + {C, D_2}. Degree 2p >= 4 is
    {C, D_{2p}} + sum_l D_{2l} D_{2(p-l)}. Odd degrees vanish identically in
    the covariantly constant setting (no odd D beyond D_1, torsion zero, and
    D_1 supercommutes with parallel bundle maps); they are reported as 0.
    """
    order = rec.order if order is None else order
    n = rec.n
    C = make_C(n)
    S = generators(n)[: 2 * n]
    out = {0: max(C(C(g)).max_abs() for g in generators(n))}
    for k in range(1, order + 1):
        if k % 2:
            out[k] = 0.0
            continue
        p = k // 2
        res = 0.0
        for g in S:
            r = C(rec.D[k](g))
            if p == 1:
                r = r + rec.R2(g)
            for l in range(1, p):
                r = r + rec.D[2 * l](rec.D[2 * (p - l)](g))
            res = max(res, r.max_abs())
        out[k] = res
    return out


def sigma_residuals(rec: Recursion) -> dict:
    """max |sigma(D_{2p}(g))| over S^1 generators, per p."""
    sigma = make_sigma(rec.n)
    S = generators(rec.n)[: 2 * rec.n]
    return {k: max(sigma(d(g)).max_abs() for g in S) for k, d in rec.D.items()}


def apply_module_map(images: Sequence[WeilElement], x: WeilElement) -> WeilElement:
    """Apply a B^0-linear map of B^1, given on the 2n odd generators."""
    n = x.n
    out = WeilElement.zero(n)
    for (e, l), c in x.terms.items():
        if len(l) != 1:
            raise ValueError("module maps act on exterior degree 1")
        coeff = WeilElement(n, {(e, ()): c})
        out = out + coeff * images[l[0]]
    return out


def a_operator_images(rec: Recursion) -> list[WeilElement]:
    """A = {D_2, sigma} on the odd generators lam_0.., lambar_0.."""
    A = supercommutator(rec.D[2], make_sigma(rec.n))
    return list(A.images[2 * rec.n:])


def fA_residuals(rec: Recursion, series) -> dict:
    """max |{D_{2p}, sigma} - f_p A^p| on the odd generators, per p."""
    n = rec.n
    sigma = make_sigma(n)
    A = a_operator_images(rec)
    odd = generators(n)[2 * n:]
    powers = list(odd)  # A^0 applied to each generator
    out = {}
    for k in sorted(rec.D):
        p = k // 2
        powers = [apply_module_map(A, x) for x in powers]
        lhs = supercommutator(rec.D[k], sigma).images[2 * n:]
        fp = float(series[p])
        out[k] = max((l - r.scale(fp)).max_abs() for l, r in zip(lhs, powers))
    return out


def evaluate_module_map(images: Sequence[WeilElement], xi: Sequence[complex]) -> np.ndarray:
    """Matrix of a module map at the fiber point ``xi`` (holomorphic components).

    Uses s_m = -xi^m and sbar_m = -conj(xi^m). Column j holds the image of the
    j-th odd generator in the basis lam_0.., lambar_0...
    """
    xi = np.asarray(xi, dtype=complex)
    n = len(xi)
    sv = np.concatenate([-xi, -xi.conj()])
    mat = np.zeros((2 * n, 2 * n), dtype=complex)
    for j, img in enumerate(images):
        for word, c in img.evaluate(sv).items():
            if len(word) != 1:
                raise ValueError("expected exterior degree 1")
            mat[word[0], j] += c
    return mat


# serialization

def element_to_json(x: WeilElement) -> list:
    return [
        {"s": list(e), "lam": list(l), "re": float(np.real(c)), "im": float(np.imag(c))}
        for (e, l), c in sorted(x.terms.items())
    ]


def element_from_json(n: int, data: list) -> WeilElement:
    out = WeilElement.zero(n)
    for t in data:
        out = out + WeilElement.monomial(n, t["s"], t["lam"], complex(t["re"], t["im"]))
    return out


def derivation_to_json(d: GradedDerivation) -> dict:
    return {
        "name": d.name,
        "n": d.n,
        "parity": d.parity,
        "images": [element_to_json(g) for g in d.images],
    }


def derivation_from_json(data: dict) -> GradedDerivation:
    n = data["n"]
    imgs = tuple(element_from_json(n, g) for g in data["images"])
    return GradedDerivation(n, imgs, data["parity"], data.get("name", ""))
