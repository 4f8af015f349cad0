"""Generating function of the curvature recursion.

The coefficients obey

    f_1 = 1,    (2p + 1) f_p = - sum_{l=1}^{p-1} f_l f_{p-l},

which is the coefficient form of the ODE ``2 z f'(z) + f(z) + f(z)^2 = 3 z``.
Coefficients are kept as exact rationals; floating point only enters when the
series is evaluated on a number or a matrix.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

VARIANTS = ("f", "1pf")
STRATEGIES = ("series", "eigen")
NORMALITY_TOL = 1e-12


@dataclass(frozen=True)
class SeriesF:
    """Exact coefficients f_1..f_N of the generating function.

    Attributes
    ----------
    coeffs : tuple of Fraction
        ``coeffs[p - 1]`` is f_p.
    """

    coeffs: tuple[Fraction, ...]

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, p: int) -> Fraction:
        """Return f_p (1-based)."""
        if p < 1 or p > self.order:
            raise IndexError(f"f_{p} outside 1..{self.order}")
        return self.coeffs[p - 1]


class ScalarEval(NamedTuple):
    value: float
    tail: float
    contracting: bool


def coefficients(n_max: int) -> SeriesF:
    """Compute f_1..f_{n_max} exactly from the recurrence."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    f = [Fraction(1)]
    for p in range(2, n_max + 1):
        conv = sum((f[l - 1] * f[p - l - 1] for l in range(1, p)), Fraction(0))
        f.append(-conv / (2 * p + 1))
    return SeriesF(tuple(f))


def ode_residual(s: SeriesF) -> list[Fraction]:
    """Coefficients of z^1..z^N in ``2 z f' + f + f^2 - 3 z``.

    All entries are exactly zero for a series produced by `coefficients`.
    """
    f = s.coeffs
    out = []
    for p in range(1, s.order + 1):
        conv = sum((f[l - 1] * f[p - l - 1] for l in range(1, p)), Fraction(0))
        out.append((2 * p + 1) * f[p - 1] + conv - (3 if p == 1 else 0))
    return out


def eval_scalar(s: SeriesF, x: float, terms: int | None = None) -> ScalarEval:
    """Evaluate the truncated series sum_{p <= terms} f_p x^p.

    Returns the value, the magnitude of the last term as a crude tail
    indicator, and whether the last few terms shrink (a warning flag when
    they do not, i.e. ``x`` is outside the empirical convergence range).
    """
    terms = s.order if terms is None else terms
    if terms > s.order:
        raise ValueError(f"terms={terms} exceeds series order {s.order}")
    mags = [abs(float(s[p]) * x**p) for p in range(1, terms + 1)]
    value = sum(float(s[p]) * x**p for p in range(1, terms + 1))
    tail = mags[-1] if mags else 0.0
    k = min(4, len(mags))
    last = mags[-k:]
    contracting = all(b <= a for a, b in zip(last, last[1:])) or tail == 0.0
    return ScalarEval(value, tail, contracting)


def eval_derivative(s: SeriesF, x: float, terms: int | None = None) -> float:
    """Derivative of the truncated series at ``x``."""
    terms = s.order if terms is None else terms
    return sum(p * float(s[p]) * x ** (p - 1) for p in range(1, terms + 1))


def is_normal(A: np.ndarray, tol: float = NORMALITY_TOL) -> bool:
    A = np.asarray(A)
    Ah = A.conj().T
    return np.linalg.norm(A @ Ah - Ah @ A, 2) < tol


def eval_endo(
    s: SeriesF,
    A: np.ndarray,
    variant: str = "1pf",
    terms: int | None = None,
    strategy: str = "series",
) -> np.ndarray:
    """Apply phi = f or phi = 1 + f to a square matrix.

    Parameters
    ----------
    s : SeriesF
        Coefficients.
    A : ndarray, shape (d, d)
        Real or complex square matrix.
    variant : {"f", "1pf"}
        Whether the constant term 1 is included.
    terms : int, optional
        Truncation order, defaults to ``s.order``.
    strategy : {"series", "eigen"}
        Horner evaluation of the matrix polynomial, or the scalar series
        applied to eigenvalues of a normal matrix.

    Returns
    -------
    ndarray
        phi(A), with the dtype of A promoted as needed.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    terms = s.order if terms is None else terms
    if terms > s.order:
        raise ValueError(f"terms={terms} exceeds series order {s.order}")
    eye = np.eye(A.shape[0])
    if strategy == "series":
        out = float(s[terms]) * eye
        for p in range(terms - 1, 0, -1):
            out = out @ A + float(s[p]) * eye
        out = out @ A
    elif strategy == "eigen":
        if not is_normal(A):
            raise ValueError("eigendecomposition strategy needs a normal matrix")
        w, V = np.linalg.eig(A)
        fw = np.array([sum(float(s[p]) * z**p for p in range(1, terms + 1)) for z in w])
        out = V @ np.diag(fw) @ np.linalg.inv(V)
        if np.isrealobj(A):
            out = out.real
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    if variant == "1pf":
        out = out + eye
    return out


def write_csv(s: SeriesF, path) -> None:
    """Write the coefficient table with columns p, numerator, denominator."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "numerator", "denominator"])
        for p, c in enumerate(s.coeffs, start=1):
            w.writerow([p, c.numerator, c.denominator])


def read_csv(path) -> SeriesF:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return SeriesF(tuple(Fraction(int(r["numerator"]), int(r["denominator"])) for r in rows))


def from_list(values: Sequence) -> SeriesF:
    """Wrap arbitrary values (e.g. a tampered series) without validation."""
    return SeriesF(tuple(Fraction(v) for v in values))
