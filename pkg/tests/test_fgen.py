from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from canhk import fgen

EXPECTED = [Fraction(1), Fraction(-1, 5), Fraction(2, 35), Fraction(-3, 175), Fraction(2, 385)]


def bernoulli_coeff(p: int) -> Fraction:
    # 1 + f(z) = y coth y with y^2 = 3z
    r = sp.Rational(4**p * 3**p) * sp.bernoulli(2 * p) / sp.factorial(2 * p)
    return Fraction(int(r.p), int(r.q))


def test_first_coefficients():
    s = fgen.coefficients(5)
    assert list(s.coeffs) == EXPECTED
    assert s[1] == 1 and s.order == 5
    with pytest.raises(IndexError):
        s[0]
    with pytest.raises(IndexError):
        s[6]


def test_rejects_empty_order():
    with pytest.raises(ValueError):
        fgen.coefficients(0)


def test_ode_residual_exactly_zero():
    assert all(r == 0 for r in fgen.ode_residual(fgen.coefficients(16)))


def test_ode_residual_detects_tampering():
    res = fgen.ode_residual(fgen.from_list([1, Fraction(-1, 4)]))
    assert res == [0, Fraction(-1, 4)]


@pytest.mark.parametrize("p", range(1, 21))
def test_bernoulli_closed_form(p):
    assert fgen.coefficients(20)[p] == bernoulli_coeff(p)


def test_sympy_ode_oracle():
    z = sp.symbols("z")
    N = 12
    a = sp.symbols(f"a1:{N + 1}")
    f = sum(a[k] * z ** (k + 1) for k in range(N))
    expr = sp.expand(2 * z * sp.diff(f, z) + f + f**2 - 3 * z)
    sol = {}
    for k in range(1, N + 1):
        eq = expr.coeff(z, k).subs(sol)
        sol[a[k - 1]] = sp.solve(eq, a[k - 1])[0]
    s = fgen.coefficients(N)
    for k in range(N):
        r = sol[a[k]]
        assert s[k + 1] == Fraction(int(r.p), int(r.q))


@pytest.mark.parametrize("x", [-0.8, -0.3, 0.05, 0.4, 0.9])
def test_scalar_matches_closed_form(x):
    s = fgen.coefficients(60)
    y = np.sqrt(3 * abs(x))
    exact = y / np.tanh(y) - 1 if x > 0 else y / np.tan(y) - 1
    ev = fgen.eval_scalar(s, x)
    assert ev.value == pytest.approx(exact, abs=1e-13)
    assert ev.contracting


def test_scalar_flags_divergence():
    s = fgen.coefficients(40)
    assert not fgen.eval_scalar(s, 5.0).contracting
    with pytest.raises(ValueError):
        fgen.eval_scalar(s, 0.1, terms=41)


def test_derivative_against_difference():
    s = fgen.coefficients(40)
    x, h = 0.3, 1e-5
    fd = (fgen.eval_scalar(s, x + h).value - fgen.eval_scalar(s, x - h).value) / (2 * h)
    assert fgen.eval_derivative(s, x) == pytest.approx(fd, rel=1e-8)


def _sym(rng, d, scale):
    X = rng.normal(size=(d, d))
    return scale * (X + X.T) / (2 * np.sqrt(d))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), d=st.integers(1, 6))
def test_endo_commutes_and_matches_eigen(seed, d):
    rng = np.random.default_rng(seed)
    A = _sym(rng, d, 0.4)
    s = fgen.coefficients(40)
    for variant in fgen.VARIANTS:
        P = fgen.eval_endo(s, A, variant)
        assert np.abs(P @ A - A @ P).max() < 1e-13
        Q = fgen.eval_endo(s, A, variant, strategy="eigen")
        assert np.abs(P - Q).max() < 1e-12


def test_endo_variants_differ_by_identity():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(4, 4)) * 0.1
    s = fgen.coefficients(30)
    diff = fgen.eval_endo(s, A, "1pf") - fgen.eval_endo(s, A, "f")
    assert np.abs(diff - np.eye(4)).max() < 1e-15


def test_endo_truncation_stable():
    rng = np.random.default_rng(2)
    A = _sym(rng, 5, 0.3)
    s = fgen.coefficients(60)
    assert np.abs(fgen.eval_endo(s, A, terms=40) - fgen.eval_endo(s, A, terms=60)).max() < 1e-15


def test_endo_nilpotent_exact():
    N = np.diag([1.0, 1.0], k=1)  # N^3 = 0
    s = fgen.coefficients(10)
    expect = float(s[1]) * N + float(s[2]) * N @ N
    assert np.abs(fgen.eval_endo(s, N, "f") - expect).max() == 0.0


def test_endo_input_validation():
    s = fgen.coefficients(5)
    with pytest.raises(ValueError):
        fgen.eval_endo(s, np.zeros((2, 3)))
    with pytest.raises(ValueError):
        fgen.eval_endo(s, np.eye(2), variant="g")
    with pytest.raises(ValueError):
        fgen.eval_endo(s, np.diag([1.0], k=1), strategy="eigen")
    with pytest.raises(ValueError):
        fgen.eval_endo(s, np.eye(2), strategy="pade")


def test_csv_round_trip(tmp_path):
    s = fgen.coefficients(16)
    path = tmp_path / "f.csv"
    fgen.write_csv(s, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "p,numerator,denominator"
    assert lines[2] == "2,-1,5"
    assert fgen.read_csv(path) == s
