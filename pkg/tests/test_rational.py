import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levy_extrema.levy import BrownianDrift, CosechSquaredJumps, StoppingTime, pole_equation, stopped_cf
from levy_extrema.rational import (
    BasisTerm,
    FitError,
    PoleSearchError,
    PoleSet,
    RationalApproximant,
    SearchRegion,
    basis_from_poles,
    estimate_a0,
    evaluate,
    find_poles,
    fit_coefficients,
    fit_error,
)
from levy_extrema.transforms import make_grid

W = np.linspace(-5, 5, 41)


def test_basis_term_values():
    assert np.allclose(BasisTerm("r1", 2.0)(W), 1 / (1j * W + 2))
    assert np.allclose(BasisTerm("r2", 2.0)(W), 1 / (-1j * W + 2))
    s = 1j * W + 1.5
    assert np.allclose(BasisTerm("r3", 1.5, alpha=0.7)(W), 1 / (s * (s * s + 0.49)))
    s = -1j * W + 1.5
    assert np.allclose(BasisTerm("r4", 1.5, alpha=0.7, power=2)(W), 1 / (s * (s * s + 0.49)) ** 2)


@pytest.mark.parametrize("term", [
    BasisTerm("r1", 1.3), BasisTerm("r2", 0.4), BasisTerm("r3", 1.0, alpha=2.0), BasisTerm("r4", 2.0, alpha=0.5),
])
def test_basis_term_roots_and_leading(term):
    ref = term.leading / np.prod([W - r for r in term.roots], axis=0)
    assert np.allclose(term(W), ref, rtol=1e-12)


def test_basis_term_validation():
    for kw in ({"form": "r5", "rate": 1.0}, {"form": "r1", "rate": 0.0}, {"form": "r3", "rate": 1.0},
               {"form": "r1", "rate": 1.0, "alpha": 1.0}, {"form": "r3", "rate": 1.0, "alpha": 1.0, "star": True}):
        with pytest.raises(ValueError):
            BasisTerm(**kw)


def test_approximant_positive_definite_constraints():
    with pytest.raises(ValueError):
        RationalApproximant(0.0, ((BasisTerm("r1", 1.0), -0.1),))
    with pytest.raises(ValueError):
        RationalApproximant(-1.0, ((BasisTerm("r1", 1.0), 0.1),))
    with pytest.raises(ValueError):
        RationalApproximant(0.0, ((BasisTerm("r3", 1.0, alpha=1.0), 0.1),), kind="D*")


@given(
    st.lists(st.tuples(st.sampled_from(["r1", "r2", "r3", "r4"]), st.floats(0.2, 4), st.floats(0.1, 3),
                       st.floats(0.01, 2), st.integers(1, 2)), min_size=1, max_size=4),
    st.floats(0, 1),
)
@settings(max_examples=40, deadline=None)
def test_polynomial_form_reproduces_approximant(spec, a0):
    terms, seen = [], set()
    for form, rate, alpha, c, power in spec:
        t = BasisTerm(form, rate, alpha=alpha if form in ("r3", "r4") else 0.0, power=power)
        if any(abs(r - q) < 1e-3 for r in t.roots for q in seen if (form, rate, alpha) not in seen):
            continue
        terms.append((t, c))
        seen.update(t.roots)
    if not terms:
        return
    r = RationalApproximant(a0, tuple(terms))
    scale, zeros, poles = r.polynomial_form()
    w = np.linspace(-3, 3, 13) + 0.0
    val = scale * np.prod([w - z for z in zeros], axis=0) / np.prod([w - p for p in poles], axis=0)
    assert np.allclose(val, r(w), rtol=1e-6, atol=1e-9)


def test_pole_set_invariants():
    ps = PoleSet((1 + 2j, -1 + 2j, -0.5j))
    assert ps.upper == [1 + 2j, -1 + 2j] and ps.lower == [-0.5j]
    assert ps.groups() == [(1 + 2j, 1), (-0.5j, 1)]
    with pytest.raises(ValueError):
        PoleSet((1 + 2j,))
    with pytest.raises(ValueError):
        PoleSet((1.0 + 0j,))


def test_find_poles_brownian_exact():
    m = BrownianDrift(mu=0.5, sigma=1.0)
    stop = StoppingTime("exponential", 1.0)
    ps = find_poles(pole_equation(m, stop), 2)
    exact = sorted(np.roots([0.5, -0.5j, 1.0]), key=lambda z: z.imag)
    assert np.allclose(sorted(ps.poles, key=lambda z: z.imag), exact, atol=1e-10)


def test_find_poles_cosech_example():
    m = CosechSquaredJumps(mu=2.0, sigma=2.0)
    ps = find_poles(pole_equation(m, StoppingTime("exponential", 5.0)), {"upper": 2, "lower": 1})
    got = sorted(p.imag for p in ps.poles)
    assert got == pytest.approx([-0.47812946866496886, 0.5658104515007115, 1.4920508943876303], abs=1e-9)
    # by modulus the next pole is on the lower side
    total = find_poles(pole_equation(m, StoppingTime("exponential", 5.0)), 3)
    assert sorted(p.imag for p in total.poles)[0] == pytest.approx(-1.3999425256180518, abs=1e-9)


def test_find_poles_off_axis_pairs():
    # zeros of i (w - 1 - 2i)(w + 1 - 2i)(w + 3i), real on the imaginary axis
    f = lambda w: 1j * (w - 1 - 2j) * (w + 1 - 2j) * (w + 3j)
    ps = find_poles(f, 2, SearchRegion(axis_extent=10, re_max=4, im_max=4))
    assert len(ps) == 3
    assert ps.groups()[0][0] == pytest.approx(1 + 2j, abs=1e-9)
    assert any(abs(p + 3j) < 1e-9 for p in ps.poles)


def test_find_poles_errors():
    with pytest.raises(PoleSearchError):
        with pytest.warns(UserWarning):
            find_poles(lambda w: np.ones_like(w) + 0 * w, 1, SearchRegion(axis_extent=2, re_max=1, im_max=1))
    with pytest.raises(ValueError):
        find_poles(lambda w: w - 1j, {"left": 1})
    with pytest.raises(ValueError):
        find_poles(lambda w: w - 1j, 0)


def test_basis_from_poles():
    ps = PoleSet((1j, -2j, 1 + 3j, -1 + 3j))
    b = basis_from_poles(ps, "D")
    assert b == [BasisTerm("r1", 1.0), BasisTerm("r2", 2.0), BasisTerm("r3", 3.0, alpha=1.0)]
    star = basis_from_poles(ps, "D*")
    assert [t.form for t in star] == ["r1", "r2", "r1"] and all(t.star for t in star)
    assert basis_from_poles(PoleSet((1j,), (2,)), "D") == [BasisTerm("r1", 1.0), BasisTerm("r1", 1.0, power=2)]
    with pytest.raises(FitError):
        basis_from_poles(PoleSet(()), "D")


def test_fit_recovers_exact_combination():
    basis = [BasisTerm("r1", 1.0), BasisTerm("r2", 2.0), BasisTerm("r3", 1.5, alpha=0.5)]
    truth = RationalApproximant(0.0, tuple(zip(basis, (0.3, 0.6, 0.9))))
    grid = make_grid(64.0, 2**14)
    fit = fit_coefficients(truth, basis, grid, a0=0.0)
    assert np.allclose(fit.coefficients, [0.3, 0.6, 0.9], atol=1e-9)
    assert fit_error(truth, fit, 2, grid) < 1e-9


def test_fit_brownian_is_exact():
    m = BrownianDrift(mu=0.0, sigma=math.sqrt(2.0))
    stop = StoppingTime("exponential", 1.0)
    h = lambda w: stopped_cf(m, stop, w)
    basis = [BasisTerm("r1", 1.0), BasisTerm("r2", 1.0)]
    grid = make_grid()
    fit = fit_coefficients(h, basis, grid)
    assert fit.a0 == 0.0
    assert np.allclose(fit.coefficients, 0.5, atol=1e-10)
    assert fit_error(h, fit, 2, grid) < 1e-10


def test_fit_is_optimal_under_nonnegativity():
    m = CosechSquaredJumps(mu=2.0, sigma=2.0)
    stop = StoppingTime("exponential", 5.0)
    h = lambda w: stopped_cf(m, stop, w)
    basis = [BasisTerm("r1", 0.5658104515007115), BasisTerm("r1", 1.4920508943876303), BasisTerm("r2", 0.47812946866496886)]
    grid = make_grid()
    fit = fit_coefficients(h, basis, grid)
    best = fit_error(h, fit, 2, grid)
    rng = np.random.default_rng(1)
    for _ in range(20):
        c = np.maximum(fit.coefficients + rng.normal(0, 0.01, 3), 0)
        other = RationalApproximant(0.0, tuple(zip(basis, c)))
        assert fit_error(h, other, 2, grid) >= best - 1e-12


def test_fit_other_order_improves_its_own_norm():
    m = CosechSquaredJumps(mu=2.0, sigma=2.0)
    stop = StoppingTime("exponential", 5.0)
    h = lambda w: stopped_cf(m, stop, w)
    basis = [BasisTerm("r1", 0.5658104515007115), BasisTerm("r1", 1.4920508943876303), BasisTerm("r2", 0.47812946866496886)]
    grid = make_grid(64.0, 2**13)
    f2 = fit_coefficients(h, basis, grid, 2.0)
    f15 = fit_coefficients(h, basis, grid, 1.5)
    assert fit_error(h, f15, 1.5, grid) <= fit_error(h, f2, 1.5, grid) + 1e-12


def test_estimate_a0():
    assert estimate_a0(lambda w: 0.25 + 1 / (1 + np.asarray(w) ** 2), 64.0) == pytest.approx(0.25, abs=1e-6)
    assert estimate_a0(lambda w: 1 / (1 + np.abs(np.asarray(w))), 64.0) == 0.0


def test_evaluate_scalar():
    r = RationalApproximant(0.1, ((BasisTerm("r1", 1.0), 1.0),))
    assert evaluate(r, 0.0) == pytest.approx(1.1)
