from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from itertools import permutations
from math import factorial

import pytest

from taumap import combinatorics as cb
from taumap.exactring import ONE, FormalSeries, T0Monomial, TMonomial
from taumap.taucoeffs import (
    CauchyData, axis_mixed_derivative, coefficient_keys, n_coeff, n_value,
    reconstruct_pure_derivative, riemann_cauchy_data, tau_series,
)


@pytest.fixture(scope="module")
def v6():
    return tau_series(6)


def t0mono(c, e, lp=0, cutoff=6):
    return FormalSeries({ONE: {(e, lp): c}}, cutoff)


# -- Cauchy data ---------------------------------------------------------------------

def test_riemann_cauchy_data():
    data = riemann_cauchy_data(6)
    assert data.d0v == t0mono(-1, 1) + t0mono(1, 1, 1)
    assert not data[(3, 1)]
    assert data.d00v == t0mono(1, 0, 1)


def test_missing_cauchy_datum_is_named():
    data = CauchyData({}, 4)
    with pytest.raises(KeyError, match=r"d0\^2 d_3 v"):
        data[(3, 2)]


# -- axis values ------------------------------------------------------------------------

@pytest.mark.parametrize("u,b,expected", [
    ((1,), (1,), T0Monomial(1, 1)),
    ((2,), (2,), T0Monomial(2, 2)),
    ((1, 1), (2,), T0Monomial(2, 1)),
    ((1,), (2,), T0Monomial(0, 0)),
])
def test_axis_mixed_derivative(u, b, expected):
    got = axis_mixed_derivative(u, b)
    assert got.coeff == expected.coeff
    if expected.coeff:
        assert got.t0_exp == expected.t0_exp


@pytest.mark.parametrize("u,b,c,e", [((1,), (1,), 1, 1), ((1, 1), (2,), 2, 1), ((1, 1), (1, 1), 0, 0)])
def test_n_coeff_examples(u, b, c, e):
    assert n_coeff((u, b)) == T0Monomial(Fraction(c), e, 0)


def test_n_coeff_ellipse_axis():
    # classical ellipse map: d0^2 v = log t0 - log(1 - 4 t2 tbar2) on the t2 axis,
    # so the coefficient of (t2 tbar2)^n in v is 4^n / (2n) t0^2
    for n in range(1, 5):
        key = TMonomial((2,) * n, (2,) * n)
        t = n_coeff(key)
        assert t.t0_exp == 2
        assert t.coeff / factorial(n) ** 2 == Fraction(4 ** n, 2 * n)


def test_n_coeff_shifted_disk_axis():
    # exterior map (z - c)/R gives d0 d_k v = tbar1^k on the t1 axis
    for k in range(1, 8):
        t = n_coeff(TMonomial((k,), (1,) * k))
        assert t.coeff / factorial(k) == 1 and t.t0_exp == 1
    for n in range(2, 5):
        assert n_coeff(TMonomial((1,) * n, (1,) * n)).coeff == 0


def test_fast_path_agrees_with_general_formula():
    for level in range(1, 7):
        parts = list(cb.partitions(level))
        for u in parts:
            for b in parts:
                if len(u) == 1 or len(b) == 1:
                    assert axis_mixed_derivative(u, b).coeff == n_value(u, b) == n_value(b, u)


def test_n_value_independent_of_input_order():
    for level in range(2, 7):
        for u in cb.partitions(level):
            for b in cb.partitions(level):
                if len(u) < 2 or len(set(u)) == 1 and len(set(b)) == 1:
                    continue
                base = n_coeff((u, b)).coeff
                for pu in set(permutations(u)):
                    assert n_value(pu, b[::-1]) == base


# -- reconstruction ----------------------------------------------------------------------

def test_reconstruct_riemann_data_is_zero():
    assert not reconstruct_pure_derivative((1, 1), riemann_cauchy_data(4))
    assert not reconstruct_pure_derivative((1, 2, 1), riemann_cauchy_data(4))


def test_reconstruct_from_first_derivatives():
    first = {1: t0mono(1, 1, cutoff=4), 2: FormalSeries.zero(4), 3: FormalSeries.zero(4)}
    data = CauchyData.from_first_derivatives(first, 3, 4)
    assert reconstruct_pure_derivative((1, 1), data) == t0mono(Fraction(-1, 2), 2, cutoff=4)


def test_reconstruct_single_index_pass_through():
    d = t0mono(5, 3, cutoff=4)
    data = CauchyData({(2, 0): d}, 4)
    assert reconstruct_pure_derivative((2,), data) == d


def test_reconstruct_reports_missing_entry():
    data = CauchyData.from_first_derivatives({1: t0mono(1, 1, cutoff=4)}, 1, 4)
    with pytest.raises(KeyError, match="d_2"):
        reconstruct_pure_derivative((1, 1), data)


def test_reconstruct_on_barred_axis_matches_series(v6):
    # generic Cauchy data: one-point functions on t = 0 with tbar free
    w = v6.cutoff
    d0v = v6.d0()
    first = {s: d0v.dt(s).restrict(unbarred=True) for s in range(1, w + 1)}
    data = CauchyData.from_first_derivatives(first, w, w)
    for level in range(2, 5):
        for k in range(2, level + 1):
            for idx in cb.compositions(level, k):
                got = reconstruct_pure_derivative(idx, data)
                direct = v6
                for i in idx:
                    direct = direct.dt(i)
                expected = direct.restrict(unbarred=True)
                assert got == expected, idx


# -- tau series --------------------------------------------------------------------------

def test_tau_series_examples(v6):
    assert v6.coefficient(TMonomial((1,), (1,))) == [T0Monomial(1, 1, 0)]
    assert v6.coefficient(TMonomial((1, 1), (2,))) == [T0Monomial(1, 1, 0)]
    assert v6.coefficient(TMonomial((2,), (2,))) == [T0Monomial(2, 2, 0)]
    assert v6.coefficient(ONE) == [T0Monomial(Fraction(-3, 4), 2, 0), T0Monomial(Fraction(1, 2), 2, 1)]


def test_conjugation_symmetry(v6):
    assert v6.conjugate() == v6


def test_levels_match(v6):
    assert all(m.level == m.barred_level for m in v6.monomials())


def test_t0_derivative_at_origin(v6):
    assert v6.d0().at_origin() == t0mono(-1, 1) + t0mono(1, 1, 1)


def test_differentiated_series_reproduces_axis_values(v6):
    for key in coefficient_keys(6):
        d = v6
        for i in key.unbarred:
            d = d.dt(i)
        for i in key.barred:
            d = d.dt(i, barred=True)
        got = d.at_origin().coefficient(ONE)
        expected = n_coeff(key)
        assert got == ([expected] if expected.coeff else []), key


def test_coefficient_keys_order():
    keys = list(coefficient_keys(2))
    assert keys == [TMonomial((1,), (1,)), TMonomial((1, 1), (1, 1)), TMonomial((1, 1), (2,)),
                    TMonomial((2,), (1, 1)), TMonomial((2,), (2,))]


def test_concurrent_computation_is_deterministic():
    keys = list(coefficient_keys(6))
    serial = [n_value(k.unbarred, k.barred) for k in keys]
    cb.clear_caches()
    with ThreadPoolExecutor(max_workers=4) as pool:
        parallel = list(pool.map(lambda k: n_value(k.unbarred, k.barred), keys))
    assert parallel == serial


def test_invalid_cutoff():
    with pytest.raises(ValueError):
        tau_series(0)
