"""Taylor coefficients of the dispersionless Toda free energy v at t_k = tbar_k = 0.

Every mixed derivative d_I dbar_Ibar v restricted to the t0 axis is a single
t0 monomial ``N * t0**(i - k - kbar + 2)`` where i is the common level.  The
engine reconstructs the unbarred derivatives from one-point functions
(``pure_derivative_polynomial``) and distributes the barred derivatives over
the factors (``combinatorics.s_weight``).
"""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from math import factorial, prod
from typing import Iterator, Mapping, Sequence

from . import combinatorics as cb
from .exactring import ONE, FormalSeries, T0Monomial, TMonomial

CoeffKey = TMonomial


def coeff_exponent(key: CoeffKey) -> int:
    return key.level - len(key.unbarred) - len(key.barred) + 2


def leading_series(cutoff: int) -> FormalSeries:
    """1/2 t0^2 log t0 - 3/4 t0^2, the t-free part of v."""
    return FormalSeries({ONE: {(2, 1): Fraction(1, 2), (2, 0): Fraction(-3, 4)}}, cutoff)


# -- Cauchy data ---------------------------------------------------------------

class CauchyData:
    """One-point functions d0^l d_s v on the t0 axis, keyed by (s, l).

    Values are ``FormalSeries`` (usually t-free).  ``(s, 0)`` entries hold
    d_s v itself; ``d0v`` and ``d00v`` hold the pure t0 derivatives.
    """

    def __init__(self, one_point: Mapping[tuple, FormalSeries], cutoff: int,
                 d0v: FormalSeries | None = None, d00v: FormalSeries | None = None):
        self.cutoff = cutoff
        self._data = dict(one_point)
        self.d0v = d0v
        self.d00v = d00v

    def __getitem__(self, key: tuple) -> FormalSeries:
        try:
            return self._data[key]
        except KeyError:
            s, ell = key
            raise KeyError(f"missing Cauchy datum d0^{ell} d_{s} v (s={s}, l={ell})") from None

    def __contains__(self, key) -> bool:
        return key in self._data

    def keys(self):
        return self._data.keys()

    @classmethod
    def from_first_derivatives(cls, first: Mapping[int, FormalSeries], max_ell: int, cutoff: int,
                               values: Mapping[int, FormalSeries] | None = None) -> "CauchyData":
        """Build d0^l d_s v for l <= max_ell from d0 d_s v by differentiating in t0."""
        data = {}
        for s, f in first.items():
            cur = f
            for ell in range(1, max_ell + 1):
                data[(s, ell)] = cur
                cur = cur.d0()
        for s, f in (values or {}).items():
            data[(s, 0)] = f
        return cls(data, cutoff)


def riemann_cauchy_data(cutoff: int) -> CauchyData:
    """Cauchy data of the circle family: d_k v = 0, d0 v = -t0 + t0 log t0."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    zero = FormalSeries.zero(cutoff)
    data = {(s, ell): zero for s in range(1, cutoff + 1) for ell in range(0, cutoff + 1)}
    lead = leading_series(cutoff)
    return CauchyData(data, cutoff, d0v=lead.d0(), d00v=lead.d0().d0())


# -- unbarred reconstruction ---------------------------------------------------

@lru_cache(maxsize=None)
def pure_derivative_polynomial(indices: tuple) -> dict:
    """d_{indices} v as a polynomial in the one-point functions d0^l d_s v.

    Returns ``{sorted ((s, l), ...): coefficient}`` with the prefactor
    prod(indices)/prod(s) included and ordered tower terms symmetrized.
    """
    indices = tuple(indices)
    if len(indices) == 1:
        return {((indices[0], 0),): Fraction(1)}
    pre = prod(indices)
    poly: dict = defaultdict(Fraction)
    for parts, ells, val in cb.tower_terms(indices):
        factors = tuple(sorted(zip(parts, ells)))
        poly[factors] += val * Fraction(pre, prod(parts))
    return {k: v for k, v in poly.items() if v}


def reconstruct_pure_derivative(indices: Sequence[int], data: CauchyData) -> FormalSeries:
    """Evaluate d_{indices} v from Cauchy data (any solution of the hierarchy)."""
    indices = tuple(indices)
    if sum(indices) > data.cutoff:
        raise ValueError(f"level {sum(indices)} exceeds cutoff {data.cutoff}")
    out = FormalSeries.zero(data.cutoff)
    for factors, coeff in pure_derivative_polynomial(indices).items():
        term = None
        for f in factors:
            val = data[f]
            if not val:
                term = None
                break
            term = val if term is None else term.mul(val)
        else:
            if term is not None:
                out = out + term.scale(coeff)
    return out


# -- N coefficients ------------------------------------------------------------

def _single_index_value(single: int, multi: tuple) -> Fraction:
    # d_i dbar_{j1..jn} v at t=0: prod(j) * i!/(i - n + 1)! when sum(j) = i
    n = len(multi)
    if sum(multi) != single or single - n + 1 < 0:
        return Fraction(0)
    return Fraction(prod(multi) * factorial(single), factorial(single - n + 1))


def n_value(unbarred: Sequence[int], barred: Sequence[int]) -> Fraction:
    """Rational N for the (possibly unsorted) index lists."""
    unbarred, barred = tuple(unbarred), tuple(barred)
    level = sum(unbarred)
    if not unbarred or not barred or level != sum(barred):
        return Fraction(0)
    k, kbar = len(unbarred), len(barred)
    if k == 1:
        return _single_index_value(unbarred[0], barred)
    if level - k - kbar + 2 < 0:
        # each factor's t0 power is >= 0, so a negative total power forces zero
        return Fraction(0)
    pre = prod(unbarred) * prod(barred)
    total = Fraction(0)
    for m in range(1, min(level, kbar) + 1):
        for parts in cb.compositions(level, m):
            for ells in cb.compositions(m + k - 2, m):
                w = cb.s_weight(barred, parts, ells)
                if w:
                    total += w * cb._t_multi(unbarred, parts, ells)
    return total * pre


@lru_cache(maxsize=None)
def _n_cached(unbarred: tuple, barred: tuple) -> Fraction:
    return n_value(unbarred, barred)


def n_coeff(key) -> T0Monomial:
    """N(I | Ibar) * t0**(i - k - kbar + 2); zero when the levels differ."""
    key = CoeffKey.of(*key)
    return T0Monomial(_n_cached(key.unbarred, key.barred), coeff_exponent(key), 0)


def axis_mixed_derivative(unbarred: Sequence[int], barred: Sequence[int]) -> T0Monomial:
    """d_I dbar_Ibar v at t = 0 as a single t0 monomial."""
    key = CoeffKey.of(unbarred, barred)
    exp = coeff_exponent(key)
    if len(key.unbarred) == 1 and key.barred:
        return T0Monomial(_single_index_value(key.unbarred[0], key.barred), exp, 0)
    if len(key.barred) == 1 and key.unbarred:
        return T0Monomial(_single_index_value(key.barred[0], key.unbarred), exp, 0)
    return n_coeff(key)


# -- tau series ------------------------------------------------------------------

def coefficient_keys(cutoff: int) -> Iterator[CoeffKey]:
    """All keys with equal levels 1..cutoff, level by level, canonical order."""
    for level in range(1, cutoff + 1):
        parts = sorted(cb.partitions(level))
        for u in parts:
            for b in parts:
                yield CoeffKey(u, b)


def coefficient_table(cutoff: int) -> list[tuple[CoeffKey, T0Monomial]]:
    return [(key, n_coeff(key)) for key in coefficient_keys(cutoff)]


def tau_series(cutoff: int) -> FormalSeries:
    """Truncated v: leading t0 part plus N/(prod n_j! prod nbar_j!) terms."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    terms = {ONE: {(2, 1): Fraction(1, 2), (2, 0): Fraction(-3, 4)}}
    for key, t in coefficient_table(cutoff):
        if t.coeff:
            terms[key] = {(t.t0_exp, 0): t.coeff / key.multiplicity_factor()}
    return FormalSeries(terms, cutoff)


def table_to_json_obj(table: Sequence[tuple[CoeffKey, T0Monomial]]) -> list[dict]:
    return [{"unbarred": list(key.unbarred), "barred": list(key.barred),
             "num": str(t.coeff.numerator), "den": str(t.coeff.denominator),
             "t0_exp": t.t0_exp} for key, t in table]
