"""Exact residual checks of the dispersionless Hirota equations on a truncated v.

Generating-variable expansions are stored as ``{(a, b): FormalSeries}``, the
coefficient of z^-a xi^-b.  Equations are normalized so that only
nonnegative powers appear:

    (1)  (1/xi - 1/z) e^{D(z)D(xi)v} = F(z)/xi - F(xi)/z,   F = e^{-d0 D v}
    (3)  1 - e^{-D(z)Dbar(xi)v} = (z xi)^-1 e^{d0(d0 + D(z) + Dbar(xi))v}

(2) is (1) with barred variables.  A truncated v only determines a
coefficient if the t-derivatives it involves, plus the monomial level, stay
within the cutoff; every cell is checked exactly on that window and nowhere
else.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, prod
from typing import Callable, Iterable

from . import combinatorics as cb
from .exactring import ONE, FormalSeries, T0Monomial, TMonomial, homogeneity_defect

BivariateExpansion = dict  # {(a, b): FormalSeries}


@dataclass(frozen=True)
class ResidualEntry:
    a: int
    b: int
    monomial: TMonomial
    term: T0Monomial

    def to_json_obj(self) -> dict:
        c = self.term.coeff
        return {"a": self.a, "b": self.b, "unbarred": list(self.monomial.unbarred),
                "barred": list(self.monomial.barred), "num": str(c.numerator),
                "den": str(c.denominator), "t0_exp": self.term.t0_exp, "log_pow": self.term.log_pow}


@dataclass
class ResidualReport:
    equation: str
    order: int
    cutoff: int
    entries: list = field(default_factory=list)
    cells_checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.entries

    def add_series(self, a: int, b: int, series: FormalSeries) -> None:
        for mono, t in series.items():
            self.entries.append(ResidualEntry(a, b, mono, t))

    def relabeled(self) -> "ResidualReport":
        """Swap barred and unbarred labels (and the cell indices)."""
        entries = [ResidualEntry(e.b, e.a, e.monomial.conjugate(), e.term) for e in self.entries]
        return ResidualReport(self.equation, self.order, self.cutoff,
                              sorted(entries, key=_entry_key), self.cells_checked)

    def entry_set(self) -> set:
        return {(e.a, e.b, e.monomial, e.term) for e in self.entries}

    def to_json_obj(self) -> dict:
        return {"equation": self.equation, "order": self.order, "cutoff": self.cutoff,
                "passed": self.passed, "cells_checked": self.cells_checked,
                "entries": [e.to_json_obj() for e in sorted(self.entries, key=_entry_key)]}


def _entry_key(e: ResidualEntry):
    return (e.a, e.b, e.monomial.sort_key(), e.term.t0_exp, e.term.log_pow)


# -- generating-function helpers ---------------------------------------------

def apply_D(series: FormalSeries, side: str = "unbarred", order: int | None = None) -> BivariateExpansion:
    """D(z) (or Dbar) applied to a series: z^-k coefficient is d_k series / k."""
    if side not in ("unbarred", "barred"):
        raise ValueError(f"side must be 'unbarred' or 'barred', got {side!r}")
    order = series.cutoff if order is None else order
    if order > series.cutoff:
        raise ValueError(f"order {order} exceeds cutoff {series.cutoff}")
    barred = side == "barred"
    out = {}
    for k in range(1, order + 1):
        d = series.dt(k, barred=barred)
        if d:
            out[(0, k) if barred else (k, 0)] = d.scale(Fraction(1, k))
    return out


def _exp_bivariate(x: BivariateExpansion, cutoff: int, max_a: int, max_b: int,
                   window: Callable[[int, int], tuple]) -> BivariateExpansion:
    """exp of an expansion with no (0, 0) cell, each cell truncated to window(a, b)."""
    if (0, 0) in x and x[(0, 0)]:
        raise ValueError("constant cell must vanish")
    e: dict = {(0, 0): FormalSeries({ONE: {(0, 0): 1}}, cutoff)}
    for total in range(1, max_a + max_b + 1):
        for a in range(max(0, total - max_b), min(total, max_a) + 1):
            b = total - a
            lu, lb = window(a, b)
            acc = FormalSeries.zero(cutoff)
            # Euler-operator recurrence in whichever variable has positive degree
            for (c, d), xs in x.items():
                if c > a or d > b or (c, d) == (0, 0):
                    continue
                weight = c if a else d
                if not weight:
                    continue
                prev = e.get((a - c, b - d))
                if prev:
                    acc = acc + xs.mul(prev, lu, lb).scale(weight)
            e[(a, b)] = acc.scale(Fraction(1, a if a else b))
    return e


def _scaled(cells: BivariateExpansion, c) -> BivariateExpansion:
    return {k: s.scale(c) for k, s in cells.items()}


# -- Hirota equations ----------------------------------------------------------

def _check_order(v: FormalSeries, order: int | None) -> int:
    order = v.cutoff if order is None else order
    if order < 1 or order > v.cutoff:
        raise ValueError(f"order {order} outside the exactness window 1..{v.cutoff}")
    return order


def same_side_sides(v: FormalSeries, barred: bool = False, order: int | None = None) -> dict:
    """Both sides of normalized equation 1 (equation 2 if barred), per cell (a, b).

    Cell (a, b) involves t-derivatives of total index a + b - 1 on one side;
    its series are restricted to that side's level <= W - (a + b - 1).
    """
    w = v.cutoff
    order = _check_order(v, order)
    top = order + 1  # largest a + b inspected

    def win(n):  # window for a cell of derivative order n
        return (w - n, w) if not barred else (w, w - n)

    def dd(s, k):
        return s.dt(k, barred=barred)

    x = {}
    for c in range(1, top):
        dc = dd(v, c)
        for d in range(1, top - c + 1):
            if c + d > order:
                continue
            s = dd(dc, d)
            if s:
                x[(c, d)] = s.scale(Fraction(1, c * d))
    e = _exp_bivariate(x, w, order, order, lambda a, b: win(a + b))
    y = {}
    d0v = v.d0()
    for c in range(1, order + 1):
        s = dd(d0v, c)
        if s:
            y[(c, 0)] = s.scale(Fraction(-1, c))
    f = _exp_bivariate(y, w, order, 0, lambda a, b: win(a))
    zero = FormalSeries.zero(w)
    sides = {}
    for a in range(0, top + 1):
        for b in range(0, top + 1 - a):
            if a + b == 0 or a + b - 1 > order:
                continue
            lu, lb = win(a + b - 1)
            lhs = e.get((a, b - 1), zero) - e.get((a - 1, b), zero)
            rhs = zero
            if b == 1:
                rhs = rhs + f.get((a, 0), zero)
            if a == 1:
                rhs = rhs - f.get((b, 0), zero)
            sides[(a, b)] = (lhs.truncate(lu, lb), rhs.truncate(lu, lb))
    return sides


def mixed_sides(v: FormalSeries, order: int | None = None) -> dict:
    """Both sides of normalized equation 3 per cell (a, b), window (W - a, W - b)."""
    w = v.cutoff
    order = _check_order(v, order)
    x = {}
    for c in range(1, order + 1):
        dc = v.dt(c)
        for d in range(1, order + 1):
            s = dc.dt(d, barred=True)
            if s:
                x[(c, d)] = s.scale(Fraction(-1, c * d))
    e = _exp_bivariate(x, w, order, order, lambda a, b: (w - a, w - b))
    d0v = v.d0()
    yz = {(c, 0): s for (c, _), s in apply_D(d0v, "unbarred", order).items()}
    yx = {(0, d): s for (_, d), s in apply_D(d0v, "barred", order).items()}
    fz = _exp_bivariate(yz, w, order, 0, lambda a, b: (w - a - 1, w))
    fx = _exp_bivariate(yx, w, 0, order, lambda a, b: (w, w - b - 1))
    toda = d0v.d0().exp()
    zero = FormalSeries.zero(w)
    one = FormalSeries({ONE: {(0, 0): 1}}, w)
    sides = {}
    for a in range(0, order + 1):
        for b in range(0, order + 1):
            lu, lb = w - a, w - b
            lhs = (one if (a, b) == (0, 0) else zero) - e.get((a, b), zero)
            if a and b:
                pz, px = fz.get((a - 1, 0)), fx.get((0, b - 1))
                rhs = toda.mul(pz, lu, lb).mul(px, lu, lb) if pz and px else zero
            else:
                rhs = zero
            sides[(a, b)] = (lhs.truncate(lu, lb), rhs.truncate(lu, lb))
    return sides


def hirota_sides(v: FormalSeries, eq: int, order: int | None = None) -> dict:
    if eq == 1:
        return same_side_sides(v, barred=False, order=order)
    if eq == 2:
        return same_side_sides(v, barred=True, order=order)
    if eq == 3:
        return mixed_sides(v, order=order)
    raise ValueError(f"equation must be 1, 2 or 3, got {eq!r}")


def hirota_residual(v: FormalSeries, eq: int, order: int | None = None) -> ResidualReport:
    """All nonzero residual coefficients of equation ``eq`` inside the exactness window."""
    order = _check_order(v, order)
    sides = hirota_sides(v, eq, order)
    report = ResidualReport(f"hirota{eq}", order, v.cutoff, cells_checked=len(sides))
    for (a, b) in sorted(sides):
        lhs, rhs = sides[(a, b)]
        report.add_series(a, b, lhs - rhs)
    return report


def toda_field_residual(v: FormalSeries) -> ResidualReport:
    """d_1 dbar_1 v - exp(d0^2 v) on levels <= W - 1 (both sides)."""
    w = v.cutoff
    lhs = v.dt(1).dt(1, barred=True)
    rhs = v.d0().d0().exp()
    report = ResidualReport("toda", 1, w, cells_checked=1)
    report.add_series(1, 1, (lhs - rhs).truncate(w - 1, w - 1))
    return report


# -- dKP consistency -------------------------------------------------------------

Poly = dict  # {sorted tuple of variable labels: Fraction}


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out: dict = defaultdict(Fraction)
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            out[tuple(sorted(m1 + m2))] += c1 * c2
    return {k: c for k, c in out.items() if c}


def _poly_add(p: Poly, q: Poly, scale=1) -> Poly:
    out = defaultdict(Fraction, p)
    for m, c in q.items():
        out[m] += c * scale
    return {k: c for k, c in out.items() if c}


def d1_dn_in_u(n: int) -> Poly:
    """d_1 d_n v in the variables u_p = d0 d_p v."""
    out: dict = defaultdict(Fraction)
    for m in range(1, n + 2):
        sign = 1 if m % 2 else -1
        for ks in cb.compositions(n + 1, m):
            out[tuple(sorted(ks))] += Fraction(sign * n, factorial(m) * prod(ks))
    return {k: c for k, c in out.items() if c}


def didj_in_w(i: int, j: int) -> Poly:
    """d_i d_j v in the variables w_n = d_1 d_n v (bounded-composition route)."""
    out: dict = defaultdict(Fraction)
    for m in range(1, i + j + 1):
        sign = 1 if m % 2 else -1
        for parts in cb.compositions(i + j, m):
            if min(parts) < 2:
                continue
            bounds = [s - 1 for s in parts]
            count = cb.count_bounded_compositions(i, bounds)
            if count:
                out[tuple(sorted(bounds))] += Fraction(sign * i * j * count, m * prod(bounds))
    return {k: c for k, c in out.items() if c}


def didj_in_u(i: int, j: int) -> Poly:
    """d_i d_j v in the variables u_p = d0 d_p v (pair-coefficient route)."""
    out: dict = defaultdict(Fraction)
    for m in range(1, i + j + 1):
        for parts in cb.compositions(i + j, m):
            t = cb.t_pair(i, j, parts)
            if t:
                out[tuple(sorted(parts))] += t * Fraction(i * j, prod(parts))
    return {k: c for k, c in out.items() if c}


def didj_in_u_via_w(i: int, j: int) -> Poly:
    """didj_in_w with each w_n replaced by its expansion in the u_p."""
    total: Poly = {}
    for mono, c in didj_in_w(i, j).items():
        term: Poly = {(): Fraction(1)}
        for n in mono:
            term = _poly_mul(term, d1_dn_in_u(n))
        total = _poly_add(total, term, c)
    return total


def eval_poly(p: Poly, values: dict, zero, one):
    out = zero
    for mono, c in sorted(p.items()):
        term = one
        for var in mono:
            term = term * values[var]
        out = out + term * c
    return out


def _eval_poly_series(p: Poly, values: dict, cutoff: int, max_level: int, barred: bool) -> FormalSeries:
    lu, lb = (max_level, cutoff) if not barred else (cutoff, max_level)
    out = FormalSeries.zero(cutoff)
    for mono, c in sorted(p.items()):
        term = FormalSeries({ONE: {(0, 0): c}}, cutoff)
        for var in mono:
            term = term.mul(values[var], lu, lb)
            if not term:
                break
        out = out + term
    return out


def dkp_consistency(i: int, j: int, v: FormalSeries | None = None, samples: int = 20,
                    rng: random.Random | None = None) -> ResidualReport:
    """Compare d_i d_j v computed through the w_n and directly in the u_p.

    Cell (0, 0) holds the polynomial identity and cell (1, s) random exact
    Cauchy sample s.  When ``v`` is given, cells (2, 0), (3, 0) and (4, n)
    compare against its actual derivatives inside the exactness window.
    """
    cutoff = v.cutoff if v is not None else i + j
    if v is not None and i + j > v.cutoff:
        raise ValueError(f"i + j = {i + j} exceeds cutoff {v.cutoff}")
    report = ResidualReport(f"dkp({i},{j})", i + j, cutoff)
    route_a = didj_in_u_via_w(i, j)
    route_b = didj_in_u(i, j)
    diff = _poly_add(route_a, route_b, -1)
    for mono, c in diff.items():
        report.entries.append(ResidualEntry(0, 0, TMonomial(mono, ()), T0Monomial(c, 0, 0)))
    report.cells_checked += 1

    rng = rng or random.Random(0)
    for s in range(samples):
        vals = {p: Fraction(rng.randint(-50, 50), rng.randint(1, 20)) for p in range(1, i + j + 1)}
        a = eval_poly(route_a, vals, Fraction(0), Fraction(1))
        b = eval_poly(route_b, vals, Fraction(0), Fraction(1))
        if a != b:
            report.entries.append(ResidualEntry(1, s, ONE, T0Monomial(a - b, 0, 0)))
        report.cells_checked += 1

    if v is not None:
        w = v.cutoff
        window = w - (i + j)
        d0v = v.d0()
        u = {p: d0v.dt(p) for p in range(1, i + j + 1)}
        direct = v.dt(i).dt(j).truncate(window, w)
        via_b = _eval_poly_series(route_b, u, w, window, False)
        report.add_series(2, 0, direct - via_b)
        wn = {n: v.dt(1).dt(n) for n in range(1, i + j)}
        via_a = _eval_poly_series(didj_in_w(i, j), wn, w, window, False)
        report.add_series(3, 0, direct - via_a)
        report.cells_checked += 2
        for n in range(1, i + j):
            lw = w - (n + 1)
            lhs = v.dt(1).dt(n).truncate(lw, w)
            rhs = _eval_poly_series(d1_dn_in_u(n), u, w, lw, False)
            report.add_series(4, n, lhs - rhs)
            report.cells_checked += 1
    return report


# -- structural checks ------------------------------------------------------------

def homogeneity_check(v: FormalSeries) -> ResidualReport:
    """Terms violating 2*t0_exp + sum(2 - i) + sum(2 - ibar) = 4."""
    report = ResidualReport("homogeneity", 0, v.cutoff, cells_checked=len(v))
    for mono, t in v.items():
        if homogeneity_defect(mono, t.t0_exp):
            report.entries.append(ResidualEntry(0, 0, mono, t))
    return report


def perturb_series(v: FormalSeries, rng: random.Random) -> tuple[FormalSeries, TMonomial, Fraction]:
    """Add a random nonzero rational to one stored t-dependent coefficient."""
    monos = [m for m in v.monomials() if m != ONE]
    if not monos:
        raise ValueError("no t-dependent coefficient to perturb")
    mono = rng.choice(monos)
    t0_exp = v.coefficient(mono)[0].t0_exp
    delta = Fraction(0)
    while not delta:
        delta = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
    bump = FormalSeries({mono: {(t0_exp, 0): delta}}, v.cutoff)
    return v + bump, mono, delta


def verification_suite(v: FormalSeries, dkp_max: int | None = None, samples: int = 20,
                       seed: int = 0) -> list[ResidualReport]:
    """Every exact check on v; dKP pairs are limited to i + j <= dkp_max."""
    rng = random.Random(seed)
    reports = [toda_field_residual(v)]
    reports += [hirota_residual(v, eq) for eq in (1, 2, 3)]
    top = v.cutoff if dkp_max is None else min(dkp_max, v.cutoff)
    for i in range(1, top):
        for j in range(i, top - i + 1):
            reports.append(dkp_consistency(i, j, v, samples=samples, rng=rng))
    reports.append(homogeneity_check(v))
    return reports


def hirota_suite(v: FormalSeries) -> list[ResidualReport]:
    return [toda_field_residual(v)] + [hirota_residual(v, eq) for eq in (1, 2, 3)]


def all_passed(reports: Iterable[ResidualReport]) -> bool:
    return all(r.passed for r in reports)
