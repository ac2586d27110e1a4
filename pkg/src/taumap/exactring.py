"""Truncated formal power series in t_1, tbar_1, t_2, tbar_2, ...

Coefficients are Laurent polynomials in t0 with exact rational coefficients,
extended by a single ``log t0`` generator (power at most one).  Truncation is
by *level*: the sum of the indices (with multiplicity) on the unbarred side
and, independently, on the barred side.

A coefficient polynomial is stored as ``{(t0_exp, log_pow): Fraction}``.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

DEFAULT_CUTOFF = 8

Rational = Fraction
Poly = dict  # {(t0_exp, log_pow): Fraction}


class LogPowerError(ArithmeticError):
    """A product would carry ``(log t0)**2`` or higher."""


class ExpDomainError(ValueError):
    """``series_exp`` called on a series outside its exact domain."""


class TMonomial(NamedTuple):
    """Product of t_i (unbarred) and tbar_j (barred); both sides sorted."""

    unbarred: tuple = ()
    barred: tuple = ()

    @property
    def level(self) -> int:
        return sum(self.unbarred)

    @property
    def barred_level(self) -> int:
        return sum(self.barred)

    def sort_key(self):
        return (sum(self.unbarred), sum(self.barred), self.unbarred, self.barred)

    def conjugate(self) -> "TMonomial":
        return TMonomial(self.barred, self.unbarred)

    def multiplicity_factor(self) -> int:
        """prod n_j! * prod nbar_j! over the index multiplicities."""
        out = 1
        for side in (self.unbarred, self.barred):
            run = 1
            for a, b in zip(side, side[1:]):
                if a == b:
                    run += 1
                    out *= run
                else:
                    run = 1
        return out

    @classmethod
    def of(cls, unbarred: Iterable[int] = (), barred: Iterable[int] = ()) -> "TMonomial":
        u, b = tuple(sorted(unbarred)), tuple(sorted(barred))
        if any(i < 1 for i in u + b):
            raise ValueError(f"indices must be >= 1, got {u}|{b}")
        return cls(u, b)

    def __str__(self) -> str:
        if not self.unbarred and not self.barred:
            return "1"
        parts = [f"t{i}" for i in self.unbarred] + [f"tb{i}" for i in self.barred]
        return "*".join(parts)


ONE = TMonomial((), ())


class T0Monomial(NamedTuple):
    """coeff * t0**t0_exp * (log t0)**log_pow."""

    coeff: Fraction
    t0_exp: int
    log_pow: int = 0

    def __str__(self) -> str:
        s = f"{self.coeff}*t0^{self.t0_exp}"
        return s + "*log(t0)" if self.log_pow else s


@lru_cache(maxsize=None)
def _merge(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(a + b))


def _poly_add_into(out: dict, p: Mapping) -> None:
    for k, c in p.items():
        s = out.get(k, 0) + c
        if s:
            out[k] = s
        else:
            out.pop(k, None)


def _poly_mul(p: Mapping, q: Mapping) -> dict:
    out: dict = {}
    for (e1, l1), c1 in p.items():
        for (e2, l2), c2 in q.items():
            lp = l1 + l2
            if lp > 1:
                raise LogPowerError("product would contain (log t0)^2")
            key = (e1 + e2, lp)
            out[key] = out.get(key, 0) + c1 * c2
    return {k: c for k, c in out.items() if c}


def _poly_d0(p: Mapping) -> dict:
    # d/dt0 [c t0^a log^l] = c a t0^(a-1) log^l + l c t0^(a-1)
    out: dict = {}
    for (e, lp), c in p.items():
        if e:
            key = (e - 1, lp)
            out[key] = out.get(key, 0) + c * e
        if lp:
            key = (e - 1, 0)
            out[key] = out.get(key, 0) + c
    return {k: c for k, c in out.items() if c}


def _parse_var(var) -> tuple[str, int]:
    """Accept 't0', 't3', 'tbar3' (or 'tb3'), or a tuple like ('tbar', 3)."""
    if isinstance(var, tuple):
        side, k = var
    else:
        v = str(var)
        if v == "t0":
            return ("t0", 0)
        for prefix in ("tbar", "tb", "t"):
            if v.startswith(prefix) and v[len(prefix):].isdigit():
                side, k = prefix, int(v[len(prefix):])
                break
        else:
            raise ValueError(f"unknown variable {var!r}")
    side = {"tb": "tbar"}.get(side, side)
    if side not in ("t0", "t", "tbar"):
        raise ValueError(f"unknown variable {var!r}")
    if side != "t0" and k < 1:
        raise ValueError(f"index must be >= 1 in {var!r}")
    return side, int(k)


class FormalSeries:
    """Immutable truncated series; see module docstring for the data model."""

    __slots__ = ("cutoff", "_terms")

    def __init__(self, terms: Mapping | None = None, cutoff: int = DEFAULT_CUTOFF):
        if cutoff < 0:
            raise ValueError("cutoff must be nonnegative")
        clean: dict = {}
        for mono, poly in (terms or {}).items():
            mono = TMonomial.of(*mono)
            if mono.level > cutoff or mono.barred_level > cutoff:
                continue
            p = {}
            for (e, lp), c in dict(poly).items():
                if lp not in (0, 1):
                    raise LogPowerError(f"log power {lp} not allowed")
                c = Fraction(c)
                if c:
                    p[(int(e), int(lp))] = p.get((int(e), int(lp)), 0) + c
            p = {k: c for k, c in p.items() if c}
            if p:
                if mono in clean:
                    _poly_add_into(clean[mono], p)
                    if not clean[mono]:
                        del clean[mono]
                else:
                    clean[mono] = p
        self.cutoff = cutoff
        self._terms = clean

    @classmethod
    def _raw(cls, terms: dict, cutoff: int) -> "FormalSeries":
        obj = cls.__new__(cls)
        obj.cutoff = cutoff
        obj._terms = terms
        return obj

    @classmethod
    def monomial(cls, unbarred=(), barred=(), coeff=1, t0_exp: int = 0, log_pow: int = 0,
                 cutoff: int = DEFAULT_CUTOFF) -> "FormalSeries":
        return cls({TMonomial.of(unbarred, barred): {(t0_exp, log_pow): coeff}}, cutoff)

    @classmethod
    def from_terms(cls, items: Iterable[tuple[TMonomial, T0Monomial]],
                   cutoff: int = DEFAULT_CUTOFF) -> "FormalSeries":
        terms: dict = {}
        for mono, t in items:
            p = terms.setdefault(TMonomial.of(*mono), {})
            key = (t.t0_exp, t.log_pow)
            p[key] = p.get(key, 0) + Fraction(t.coeff)
        return cls(terms, cutoff)

    @classmethod
    def zero(cls, cutoff: int = DEFAULT_CUTOFF) -> "FormalSeries":
        return cls._raw({}, cutoff)

    # -- inspection ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = FormalSeries({ONE: {(0, 0): other}}, self.cutoff)
        if not isinstance(other, FormalSeries):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        raise TypeError("FormalSeries is unhashable")

    def monomials(self) -> list[TMonomial]:
        return sorted(self._terms, key=TMonomial.sort_key)

    def coefficient(self, mono) -> list[T0Monomial]:
        mono = TMonomial.of(*mono)
        p = self._terms.get(mono, {})
        return [T0Monomial(c, e, lp) for (e, lp), c in sorted(p.items())]

    def coefficient_poly(self, mono) -> dict:
        return dict(self._terms.get(TMonomial.of(*mono), {}))

    def terms(self) -> Iterator[tuple[TMonomial, list[T0Monomial]]]:
        for mono in self.monomials():
            yield mono, self.coefficient(mono)

    def items(self) -> Iterator[tuple[TMonomial, T0Monomial]]:
        for mono, lst in self.terms():
            for t in lst:
                yield mono, t

    def has_log(self) -> bool:
        return any(lp for p in self._terms.values() for (_, lp) in p)

    def __repr__(self) -> str:
        if not self._terms:
            return f"FormalSeries(0, W={self.cutoff})"
        body = " + ".join(f"({' + '.join(map(str, lst))})*{mono}" for mono, lst in self.terms())
        return f"FormalSeries({body}, W={self.cutoff})"

    # -- ring operations ----------------------------------------------------

    def _coerce(self, other) -> "FormalSeries":
        if isinstance(other, FormalSeries):
            if other.cutoff != self.cutoff:
                raise ValueError(f"cutoff mismatch: {self.cutoff} vs {other.cutoff}")
            return other
        if isinstance(other, (int, Fraction)):
            return FormalSeries({ONE: {(0, 0): other}}, self.cutoff)
        return NotImplemented

    def __add__(self, other) -> "FormalSeries":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = {m: dict(p) for m, p in self._terms.items()}
        for m, p in other._terms.items():
            if m in out:
                _poly_add_into(out[m], p)
                if not out[m]:
                    del out[m]
            else:
                out[m] = dict(p)
        return FormalSeries._raw(out, self.cutoff)

    __radd__ = __add__

    def __neg__(self) -> "FormalSeries":
        return FormalSeries._raw({m: {k: -c for k, c in p.items()} for m, p in self._terms.items()},
                                 self.cutoff)

    def __sub__(self, other) -> "FormalSeries":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "FormalSeries":
        return (-self) + other

    def scale(self, c) -> "FormalSeries":
        c = Fraction(c)
        if not c:
            return FormalSeries.zero(self.cutoff)
        return FormalSeries._raw({m: {k: v * c for k, v in p.items()} for m, p in self._terms.items()},
                                 self.cutoff)

    def shift_t0(self, n: int) -> "FormalSeries":
        """Multiply by t0**n."""
        return FormalSeries._raw({m: {(e + n, lp): c for (e, lp), c in p.items()}
                                  for m, p in self._terms.items()}, self.cutoff)

    def __mul__(self, other) -> "FormalSeries":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return self.mul(other)

    __rmul__ = __mul__

    def mul(self, other: "FormalSeries", max_level: int | None = None,
            max_barred_level: int | None = None) -> "FormalSeries":
        """Product truncated at the cutoff, or tighter per-side bounds."""
        other = self._coerce(other)
        lu_max = self.cutoff if max_level is None else min(max_level, self.cutoff)
        lb_max = self.cutoff if max_barred_level is None else min(max_barred_level, self.cutoff)
        if lu_max < 0 or lb_max < 0:
            return FormalSeries.zero(self.cutoff)
        right = [(m.unbarred, m.barred, m.level, m.barred_level, p) for m, p in other._terms.items()]
        out: dict = {}
        for m1, p1 in self._terms.items():
            u1, b1 = m1.unbarred, m1.barred
            l1, lb1 = sum(u1), sum(b1)
            if l1 > lu_max or lb1 > lb_max:
                continue
            for u2, b2, l2, lb2, p2 in right:
                if l1 + l2 > lu_max or lb1 + lb2 > lb_max:
                    continue
                mono = TMonomial(_merge(u1, u2), _merge(b1, b2))
                acc = out.get(mono)
                if acc is None:
                    acc = out[mono] = {}
                for (e1, g1), c1 in p1.items():
                    for (e2, g2), c2 in p2.items():
                        g = g1 + g2
                        if g > 1:
                            raise LogPowerError("product would contain (log t0)^2")
                        key = (e1 + e2, g)
                        acc[key] = acc.get(key, 0) + c1 * c2
        clean = {}
        for mono, p in out.items():
            p = {k: c for k, c in p.items() if c}
            if p:
                clean[mono] = p
        return FormalSeries._raw(clean, self.cutoff)

    def truncate(self, max_level: int, max_barred_level: int | None = None) -> "FormalSeries":
        lb = max_level if max_barred_level is None else max_barred_level
        return FormalSeries._raw({m: p for m, p in self._terms.items()
                                  if m.level <= max_level and m.barred_level <= lb}, self.cutoff)

    def with_cutoff(self, cutoff: int) -> "FormalSeries":
        return FormalSeries._raw({m: dict(p) for m, p in self._terms.items()
                                  if m.level <= cutoff and m.barred_level <= cutoff}, cutoff)

    def conjugate(self) -> "FormalSeries":
        """Swap barred and unbarred variables."""
        return FormalSeries._raw({m.conjugate(): dict(p) for m, p in self._terms.items()}, self.cutoff)

    def at_origin(self) -> "FormalSeries":
        """Restrict to t_k = tbar_k = 0 (keep the t-free part)."""
        return self.restrict(unbarred=True, barred=True)

    def restrict(self, unbarred: bool = True, barred: bool = False) -> "FormalSeries":
        """Set every unbarred (and/or barred) t_k to zero."""
        return FormalSeries._raw({m: dict(p) for m, p in self._terms.items()
                                  if not (unbarred and m.unbarred) and not (barred and m.barred)},
                                 self.cutoff)

    # -- calculus -----------------------------------------------------------

    def d0(self) -> "FormalSeries":
        out = {}
        for m, p in self._terms.items():
            q = _poly_d0(p)
            if q:
                out[m] = q
        return FormalSeries._raw(out, self.cutoff)

    def dt(self, k: int, barred: bool = False) -> "FormalSeries":
        out: dict = {}
        for m, p in self._terms.items():
            side = m.barred if barred else m.unbarred
            n = side.count(k)
            if not n:
                continue
            pos = side.index(k)
            rest = side[:pos] + side[pos + 1:]
            mono = TMonomial(m.unbarred, rest) if barred else TMonomial(rest, m.barred)
            out[mono] = {key: c * n for key, c in p.items()}
        return FormalSeries._raw(out, self.cutoff)

    def diff(self, var) -> "FormalSeries":
        side, k = _parse_var(var)
        if side == "t0":
            return self.d0()
        return self.dt(k, barred=(side == "tbar"))

    def min_total_level(self) -> int | None:
        if not self._terms:
            return None
        return min(m.level + m.barred_level for m in self._terms)

    def exp(self) -> "FormalSeries":
        """exp(kappa*log t0 + R) = t0**kappa * exp(R), exact.

        ``R`` may not contain log terms and its t-free part must vanish.
        """
        const = self._terms.get(ONE, {})
        kappa = Fraction(0)
        for (e, lp), c in const.items():
            if lp and e == 0:
                kappa = c
            elif lp:
                raise ExpDomainError(f"log term t0^{e}*log(t0) cannot be exponentiated")
            else:
                raise ExpDomainError("t-free regular part must vanish "
                                     f"(found {c}*t0^{e}); exp would leave the exact ring")
        if kappa.denominator != 1 or kappa < 0:
            raise ExpDomainError(f"log coefficient must be a nonnegative integer, got {kappa}")
        reg = {m: p for m, p in self._terms.items() if m != ONE}
        for m, p in reg.items():
            if any(lp for (_, lp) in p):
                raise ExpDomainError(f"log term attached to {m} cannot be exponentiated")
        regular = FormalSeries._raw(reg, self.cutoff)
        one = FormalSeries._raw({ONE: {(int(kappa), 0): Fraction(1)}}, self.cutoff)
        if not reg:
            return one
        # Horner: 1 + R(1 + R/2(1 + R/3(...))) ; R is nilpotent under truncation
        n_max = (2 * self.cutoff) // regular.min_total_level()
        acc = FormalSeries._raw({ONE: {(0, 0): Fraction(1)}}, self.cutoff)
        for n in range(n_max, 0, -1):
            acc = regular.mul(acc).scale(Fraction(1, n)) + 1
        return acc.shift_t0(int(kappa))

    # -- numerics -------------------------------------------------------------

    def evaluate(self, moments: "MomentVector") -> complex:
        """Floating evaluation at numeric moments (deterministic order)."""
        t0 = moments.t0
        if not t0 > 0:
            raise ValueError(f"t0 must be positive, got {t0}")
        log_t0 = math.log(t0)
        total = 0j
        for mono in self.monomials():
            tv = 1 + 0j
            for i in mono.unbarred:
                tv *= moments.t_k(i)
            for i in mono.barred:
                tv *= moments.tbar_k(i)
            if tv == 0:
                continue
            cv = 0.0
            for (e, lp), c in sorted(self._terms[mono].items()):
                x = float(c) * t0 ** e
                cv += x * log_t0 if lp else x
            total += cv * tv
        return total

    # -- serialization ------------------------------------------------------

    def to_json_obj(self) -> dict:
        terms = []
        for mono in self.monomials():
            coeffs = [[str(c.numerator), str(c.denominator), e, lp]
                      for (e, lp), c in sorted(self._terms[mono].items())]
            terms.append([list(mono.unbarred), list(mono.barred), coeffs])
        return {"cutoff": self.cutoff, "terms": terms}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), separators=(",", ":"))

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "FormalSeries":
        terms: dict = {}
        for u, b, coeffs in obj["terms"]:
            p = terms.setdefault(TMonomial.of(u, b), {})
            for num, den, e, lp in coeffs:
                p[(int(e), int(lp))] = Fraction(int(num), int(den))
        return cls(terms, int(obj["cutoff"]))

    @classmethod
    def from_json(cls, text: str) -> "FormalSeries":
        return cls.from_json_obj(json.loads(text))


@dataclass(frozen=True)
class MomentVector:
    """Numeric moments (t0, t_1..t_K, tbar_1..tbar_K)."""

    t0: float
    t: tuple = ()
    tbar: tuple = ()

    def __post_init__(self):
        if not self.t0 > 0:
            raise ValueError(f"t0 must be positive, got {self.t0}")
        if len(self.t) != len(self.tbar):
            raise ValueError("t and tbar must have the same length")

    @classmethod
    def real_domain(cls, t0: float, t: Sequence[complex]) -> "MomentVector":
        t = tuple(complex(x) for x in t)
        return cls(float(t0), t, tuple(x.conjugate() for x in t))

    @property
    def order(self) -> int:
        return len(self.t)

    def t_k(self, k: int) -> complex:
        if not 1 <= k <= len(self.t):
            raise IndexError(f"moment t_{k} not supplied (K={len(self.t)})")
        return self.t[k - 1]

    def tbar_k(self, k: int) -> complex:
        if not 1 <= k <= len(self.tbar):
            raise IndexError(f"moment tbar_{k} not supplied (K={len(self.tbar)})")
        return self.tbar[k - 1]

    def padded(self, order: int) -> "MomentVector":
        """Extend with zero moments up to ``order``."""
        extra = max(0, order - len(self.t))
        return MomentVector(self.t0, self.t + (0j,) * extra, self.tbar + (0j,) * extra)

    def is_conjugate_pair(self, tol: float = 1e-12) -> bool:
        return all(cmath.isclose(a.conjugate(), b, abs_tol=tol) for a, b in zip(self.t, self.tbar))

    def to_json_obj(self) -> dict:
        return {"t0": self.t0,
                "t": [[z.real, z.imag] for z in map(complex, self.t)],
                "tbar": [[z.real, z.imag] for z in map(complex, self.tbar)]}

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "MomentVector":
        t = tuple(complex(re, im) for re, im in obj["t"])
        tbar = obj.get("tbar")
        if tbar is None:
            return cls.real_domain(obj["t0"], t)
        return cls(float(obj["t0"]), t, tuple(complex(re, im) for re, im in tbar))


# Operation-style entry points ---------------------------------------------------

def series_combine(a: FormalSeries, b: FormalSeries, mode: str) -> FormalSeries:
    if a.cutoff != b.cutoff:
        raise ValueError(f"cutoff mismatch: {a.cutoff} vs {b.cutoff}")
    if mode == "add":
        return a + b
    if mode == "mul":
        return a.mul(b)
    raise ValueError(f"mode must be 'add' or 'mul', got {mode!r}")


def series_diff(a: FormalSeries, var) -> FormalSeries:
    return a.diff(var)


def series_exp(a: FormalSeries) -> FormalSeries:
    return a.exp()


def series_eval(a: FormalSeries, m: MomentVector) -> complex:
    return a.evaluate(m)


def homogeneity_defect(mono: TMonomial, t0_exp: int) -> int:
    """2*t0_exp + sum(2 - i) + sum(2 - ibar) - 4; zero for tau-series terms."""
    return (2 * t0_exp + sum(2 - i for i in mono.unbarred)
            + sum(2 - i for i in mono.barred) - 4)
