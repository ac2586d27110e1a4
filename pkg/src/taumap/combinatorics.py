"""Coefficient towers P, T_ij, T_{i1..ik}(s; l) and the block weight S.

All values are exact (``int`` or ``Fraction``) and memoized; ``lru_cache`` is
thread-safe, so concurrent callers see one logical table.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from math import comb, factorial, prod
from typing import Iterator, NamedTuple, Sequence


class CompositionQuery(NamedTuple):
    total: int
    bounds: tuple


class TowerKey(NamedTuple):
    indices: tuple
    parts: tuple
    ells: tuple

    def validate(self) -> None:
        k, m = len(self.indices), len(self.parts)
        if k < 2 or m < 1 or len(self.ells) != m:
            raise ValueError(f"malformed tower key {self}")
        if min(self.indices + self.parts + self.ells) < 1:
            raise ValueError(f"tower key entries must be >= 1: {self}")
        if sum(self.parts) != sum(self.indices):
            raise ValueError(f"sum(parts) != sum(indices) in {self}")
        # for k = 2 any non-unit l is a valid key with value 0
        if k > 2 and sum(self.ells) != m + k - 2:
            raise ValueError(f"sum(ells) must be m + k - 2 = {m + k - 2} in {self}")


def compositions(n: int, m: int) -> Iterator[tuple]:
    """Ordered m-tuples of positive integers summing to n."""
    if m < 1 or n < m:
        return
    for cuts in combinations(range(1, n), m - 1):
        edges = (0,) + cuts + (n,)
        yield tuple(b - a for a, b in zip(edges, edges[1:]))


def all_compositions(n: int) -> Iterator[tuple]:
    for m in range(1, n + 1):
        yield from compositions(n, m)


def partitions(n: int, max_part: int | None = None) -> Iterator[tuple]:
    """Integer partitions of n as ascending tuples."""
    if max_part is None:
        max_part = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in partitions(n - first, first):
            yield tuple(sorted(rest + (first,)))


# -- P: bounded compositions -------------------------------------------------

def count_bounded_compositions(total: int, bounds: Sequence[int]) -> int:
    """Number of (x_1..x_m) with 1 <= x_k <= bounds[k] and sum x_k = total."""
    return _count_sorted(total, tuple(sorted(bounds)))


@lru_cache(maxsize=None)
def _count_sorted(total: int, bounds: tuple) -> int:
    if not bounds:
        return 1 if total == 0 else 0
    if min(bounds) < 1 or total < len(bounds) or total > sum(bounds):
        return 0
    head, last = bounds[:-1], bounds[-1]
    return sum(_count_sorted(total - x, head) for x in range(1, min(last, total) + 1))


# -- T_ij ----------------------------------------------------------------------

@lru_cache(maxsize=None)
def t_pair(i: int, j: int, parts: tuple) -> Fraction:
    """Pair coefficient T_ij(p_1..p_m).

    Sum over ordered groupings (n_1..n_q) of m consecutive parts of
    (-1)^(m+1)/q / prod(n_a!) * P(i; group_sum_1 - 1, ..., group_sum_q - 1).
    """
    parts = tuple(parts)
    if sum(parts) != i + j:
        raise ValueError(f"parts {parts} must sum to i + j = {i + j}")
    m = len(parts)
    sign = 1 if m % 2 else -1
    total = Fraction(0)
    for groups in all_compositions(m):
        bounds, pos = [], 0
        for n in groups:
            bounds.append(sum(parts[pos:pos + n]) - 1)
            pos += n
        count = count_bounded_compositions(i, bounds)
        if count:
            total += Fraction(sign * count, len(groups) * prod(factorial(n) for n in groups))
    return total


# -- T_{i1..ik}(s; l) ----------------------------------------------------------

def t_multi(key: TowerKey | tuple, parts: tuple | None = None, ells: tuple | None = None) -> Fraction:
    """Tower coefficient for d_{i1}..d_{ik} v, k >= 2.

    Call as ``t_multi(TowerKey(...))`` or ``t_multi(indices, parts, ells)``.
    """
    if parts is None:
        key = TowerKey(*key)
    else:
        key = TowerKey(tuple(key), tuple(parts), tuple(ells))
    key.validate()
    return _t_multi(key.indices, key.parts, key.ells)


@lru_cache(maxsize=None)
def _t_multi(indices: tuple, parts: tuple, ells: tuple) -> Fraction:
    if len(indices) == 2:
        if all(e == 1 for e in ells):
            return t_pair(indices[0], indices[1], parts)
        return Fraction(0)
    last, head = indices[-1], indices[:-1]
    m = len(parts)
    total = Fraction(0)
    for a in range(m):
        s_sum = l_sum = 0
        denom = 1
        for b in range(a, m):
            s_sum += parts[b]
            l_sum += ells[b] - 1
            denom *= factorial(ells[b] - 1)
            merged_s = s_sum - last
            # a window whose factors all carry l = 1 would have come from an
            # underived d_s v factor, which never occurs for k - 1 >= 2
            if merged_s < 1 or l_sum < 1:
                continue
            inner = _t_multi(head, parts[:a] + (merged_s,) + parts[b + 1:],
                             ells[:a] + (l_sum,) + ells[b + 1:])
            if inner:
                total += inner * t_pair(merged_s, last, parts[a:b + 1]) * Fraction(factorial(l_sum), denom)
    return total


def tower_terms(indices: Sequence[int]) -> Iterator[tuple[tuple, tuple, Fraction]]:
    """Yield (parts, ells, T) with T != 0 for d_{indices} v, k >= 2."""
    indices = tuple(indices)
    k, total = len(indices), sum(indices)
    if k < 2:
        raise ValueError("tower needs at least two indices")
    for m in range(1, total + 1):
        for parts in compositions(total, m):
            for ells in compositions(m + k - 2, m):
                val = _t_multi(indices, parts, ells)
                if val:
                    yield parts, ells, val


# -- block partitions and S ----------------------------------------------------

def ordered_block_partitions(items: Sequence[int], m: int, block_sums: Sequence[int]) -> list[tuple]:
    """Partitions of the labeled items into m ordered nonempty blocks with given sums.

    Each partition is a tuple of m tuples of item positions.
    """
    items, block_sums = tuple(items), tuple(block_sums)
    if len(block_sums) != m:
        raise ValueError("need one block sum per block")
    if sum(items) != sum(block_sums):
        return []
    out = []
    for assign in product(range(m), repeat=len(items)):
        blocks = [[] for _ in range(m)]
        sums = [0] * m
        for pos, blk in enumerate(assign):
            blocks[blk].append(pos)
            sums[blk] += items[pos]
        if all(blocks) and tuple(sums) == block_sums:
            out.append(tuple(tuple(b) for b in blocks))
    return out


def block_weight(s: int, n: int, ell: int) -> int:
    """(s - 1)! / (s - n + 1 - ell)!, zero for a negative argument."""
    arg = s - n + 1 - ell
    if arg < 0:
        return 0
    return factorial(s - 1) // factorial(arg)


def s_weight(barred: Sequence[int], parts: Sequence[int], ells: Sequence[int]) -> Fraction:
    """Block weight S_{barred}(s; l): weighted count of ordered block partitions."""
    parts, ells = tuple(parts), tuple(ells)
    if sum(barred) != sum(parts):
        raise ValueError(f"sum(barred) {sum(barred)} != sum(parts) {sum(parts)}")
    counts = tuple(sorted(Counter(barred).items()))
    return Fraction(_s_count(counts, parts, ells))


@lru_cache(maxsize=None)
def _s_count(counts: tuple, parts: tuple, ells: tuple) -> int:
    # counts: ((value, multiplicity), ...) of the still unassigned labeled items
    if not parts:
        return 1 if all(c == 0 for _, c in counts) else 0
    s, ell = parts[0], ells[0]
    values = [v for v, _ in counts]
    total = 0
    for take in product(*(range(c + 1) for _, c in counts)):
        n = sum(take)
        if n == 0 or sum(v * d for v, d in zip(values, take)) != s:
            continue
        w = block_weight(s, n, ell)
        if not w:
            continue
        ways = prod(comb(c, d) for (_, c), d in zip(counts, take))
        rest = tuple((v, c - d) for (v, c), d in zip(counts, take))
        total += ways * w * _s_count(rest, parts[1:], ells[1:])
    return total


def cache_info() -> dict:
    return {name: fn.cache_info()._asdict() for name, fn in
            (("P", _count_sorted), ("T_pair", t_pair), ("T_multi", _t_multi), ("S", _s_count))}


def clear_caches() -> None:
    for fn in (_count_sorted, t_pair, _t_multi, _s_count):
        fn.cache_clear()
