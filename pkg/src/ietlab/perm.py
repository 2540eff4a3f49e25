"""Permutation combinatorics for interval exchanges.

Permutations are 1-based image tuples: ``Permutation((4, 3, 2, 1))`` sends
interval 1 to position 4, and so on.  Everything here is immutable and
pure.
"""

from __future__ import annotations

import functools
import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from . import _linalg as la


class ReducibleError(ValueError):
    """Raised where an irreducible permutation is required."""


@dataclass(frozen=True, order=True)
class Permutation:
    image: tuple[int, ...]

    def __post_init__(self):
        image = tuple(int(x) for x in self.image)
        if sorted(image) != list(range(1, len(image) + 1)):
            raise ValueError(f"{image} is not a permutation of 1..{len(image)}")
        object.__setattr__(self, "image", image)

    @classmethod
    def parse(cls, text: str) -> "Permutation":
        """Read the ``"4 3 2 1"`` text format."""
        try:
            return cls(tuple(int(tok) for tok in text.split()))
        except ValueError as exc:
            raise ValueError(f"bad permutation {text!r}: {exc}") from None

    def __str__(self) -> str:
        return " ".join(map(str, self.image))

    @property
    def d(self) -> int:
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i - 1]

    @functools.cached_property
    def inverse_image(self) -> tuple[int, ...]:
        inv = [0] * self.d
        for i, v in enumerate(self.image, start=1):
            inv[v - 1] = i
        return tuple(inv)

    def inv(self, k: int) -> int:
        return self.inverse_image[k - 1]

    def inverse(self) -> "Permutation":
        return Permutation(self.inverse_image)

    @property
    def is_standard(self) -> bool:
        return self.image[0] == self.d and self.image[-1] == 1


def is_irreducible(pi: Permutation) -> bool:
    seen_max = 0
    for k, v in enumerate(pi.image[:-1], start=1):
        seen_max = max(seen_max, v)
        if seen_max == k:
            return False
    return True


def require_irreducible(pi: Permutation) -> Permutation:
    if not is_irreducible(pi):
        raise ReducibleError(f"permutation {pi} is reducible")
    return pi


def is_rotation(pi: Permutation) -> bool:
    d = pi.d
    return all((pi(i + 1) - pi(i) - 1) % d == 0 for i in range(1, d))


def irreducible_permutations(d: int) -> Iterator[Permutation]:
    for image in itertools.permutations(range(1, d + 1)):
        pi = Permutation(image)
        if is_irreducible(pi):
            yield pi


# --------------------------------------------------------------------------
# singularities and the invariant subspace


@dataclass(frozen=True)
class SingularityData:
    sigma: tuple[int, ...]  # sigma[i] for i in 0..d
    orbits: tuple[tuple[int, ...], ...]
    n_orbits: int
    cone_orders: tuple[int, ...]
    genus: int


def singularity_permutation(pi: Permutation) -> tuple[int, ...]:
    # third case carries a -1 so that sigma is a bijection of {0..d}
    d = pi.d
    sigma = [0] * (d + 1)
    sigma[0] = pi.inv(1) - 1
    for i in range(1, d + 1):
        if i == pi.inv(d):
            sigma[i] = d
        else:
            sigma[i] = pi.inv(pi(i) + 1) - 1
    return tuple(sigma)


@functools.lru_cache(maxsize=None)
def singularity_data(pi: Permutation) -> SingularityData:
    require_irreducible(pi)
    d = pi.d
    sigma = singularity_permutation(pi)
    if sorted(sigma) != list(range(d + 1)):
        raise AssertionError(f"sigma is not a bijection for {pi}")
    seen = [False] * (d + 1)
    orbits = []
    for start in range(d + 1):
        if seen[start]:
            continue
        orbit = []
        j = start
        while not seen[j]:
            seen[j] = True
            orbit.append(j)
            j = sigma[j]
        orbits.append(tuple(sorted(orbit)))
    cone = tuple(sum(1 for j in s if 1 <= j <= d - 1) for s in orbits)
    n = len(orbits)
    twice_genus = d - n + 1
    if twice_genus <= 0 or twice_genus % 2:
        raise AssertionError(f"d - N + 1 = {twice_genus} is not a positive even number for {pi}")
    return SingularityData(sigma, tuple(orbits), n, cone, twice_genus // 2)


def genus(pi: Permutation) -> int:
    return singularity_data(pi).genus


@dataclass(frozen=True)
class HSubspace:
    dim: int
    annihilators: tuple[tuple[int, ...], ...]
    rational_basis: tuple[tuple[Fraction, ...], ...]
    lattice_basis: tuple[tuple[int, ...], ...]

    def contains(self, v) -> bool:
        return all(la.dot(b, v) == 0 for b in self.annihilators)

    def coordinates(self, v) -> tuple[Fraction, ...]:
        """Exact coordinates of ``v`` in the lattice basis."""
        c = la.solve_coordinates(self.lattice_basis, v)
        if c is None:
            raise ValueError(f"{v} is not in H")
        return c

    def basis_matrix(self) -> la.Matrix:
        """d x 2g matrix whose columns are the lattice basis."""
        return la.transpose(self.lattice_basis)


def annihilator(orbit: tuple[int, ...], d: int) -> tuple[int, ...]:
    s = set(orbit)
    return tuple(int(i - 1 in s) - int(i in s) for i in range(1, d + 1))


@functools.lru_cache(maxsize=None)
def h_subspace(pi: Permutation) -> HSubspace:
    """H(pi) as the common kernel of the vectors b^S, one per singularity."""
    data = singularity_data(pi)
    d = pi.d
    ann = tuple(annihilator(s, d) for s in data.orbits)
    rational = la.rational_nullspace(ann, d)
    lattice = la.integer_kernel(ann, d)
    dim = len(lattice)
    if dim != d - data.n_orbits + 1 or len(rational) != dim:
        raise AssertionError(f"dim H mismatch for {pi}")
    return HSubspace(dim, ann, rational, lattice)


# --------------------------------------------------------------------------
# Rauzy moves


def rauzy_move(pi: Permutation, kind: int) -> Permutation:
    """Image of ``pi`` under the elementary operation of type 1 or 2."""
    d = pi.d
    img = pi.image
    if kind == 1:
        p = pi.inv(d)
        new = list(img[:p]) + [img[d - 1]] + list(img[p:d - 1])
    elif kind == 2:
        last = img[d - 1]
        new = [v if v <= last else (v + 1 if v < d else last + 1) for v in img]
    else:
        raise ValueError(f"move type must be 1 or 2, got {kind}")
    return Permutation(tuple(new))


def rauzy_neighbors(pi: Permutation) -> tuple[Permutation, Permutation]:
    require_irreducible(pi)
    return rauzy_move(pi, 1), rauzy_move(pi, 2)


@functools.lru_cache(maxsize=None)
def rauzy_class(pi: Permutation) -> tuple[Permutation, ...]:
    """Members of the Rauzy class of ``pi``, sorted by image tuple."""
    require_irreducible(pi)
    seen = {pi}
    queue = deque([pi])
    while queue:
        cur = queue.popleft()
        for nxt in (rauzy_move(cur, 1), rauzy_move(cur, 2)):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return tuple(sorted(seen))


def rauzy_classes(d: int) -> list[tuple[Permutation, ...]]:
    classes = []
    covered: set[Permutation] = set()
    for pi in irreducible_permutations(d):
        if pi not in covered:
            cls = rauzy_class(pi)
            covered.update(cls)
            classes.append(cls)
    return classes


def standard_members(members) -> tuple[Permutation, ...]:
    return tuple(p for p in members if p.is_standard)


def nr_vectors(pi: Permutation) -> tuple[tuple[int, ...], ...]:
    """The d vectors v^(i) of Nogueira and Rudolph; they span H(pi) when pi is standard."""
    d = pi.d
    out = []
    for i in range(1, d + 1):
        row = []
        for j in range(1, d + 1):
            if pi(j) < pi(i) and j > i:
                row.append(1)
            elif pi(j) > pi(i) and j < i:
                row.append(-1)
            else:
                row.append(0)
        out.append(tuple(row))
    return tuple(out)
