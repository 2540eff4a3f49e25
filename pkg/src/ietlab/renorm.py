"""Rauzy induction, Zorich acceleration and induced cocycles.

Step matrices follow the visitation convention: ``B[i][j]`` counts the
visits of the i-th interval of the induced map to the j-th interval of the
original one before returning, so ``lengths = B^T lengths_after``.
Composites multiply on the left, ``B_n ... B_1``.  Indices are 1-based in
docstrings and 0-based in code.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import gmpy2
from gmpy2 import mpfr

from . import _linalg as la
from .iet import Iet
from .perm import HSubspace, Permutation, h_subspace, rauzy_move, require_irreducible
from .scalars import (
    DEFAULT_PRECISION,
    coerce_vector,
    precision_of,
    random_dirichlet,
    working_precision,
)

DEFAULT_ZORICH_CAP = 2**40
DEFAULT_RETURN_CAP = 20


class HaltOnTie(ArithmeticError):
    """The last two competing intervals have equal length; induction is undefined."""


class DivergenceGuard(RuntimeError):
    """A Zorich run exceeded the configured number of Rauzy steps."""


class NonPositiveWindow(ValueError):
    """The window word's composite matrix has a zero entry."""


class BasisMismatch(ValueError):
    """A matrix does not carry one lattice H(pi) & Z^d onto the other."""


# --------------------------------------------------------------------------
# single steps


def pivot_index(pi: Permutation) -> int:
    """0-based index of the interval that lands last, pi^-1(d) - 1."""
    return pi.inv(pi.d) - 1


def step_kind(lengths: Sequence, pi: Permutation) -> int:
    last = lengths[-1]
    other = lengths[pivot_index(pi)]
    if last < other:
        return 1
    if last > other:
        return 2
    raise HaltOnTie(f"tie between the last interval and interval {pivot_index(pi) + 1}")


@functools.lru_cache(maxsize=None)
def step_matrix(pi: Permutation, kind: int) -> la.Matrix:
    d = pi.d
    p = pivot_index(pi)
    b = [[0] * d for _ in range(d)]
    if kind == 1:
        for j in range(p + 1):
            b[j][j] = 1
        b[p + 1][p] = 1
        b[p + 1][d - 1] = 1
        for j in range(p + 1, d - 1):
            b[j + 1][j] = 1
    elif kind == 2:
        for j in range(d):
            b[j][j] = 1
        b[p][d - 1] = 1
    else:
        raise ValueError(f"step type must be 1 or 2, got {kind}")
    return tuple(tuple(r) for r in b)


def _apply_single(lam: list, pi: Permutation, kind: int) -> Permutation:
    """Mutate ``lam`` by one Rauzy step of the given type; return the new permutation."""
    p = pivot_index(pi)
    if kind == 1:
        last = lam.pop()
        lam[p] = lam[p] - last
        lam.insert(p + 1, last)
    else:
        lam[-1] = lam[-1] - lam[p]
    return rauzy_move(pi, kind)


@dataclass(frozen=True)
class RauzyStep:
    """One Rauzy step, or a composite of ``count`` same-type steps."""

    kind: int
    perm_before: Permutation
    lengths_before: tuple
    perm_after: Permutation
    lengths_after: tuple
    matrix: la.Matrix
    count: int = 1


def rauzy_step(lengths: Sequence, pi: Permutation) -> RauzyStep:
    require_irreducible(pi)
    lengths = _as_lengths(lengths)
    bits = precision_of(lengths)
    with working_precision(bits):
        kind = step_kind(lengths, pi)
        lam = list(lengths)
        after = _apply_single(lam, pi, kind)
    return RauzyStep(kind, pi, lengths, after, tuple(lam), step_matrix(pi, kind))


def _as_lengths(lengths: Sequence) -> tuple:
    lengths = tuple(lengths)
    if precision_of(lengths) is None:
        lengths = coerce_vector(lengths)
    return lengths


def word_matrix(pi: Permutation, word: str) -> tuple[la.Matrix, Permutation]:
    """Composite matrix and end permutation of a Rauzy path given as a string over {1,2}."""
    m = la.identity(pi.d)
    for ch in word:
        kind = int(ch)
        m = la.matmul(step_matrix(pi, kind), m)
        pi = rauzy_move(pi, kind)
    return m, pi


# --------------------------------------------------------------------------
# Zorich acceleration


def cycle_length(pi: Permutation, kind: int) -> int:
    """Number of same-type steps after which the permutation comes back."""
    if kind == 1:
        return pi.d - 1 - pivot_index(pi)
    return pi.d - pi(pi.d)


def _cycle_support(pi: Permutation, kind: int) -> tuple[int, tuple[int, ...]]:
    # (index of the length reduced by a full cycle, indices summed into the reduction)
    d = pi.d
    if kind == 1:
        p = pivot_index(pi)
        return p, tuple(range(p + 1, d))
    top = pi(d)
    return d - 1, tuple(i for i in range(d) if pi.image[i] > top)


@functools.lru_cache(maxsize=None)
def cycle_nilpotent(pi: Permutation, kind: int) -> la.Matrix:
    """C - I, where C is the composite of one full cycle; (C - I)^2 = 0."""
    d = pi.d
    col, rows = _cycle_support(pi, kind)
    n = [[0] * d for _ in range(d)]
    for r in rows:
        n[r][col] = 1
    return tuple(tuple(r) for r in n)


def _ceil_minus_one(pivot, total) -> int:
    # largest k with k * total < pivot
    q = pivot / total
    if isinstance(q, Fraction):
        return math.ceil(q) - 1
    k = int(gmpy2.ceil(q)) - 1
    while k > 0 and k * total >= pivot:
        k -= 1
    return max(k, 0)


def zorich_advance(lam: list, pi: Permutation, cap: int = DEFAULT_ZORICH_CAP
                   ) -> tuple[Permutation, int, int]:
    """One Zorich step in place on ``lam``; returns (new perm, type, Rauzy step count).

    Caller provides the working precision.  The run is accelerated by whole
    cycles, so its cost does not depend on the step count.
    """
    kind = step_kind(lam, pi)
    col, support = _cycle_support(pi, kind)
    total = sum(lam[i] for i in support)
    k = _ceil_minus_one(lam[col], total)
    n = 0
    if k:
        lam[col] = lam[col] - k * total
        n = k * cycle_length(pi, kind)
        if n > cap:
            raise DivergenceGuard(f"Zorich run longer than {cap} Rauzy steps")
        if step_kind(lam, pi) != kind:
            return pi, kind, n
    while True:
        pi = _apply_single(lam, pi, kind)
        n += 1
        if n > cap:
            raise DivergenceGuard(f"Zorich run longer than {cap} Rauzy steps")
        if step_kind(lam, pi) != kind:
            return pi, kind, n


@functools.lru_cache(maxsize=4096)
def _singles_matrix(pi: Permutation, kind: int, r: int) -> tuple[la.Matrix, Permutation]:
    if r == 0:
        return la.identity(pi.d), pi
    prev, at = _singles_matrix(pi, kind, r - 1)
    return la.matmul(step_matrix(at, kind), prev), rauzy_move(at, kind)


def run_matrix(pi: Permutation, kind: int, n: int) -> tuple[la.Matrix, Permutation]:
    """Composite of ``n`` consecutive steps of one type from ``pi``, and the end permutation."""
    m = cycle_length(pi, kind)
    k, r = divmod(n, m)
    singles, end = _singles_matrix(pi, kind, r)
    if not k:
        return singles, end
    nil = cycle_nilpotent(pi, kind)
    d = pi.d
    power = tuple(tuple(int(i == j) + k * nil[i][j] for j in range(d)) for i in range(d))
    return la.matmul(singles, power), end


def zorich_step(lengths: Sequence, pi: Permutation, cap: int = DEFAULT_ZORICH_CAP
                ) -> tuple[RauzyStep, int]:
    """Maximal run of same-type Rauzy steps, as one composite step and its length."""
    require_irreducible(pi)
    lengths = _as_lengths(lengths)
    bits = precision_of(lengths)
    with working_precision(bits):
        lam = list(lengths)
        after, kind, n = zorich_advance(lam, pi, cap)
    matrix, end = run_matrix(pi, kind, n)
    assert end == after
    return RauzyStep(kind, pi, lengths, after, tuple(lam), matrix, n), n


def normalize(lam: list) -> None:
    total = sum(lam)
    for i in range(len(lam)):
        lam[i] = lam[i] / total


def zorich_orbit(lengths: Sequence, pi: Permutation, steps: int,
                 cap: int = DEFAULT_ZORICH_CAP) -> Iterator[tuple[Permutation, int, int, tuple]]:
    """Yield ``(perm_before, type, n, lengths_after)`` along a Zorich orbit.

    Float lengths are renormalised to sum 1 after every step; exact ones
    never are.
    """
    lengths = _as_lengths(lengths)
    bits = precision_of(lengths)
    lam = list(lengths)
    for _ in range(steps):
        with working_precision(bits):
            before = pi
            pi, kind, n = zorich_advance(lam, pi, cap)
            if bits is not None:
                normalize(lam)
            snapshot = tuple(lam)
        yield before, kind, n, snapshot


# --------------------------------------------------------------------------
# the visit-counting oracle


def visitation_matrix_oracle(lengths: Sequence, pi: Permutation, zorich: bool = False) -> la.Matrix:
    """Visit counts r_ij found by iterating the map itself.

    The induced interval is [0, |lambda| - min(lambda_d, lambda_{pi^-1(d)}))
    for one Rauzy step, or the total length left after a Zorich step.  Its
    first-return partition is located from backward orbits of the
    discontinuities and of the right end, then each piece is followed from
    its midpoint until it comes back.
    """
    lengths = tuple(Fraction(x) for x in lengths)
    f = Iet(lengths, pi)
    total = f.total
    last = lengths[-1]
    other = lengths[pivot_index(pi)]
    if last == other:
        raise HaltOnTie("tie")
    if zorich:
        step, _ = zorich_step(lengths, pi)
        cut = sum(step.lengths_after)
    else:
        cut = total - min(last, other)
    f_inv = f.inverse()

    def first_entry(y):
        # first point of the backward orbit of y (y included) inside [0, cut)
        guard = 0
        while not (0 <= y < cut):
            y = f_inv(y)
            guard += 1
            if guard > 10**7:
                raise RuntimeError("backward orbit did not enter the induced interval")
        return y

    marks = {Fraction(0)}
    for y in f.interior_breakpoints():
        marks.add(first_entry(y))
    if cut < total:
        marks.add(first_entry(f_inv(cut)) if cut > 0 else Fraction(0))
    edges = sorted(marks) + [cut]
    rows: list[tuple[int, ...]] = []
    for a, b in zip(edges, edges[1:]):
        if a == b:
            continue
        x = (a + b) / 2
        counts = [0] * pi.d
        while True:
            counts[f.index_of(x) - 1] += 1
            x = f(x)
            if x < cut:
                break
        counts = tuple(counts)
        if not rows or rows[-1] != counts:
            rows.append(counts)
    if len(rows) != pi.d:
        raise AssertionError(f"induced map has {len(rows)} pieces, expected {pi.d}")
    return tuple(rows)


# --------------------------------------------------------------------------
# Hilbert projective metric


def _log(x) -> float:
    if isinstance(x, (Fraction, int)):
        x = Fraction(x)
        return math.log(x.numerator) - math.log(x.denominator)
    if isinstance(x, float):
        return math.log(x)
    return float(gmpy2.log(x))


def hilbert_distance(x: Sequence, y: Sequence) -> float:
    """sup_ij |ln(x_i y_j / (x_j y_i))| between two positive vectors."""
    if len(x) != len(y):
        raise ValueError("dimension mismatch")
    if any(v <= 0 for v in x) or any(v <= 0 for v in y):
        raise ValueError("hilbert_distance needs strictly positive vectors")
    floats = [v for v in (*x, *y) if not isinstance(v, (int, Fraction, float))]
    bits = max((v.precision for v in floats), default=None)
    with working_precision(bits):
        logs = [_log(a) - _log(b) for a, b in zip(x, y)]
    return max(logs) - min(logs)


# --------------------------------------------------------------------------
# restriction to H(pi)


@functools.lru_cache(maxsize=None)
def _lattice_left_inverse(h: HSubspace) -> la.Matrix:
    inv, _ = la.left_inverse(h.basis_matrix())
    return inv


def restrict_linear(b: Sequence[Sequence[int]], h_before: HSubspace, h_after: HSubspace) -> la.Matrix:
    """Matrix of ``b`` from the lattice basis of ``h_before`` to that of ``h_after``.

    Only requires ``b`` to carry the lattice into the target lattice.
    """
    image = la.matmul(b, h_before.basis_matrix())  # d x 2g
    coords = la.matmul(_lattice_left_inverse(h_after), image)
    if any(x.denominator != 1 for row in coords for x in row):
        raise BasisMismatch("image of the lattice is not in the target lattice")
    r = tuple(tuple(int(x) for x in row) for row in coords)
    if la.matmul(h_after.basis_matrix(), r) != tuple(tuple(row) for row in image):
        raise BasisMismatch("image of H is not contained in the target H")
    return r


def restrict_to_h(b: Sequence[Sequence[int]], h_before: HSubspace, h_after: HSubspace) -> la.Matrix:
    """As :func:`restrict_linear`, and the result must be unimodular (lattice onto lattice)."""
    r = restrict_linear(b, h_before, h_after)
    if abs(la.det(r)) != 1:
        raise BasisMismatch("restricted matrix is not unimodular")
    return r


# --------------------------------------------------------------------------
# windows and the induced cocycle


@dataclass(frozen=True)
class Window:
    """The cylinder of lengths whose Rauzy path from ``perm`` starts with ``word``."""

    perm: Permutation
    word: str
    matrix: la.Matrix = field(init=False)
    end_perm: Permutation = field(init=False)
    inverse_transpose: la.Matrix = field(init=False, repr=False)

    def __post_init__(self):
        require_irreducible(self.perm)
        if not self.word or set(self.word) - {"1", "2"}:
            raise ValueError(f"window word must be a non-empty string over 1,2: {self.word!r}")
        m, end = word_matrix(self.perm, self.word)
        if any(x <= 0 for row in m for x in row):
            raise NonPositiveWindow(f"word {self.word} from {self.perm} is not strictly positive")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "end_perm", end)
        object.__setattr__(self, "inverse_transpose", la.inverse_unimodular(la.transpose(m)))

    def contains(self, lengths: Sequence, pi: Permutation | None = None) -> bool:
        if pi is not None and pi != self.perm:
            return False
        return all(v > 0 for v in la.matvec(self.inverse_transpose, lengths))

    def vertices(self) -> tuple[tuple[Fraction, ...], ...]:
        """Corners of the cylinder in the simplex: normalised rows of the window matrix."""
        return tuple(tuple(Fraction(x, sum(row)) for x in row) for row in self.matrix)

    def hilbert_diameter(self) -> float:
        v = self.vertices()
        return max((hilbert_distance(a, b) for a, b in itertools.combinations(v, 2)), default=0.0)

    def sample(self, rng, bits: int = DEFAULT_PRECISION) -> tuple:
        """Uniform point of the cylinder, normalised to sum 1."""
        weights = random_dirichlet(rng, self.perm.d, bits)
        with working_precision(bits):
            rows = [[mpfr(x) / sum(row) for x in row] for row in self.matrix]
            return tuple(sum(w * r[j] for w, r in zip(weights, rows)) for j in range(self.perm.d))


def shortest_positive_word(pi: Permutation, max_length: int = 24) -> str:
    """Lexicographically first among the shortest words with a strictly positive composite."""
    require_irreducible(pi)
    d = pi.d
    layer = [("", la.identity(d), pi)]
    for _ in range(max_length):
        nxt = []
        for word, m, at in layer:
            for kind in (1, 2):
                mm = la.matmul(step_matrix(at, kind), m)
                w = word + str(kind)
                if all(x > 0 for row in mm for x in row):
                    return w
                nxt.append((w, mm, rauzy_move(at, kind)))
        layer = nxt
    raise NonPositiveWindow(f"no positive word of length <= {max_length} from {pi}")


def runs_word(runs: Sequence[tuple[int, int]]) -> str:
    return "".join(str(k) * n for k, n in runs)


def word_runs(word: str) -> tuple[tuple[int, int], ...]:
    return tuple((int(k), len(list(g))) for k, g in itertools.groupby(word))


@dataclass(frozen=True)
class Branch:
    """One branch of the induced map: a return path and its matrices."""

    runs: tuple[tuple[int, int], ...]  # (type, Rauzy steps) per Zorich step
    matrix: la.Matrix
    restricted: la.Matrix

    @property
    def zorich_steps(self) -> int:
        return len(self.runs)

    @property
    def rauzy_steps(self) -> int:
        return sum(n for _, n in self.runs)

    def label(self) -> str:
        return " ".join(f"{k}^{n}" for k, n in self.runs)


class InducedCocycle:
    """First return of the Zorich map to a window, with its branch matrices.

    Branches are discovered lazily (from sampled orbits) or symbolically
    (:meth:`enumerate_branches`) and cached by their run sequence.
    """

    def __init__(self, window: Window, return_cap: int = DEFAULT_RETURN_CAP,
                 precision: int = DEFAULT_PRECISION):
        self.window = window
        self.perm = window.perm
        self.h = h_subspace(window.perm)
        self.return_cap = return_cap
        self.precision = precision
        self._branches: dict[tuple, Branch] = {}

    @property
    def d(self) -> int:
        return self.perm.d

    @property
    def dim(self) -> int:
        return self.h.dim

    def branch(self, runs: tuple[tuple[int, int], ...]) -> Branch:
        b = self._branches.get(runs)
        if b is None:
            m = la.identity(self.d)
            at = self.perm
            for kind, n in runs:
                step, at = run_matrix(at, kind, n)
                m = la.matmul(step, m)
            if at != self.perm:
                raise ValueError(f"runs {runs} do not return to {self.perm}")
            b = Branch(runs, m, restrict_to_h(m, self.h, self.h))
            self._branches[runs] = b
        return b

    @property
    def known_branches(self) -> tuple[Branch, ...]:
        return tuple(self._branches[k] for k in sorted(self._branches))

    def sample(self, rng) -> tuple:
        return self.window.sample(rng, self.precision)

    def first_return(self, lengths: Sequence) -> tuple[Branch, tuple] | None:
        """Follow Zorich steps from a window point until it is back in the window.

        Returns the branch and the (normalised) return point, or ``None`` when
        more than ``return_cap`` Zorich steps are needed.
        """
        lam = list(lengths)
        pi = self.perm
        runs = []
        bits = precision_of(lam)
        with working_precision(bits):
            for _ in range(self.return_cap):
                pi, kind, n = zorich_advance(lam, pi)
                if bits is not None:
                    normalize(lam)
                runs.append((kind, n))
                if pi == self.perm and self.window.contains(lam):
                    return self.branch(tuple(runs)), tuple(lam)
        return None

    def sample_state(self, rng) -> tuple[Permutation, tuple]:
        return self.perm, self.sample(rng)

    def advance(self, state: tuple[Permutation, tuple]):
        """Cocycle-protocol step: (restricted branch matrix, next state), or ``None`` if truncated."""
        got = self.first_return(state[1])
        if got is None:
            return None
        b, x = got
        return b.restricted, (self.perm, x)

    def describe(self) -> dict:
        return {"kind": "induced", "perm": str(self.perm), "window": self.window.word,
                "return_cap": self.return_cap}

    def orbit(self, lengths: Sequence, returns: int) -> tuple[list[Branch], tuple | None]:
        """Branches of up to ``returns`` successive first returns; the point is ``None`` if truncated."""
        out = []
        x = tuple(lengths)
        for _ in range(returns):
            got = self.first_return(x)
            if got is None:
                return out, None
            b, x = got
            out.append(b)
        return out, x

    def enumerate_branches(self, max_rauzy_length: int) -> tuple[Branch, ...]:
        """All return paths with at most ``max_rauzy_length`` Rauzy steps (and
        at most ``return_cap`` Zorich steps), found symbolically."""
        w = self.window.word
        found = []
        for extra in range(0, max_rauzy_length - len(w) + 1):
            for tail in itertools.product("12", repeat=extra):
                u = w + "".join(tail)
                if self._is_return_word(u):
                    found.append(self.branch(word_runs(u)))
        # words shorter than w are prefixes of w with (u + w)[:|w|] == w
        for k in range(1, len(w)):
            u = w[:k]
            if (u + w)[:len(w)] == w and self._is_return_word(u):
                found.append(self.branch(word_runs(u)))
        return tuple(sorted(set(found), key=lambda b: (b.rauzy_steps, b.runs)))

    def _is_return_word(self, u: str) -> bool:
        w = self.window.word
        full = u + w
        if full[:len(w)] != w or u[-1] == w[0]:
            return False
        runs = word_runs(u)
        if len(runs) > self.return_cap:
            return False
        at = self.perm
        for t, ch in enumerate(u):
            if t > 0 and u[t - 1] != ch and at == self.perm and full[t:t + len(w)] == w:
                return False  # an earlier visit to the window
            at = rauzy_move(at, int(ch))
        return at == self.perm


def build_induced_cocycle(word: str, pi: Permutation, return_cap: int = DEFAULT_RETURN_CAP,
                          precision: int = DEFAULT_PRECISION) -> InducedCocycle:
    return InducedCocycle(Window(pi, word), return_cap, precision)


@dataclass(frozen=True)
class DistortionReport:
    estimate: float  # largest sampled density ratio over branches
    bound: float  # exp(d * Hilbert diameter of the window)
    branches: int
    samples: int
    coverage: float  # share of samples whose return fit under the cap


def distortion_estimate(cocycle: InducedCocycle, rng, samples: int = 200) -> DistortionReport:
    """Sampled density ratio of inverse branches, against the Hilbert-diameter bound.

    In the simplex chart the inverse branch x -> B^T x / |B^T x| has Jacobian
    |det B| / (1^T B^T x)^d, so its ratio over the window only involves the
    row sums of B.
    """
    d = cocycle.d
    points = [cocycle.sample(rng) for _ in range(samples)]
    hits = 0
    for x in points:
        if cocycle.first_return(x) is not None:
            hits += 1
    worst = 1.0
    pts = [[float(v) for v in x] for x in points]
    for b in cocycle.known_branches:
        rows = [sum(r) for r in b.matrix]
        vals = [sum(rs * xi for rs, xi in zip(rows, x)) for x in pts]
        worst = max(worst, (max(vals) / min(vals)) ** d)
    bound = math.exp(d * cocycle.window.hilbert_diameter())
    return DistortionReport(worst, bound, len(cocycle.known_branches), samples,
                            hits / samples if samples else 0.0)


# --------------------------------------------------------------------------
# the Zorich cocycle itself


@functools.lru_cache(maxsize=None)
def restricted_step(pi: Permutation, kind: int) -> la.Matrix:
    succ = rauzy_move(pi, kind)
    return restrict_to_h(step_matrix(pi, kind), h_subspace(pi), h_subspace(succ))


@functools.lru_cache(maxsize=4096)
def _restricted_singles(pi: Permutation, kind: int, r: int) -> la.Matrix:
    if r == 0:
        return la.identity(h_subspace(pi).dim)
    prev = _restricted_singles(pi, kind, r - 1)
    at = pi
    for _ in range(r - 1):
        at = rauzy_move(at, kind)
    return la.matmul(restricted_step(at, kind), prev)


@functools.lru_cache(maxsize=None)
def _restricted_nilpotent(pi: Permutation, kind: int) -> la.Matrix:
    h = h_subspace(pi)
    return restrict_linear(cycle_nilpotent(pi, kind), h, h)


def restricted_run_matrix(pi: Permutation, kind: int, n: int) -> la.Matrix:
    """Exact restriction to H of the composite of a same-type run of ``n`` steps."""
    k, r = divmod(n, cycle_length(pi, kind))
    singles = _restricted_singles(pi, kind, r)
    if not k:
        return singles
    nil = _restricted_nilpotent(pi, kind)
    dim = len(nil)
    power = tuple(tuple(int(i == j) + k * nil[i][j] for j in range(dim)) for i in range(dim))
    return la.matmul(singles, power)


class ZorichCocycle:
    """The Zorich map with its cocycle restricted to H, one Zorich step per iterate.

    Start points are drawn uniformly from ``window`` when one is given,
    otherwise from the whole simplex at ``perm``.  Each matrix is written in
    the lattice bases of H at its two end permutations, so products along an
    orbit are integer matrices on Z^(2g).
    """

    def __init__(self, perm: Permutation, window: Window | None = None,
                 precision: int = DEFAULT_PRECISION):
        require_irreducible(perm)
        if window is not None and window.perm != perm:
            raise ValueError("window must start at the cocycle's permutation")
        self.perm = perm
        self.window = window
        self.precision = precision
        self.dim = h_subspace(perm).dim

    @property
    def d(self) -> int:
        return self.perm.d

    def sample_state(self, rng) -> tuple[Permutation, tuple]:
        if self.window is not None:
            return self.perm, self.window.sample(rng, self.precision)
        return self.perm, random_dirichlet(rng, self.d, self.precision)

    def advance(self, state: tuple[Permutation, tuple]):
        pi, lengths = state
        lam = list(lengths)
        with working_precision(self.precision):
            after, kind, n = zorich_advance(lam, pi)
            normalize(lam)
        return restricted_run_matrix(pi, kind, n), (after, tuple(lam))

    def describe(self) -> dict:
        return {"kind": "zorich", "perm": str(self.perm),
                "window": self.window.word if self.window else None}
