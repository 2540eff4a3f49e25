"""The interval exchange map and its suspension flow."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .perm import Permutation, require_irreducible
from .scalars import coerce_vector, precision_of, working_precision


@dataclass(frozen=True)
class Iet:
    """The map f(lambda, pi) on [0, |lambda|).

    ``lengths`` may be Fractions (exact mode) or mpfr values (float mode);
    ints are promoted to Fractions.  Intervals are half-open.
    """

    lengths: tuple
    perm: Permutation
    precision: int | None = field(init=False)
    breakpoints: tuple = field(init=False, repr=False)
    translations: tuple = field(init=False, repr=False)
    total: object = field(init=False, repr=False)

    def __post_init__(self):
        require_irreducible(self.perm)
        lengths = tuple(self.lengths)
        if len(lengths) != self.perm.d:
            raise ValueError(f"{len(lengths)} lengths for a permutation of {self.perm.d} symbols")
        bits = precision_of(lengths)
        if bits is None:
            lengths = coerce_vector(lengths)
        if any(x <= 0 for x in lengths):
            raise ValueError("lengths must be positive")
        d = len(lengths)
        with working_precision(bits):
            left = [0] * d
            acc = 0
            for i in range(d):
                left[i] = acc
                acc = acc + lengths[i]
            # image_left[k] = left end of the k-th interval after the exchange
            by_pos = sorted(range(d), key=lambda i: self.perm.image[i])
            image_left = [0] * d
            run = 0
            for i in by_pos:
                image_left[i] = run
                run = run + lengths[i]
            omega = tuple(image_left[i] - left[i] for i in range(d))
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "precision", bits)
        object.__setattr__(self, "breakpoints", tuple(left))
        object.__setattr__(self, "translations", omega)
        object.__setattr__(self, "total", acc)

    @property
    def d(self) -> int:
        return self.perm.d

    @property
    def exact(self) -> bool:
        return self.precision is None

    def interior_breakpoints(self) -> tuple:
        return self.breakpoints[1:]

    def _check(self, x):
        if not (0 <= x < self.total):
            raise ValueError(f"point {x} outside [0, {self.total})")

    def index_of(self, x) -> int:
        """1-based index of the interval containing ``x``."""
        self._check(x)
        return bisect.bisect_right(self.breakpoints, x)

    def evaluate(self, x):
        i = self.index_of(x)
        with working_precision(self.precision):
            return x + self.translations[i - 1]

    __call__ = evaluate

    def inverse(self) -> "Iet":
        """f(lambda', pi^-1), the inverse map, with lengths listed in image order."""
        inv = self.perm.inverse()
        return Iet(tuple(self.lengths[inv(k) - 1] for k in range(1, self.d + 1)), inv)

    def orbit(self, x, n: int) -> tuple[tuple, tuple[int, ...]]:
        """Points x, f(x), ..., f^(n-1)(x) and their interval symbols."""
        if n < 0:
            raise ValueError("n must be non-negative")
        self._check(x)
        points = []
        symbols = []
        bp = self.breakpoints
        om = self.translations
        with working_precision(self.precision):
            for _ in range(n):
                i = bisect.bisect_right(bp, x)
                points.append(x)
                symbols.append(i)
                x = x + om[i - 1]
        return tuple(points), tuple(symbols)

    def keane_probe(self, depth: int) -> bool:
        """No interior breakpoint returns to an interior breakpoint within ``depth`` steps.

        Only the d - 1 interior endpoints count: 0 is always the image of a
        breakpoint (or of 0 itself), so including it would fail every map.
        """
        if not self.exact:
            raise TypeError("keane_probe requires exact lengths")
        if depth < 1:
            raise ValueError("depth must be at least 1")
        targets = set(self.interior_breakpoints())
        for beta in self.interior_breakpoints():
            x = beta
            for _ in range(depth):
                x = self.evaluate(x)
                if x in targets:
                    return False
        return True


@dataclass(frozen=True)
class FlowState:
    """A point (base, height) of the suspension over an Iet with roof ``roof``."""

    base: object
    height: object
    roof: tuple

    def __post_init__(self):
        if any(r <= 0 for r in self.roof):
            raise ValueError("roof components must be positive")
        if self.height < 0:
            raise ValueError("height must be non-negative")


def flow_advance(state: FlowState, iet: Iet, tau) -> FlowState:
    """Run the special flow for time ``tau``; exact when all inputs are Fractions."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    x, s = state.base, state.height
    roof = state.roof
    with working_precision(iet.precision):
        i = iet.index_of(x)
        if s >= roof[i - 1]:
            raise ValueError("height is not below the roof")
        while s + tau >= roof[i - 1]:
            tau = tau - (roof[i - 1] - s)
            x = iet.evaluate(x)
            s = 0
            i = iet.index_of(x)
        return FlowState(x, s + tau, roof)
