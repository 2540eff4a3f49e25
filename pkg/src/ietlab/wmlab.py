"""Weak-mixing laboratory.

Veech-criterion scans along Rauzy orbits, twisted Birkhoff averages, the
H-perp projection, and Monte Carlo versions of the weak-stable exclusion
argument and of the linear-exclusion dimension bound.
"""

from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2
import numpy as np
from gmpy2 import mpfr

from . import _linalg as la
from .iet import Iet
from .lyap import SpectrumEstimate, log_norm0
from .perm import Permutation, h_subspace, require_irreducible
from .renorm import HaltOnTie, Window, rauzy_move, step_kind, step_matrix
from .renorm import _apply_single, normalize
from .scalars import DEFAULT_PRECISION, precision_of, working_precision

EIGEN_THRESHOLD = 1e-3
EIGEN_MIN_VISITS = 30
EXCLUDED_THRESHOLD = 0.1
MAX_LIVE_PIECES = 10_000
LENGTH_BUDGET = 1e6  # longest image segment searched for lattice hits


# --------------------------------------------------------------------------
# torus distance


def _nearest(x):
    if isinstance(x, (Fraction, int)):
        return round(x)
    if isinstance(x, float):
        return round(x)
    return int(gmpy2.rint(x))


def dist_torus_sq(v: Sequence):
    """Squared distance from v to Z^d; exact for rationals."""
    bits = precision_of([x for x in v if not isinstance(x, float)]) if not any(
        isinstance(x, float) for x in v) else None
    with working_precision(bits):
        return sum((x - _nearest(x)) ** 2 for x in v)


def dist_torus(v: Sequence) -> float:
    """Euclidean distance from v to the integer lattice."""
    return math.sqrt(float(dist_torus_sq(v)))


# --------------------------------------------------------------------------
# lines


@dataclass(frozen=True)
class LineJ:
    """An affine line {offset + s * direction}; ``offset`` is its closest point to 0."""

    offset: tuple
    direction: tuple

    @classmethod
    def through(cls, point: Sequence, direction: Sequence) -> "LineJ":
        if any(x < 0 for x in direction) or not any(direction):
            raise ValueError("direction must be non-negative and non-zero")
        point = tuple(Fraction(x) for x in point)
        direction = tuple(Fraction(x) for x in direction)
        s = la.dot(point, direction) / la.dot(direction, direction)
        foot = tuple(p - s * v for p, v in zip(point, direction))
        return cls(foot, direction)

    @property
    def norm_sq(self) -> Fraction:
        return la.dot(self.offset, self.offset)

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_sq)


def default_probe_line(dim: int, delta) -> LineJ:
    """Line along (1,...,1) at distance 0.37 delta from 0, offset along (1,-1,1,-1,...)."""
    delta = Fraction(str(delta)) if isinstance(delta, float) else Fraction(delta)
    if dim % 2:
        raise ValueError("dimension must be even")
    alt = [Fraction((-1) ** i) for i in range(dim)]
    scale = Fraction(37, 100) * delta / math.isqrt(dim) if math.isqrt(dim) ** 2 == dim else None
    if scale is None:
        raise ValueError("dimension must be a perfect square for the default offset")
    return LineJ.through([scale * a for a in alt], [1] * dim)


# --------------------------------------------------------------------------
# Veech scan


@dataclass
class ScanReport:
    lengths: tuple[str, ...]
    perm: str
    h: tuple[str, ...]
    window: str
    t_grid: tuple[str, ...]
    visits: list  # per t: [[rauzy step index, distance], ...]
    summary: list  # per t: {min, tail_max, visits, flag}
    steps: int
    truncation: str | None
    seed: int | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambda"] = out.pop("lengths")
        out["tGrid"] = out.pop("t_grid")
        return out

    def csv_rows(self) -> list[list]:
        rows = []
        for t, series in zip(self.t_grid, self.visits):
            for k, (n, dist) in enumerate(series):
                rows.append([t, k, n, dist])
        return rows


def _fmt(x) -> str:
    from .scalars import format_scalar
    return format_scalar(x)


def summarize_series(series: Sequence[Sequence]) -> dict:
    dists = [d for _, d in series]
    if not dists:
        return {"min": None, "tail_max": None, "visits": 0, "flag": "none"}
    tail = dists[len(dists) // 2:]
    lo = min(dists)
    hi = max(tail)
    if lo < EIGEN_THRESHOLD and len(dists) >= EIGEN_MIN_VISITS:
        flag = "eigen"
    elif hi > EXCLUDED_THRESHOLD:
        flag = "excluded"
    else:
        flag = "undecided"
    return {"min": lo, "tail_max": hi, "visits": len(dists), "flag": flag}


def veech_scan(lengths: Sequence, pi: Permutation, h: Sequence, t_grid: Sequence, window: str,
               max_visits: int = 60, step_cap: int = 10**6, seed: int | None = None) -> ScanReport:
    """Distances ||B_n t h|| mod Z^d at each return of the Rauzy orbit to the window.

    ``B_n h`` is tracked exactly (h must be rational); each t is either a
    Fraction or an mpfr, and recording stops once B_n h has more bits than
    the scan can resolve.
    """
    require_irreducible(pi)
    win = Window(pi, window)
    h_vec = tuple(Fraction(x) for x in h)
    if not any(h_vec):
        raise ValueError("h must be non-zero")
    lam = list(lengths)
    bits = precision_of(lam)
    t_bits = [None if isinstance(t, (Fraction, int)) else t.precision for t in t_grid]
    v = list(h_vec)
    cur = pi
    series: list[list] = [[] for _ in t_grid]
    truncation = None
    visits = 0
    n = 0
    with working_precision(bits):
        while visits < max_visits:
            if cur == win.perm and win.contains(lam):
                size = max(abs(x) for x in v)
                need = size.numerator.bit_length() - size.denominator.bit_length() + 64
                if any(tb is not None and need > tb for tb in t_bits):
                    truncation = "precision"
                    break
                for k, t in enumerate(t_grid):
                    with working_precision(t_bits[k]):
                        series[k].append([n, dist_torus([t * x for x in v])])
                visits += 1
            if n >= step_cap:
                truncation = "step_cap"
                break
            try:
                kind = step_kind(lam, cur)
            except HaltOnTie:
                truncation = "tie"
                break
            v = list(la.matvec(step_matrix(cur, kind), v))
            cur = _apply_single(lam, cur, kind)
            if bits is not None:
                normalize(lam)
            n += 1
    return ScanReport(
        lengths=tuple(_fmt(x) for x in lengths),
        perm=str(pi),
        h=tuple(_fmt(x) for x in h_vec),
        window=window,
        t_grid=tuple(_fmt(t) for t in t_grid),
        visits=series,
        summary=[summarize_series(s) for s in series],
        steps=n,
        truncation=truncation,
        seed=seed,
    )


# --------------------------------------------------------------------------
# twisted Birkhoff averages


def _observable(name: str, iet: Iet):
    kind, _, arg = name.partition(":")
    total = float(iet.total)
    if kind == "exp":
        k = int(arg)
        if k == 0:
            raise ValueError("exp:0 is not mean-zero")
        return lambda x, i: cmath.exp(2j * math.pi * k * float(x) / total)
    if kind == "ind":
        j = int(arg)
        if not 1 <= j <= iet.d:
            raise ValueError(f"interval index {j} out of range")
        mean = float(iet.lengths[j - 1]) / total
        return lambda x, i: (1.0 if i == j else 0.0) - mean
    raise ValueError(f"unknown observable {name!r}; use exp:k or ind:i")


def twisted_average(iet: Iet, observable: str, t: float, x0, n: int) -> float:
    """|(1/N) sum_{k<N} e^{-2 pi i t k} g(f^k(x0))| for a catalog observable g."""
    if n < 1:
        raise ValueError("N must be positive")
    g = _observable(observable, iet)
    points, symbols = iet.orbit(x0, n)
    acc = 0j
    step = cmath.exp(-2j * math.pi * float(t))
    phase = 1 + 0j
    for k, (x, i) in enumerate(zip(points, symbols)):
        if k % 1024 == 0:
            phase = cmath.exp(-2j * math.pi * ((float(t) * k) % 1.0))
        acc += phase * g(x, i)
        phase *= step
    return abs(acc) / n


# --------------------------------------------------------------------------
# projection onto H-perp


def hperp_projection(pi: Permutation, h: Sequence) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """Exact orthogonal split h = hH + hPerp with hH in H(pi)."""
    hs = h_subspace(pi)
    h = tuple(Fraction(x) for x in h)
    red, _ = la._rref([list(map(Fraction, b)) for b in hs.annihilators])
    rows = [r for r in red if any(r)]
    if not rows:
        return h, tuple(Fraction(0) for _ in h)
    gram = [[la.dot(a, b) for b in rows] for a in rows]
    rhs = [la.dot(a, h) for a in rows]
    aug = [g + [r] for g, r in zip(gram, rhs)]
    solved, _ = la._rref(aug)
    coeffs = [row[-1] for row in solved]
    perp = tuple(sum(c * r[i] for c, r in zip(coeffs, rows)) for i in range(len(h)))
    return tuple(a - b for a, b in zip(h, perp)), perp


# --------------------------------------------------------------------------
# lattice points near a segment


class Overflow(Exception):
    """A segment is too long, or too many pieces are alive, to follow exactly."""


def _bits_for(matrix) -> int:
    big = max(abs(x) for row in matrix for x in row)
    return max(big.bit_length(), 1) + 128


def lattice_hits(point: Sequence, direction: Sequence, lo, hi, delta, budget: float = LENGTH_BUDGET):
    """Integer points within ``delta`` of {point + s direction : lo <= s <= hi}.

    Yields ``(c, a, b)`` where (a, b) is the sub-interval of s on which the
    distance to c is below delta.  Coordinates are visited in order of
    decreasing |direction_i| so each one only narrows the s-range.
    """
    p = len(point)
    if (hi - lo) * max(abs(x) for x in direction) > budget:
        raise Overflow("segment too long")
    order = sorted(range(p), key=lambda i: -abs(direction[i]))
    d2 = delta * delta

    def rec(depth, a, b, c):
        if depth == p:
            # |P - c + s V|^2 < delta^2 on [a, b]
            diff = [point[i] - c[i] for i in range(p)]
            vv = sum(x * x for x in direction)
            pv = sum(x * y for x, y in zip(diff, direction))
            pp = sum(x * x for x in diff)
            disc = pv * pv - vv * (pp - d2)
            if disc <= 0:
                return
            root = gmpy2.sqrt(disc) if not isinstance(disc, float) else math.sqrt(disc)
            s0 = (-pv - root) / vv
            s1 = (-pv + root) / vv
            lo2, hi2 = max(a, s0), min(b, s1)
            if lo2 < hi2:
                yield tuple(c), lo2, hi2
            return
        i = order[depth]
        x0 = point[i] + a * direction[i]
        x1 = point[i] + b * direction[i]
        m, mm = (x0, x1) if x0 <= x1 else (x1, x0)
        first = int(gmpy2.ceil(m - delta)) if not isinstance(m, float) else math.ceil(m - delta)
        last = int(gmpy2.floor(mm + delta)) if not isinstance(mm, float) else math.floor(mm + delta)
        for ci in range(first, last + 1):
            if direction[i] == 0:
                if abs(point[i] - ci) < delta:
                    yield from rec(depth + 1, a, b, c + [ci])
                continue
            s0 = (ci - delta - point[i]) / direction[i]
            s1 = (ci + delta - point[i]) / direction[i]
            if s0 > s1:
                s0, s1 = s1, s0
            a2, b2 = max(a, s0), min(b, s1)
            if a2 < b2:
                yield from rec(depth + 1, a2, b2, c + [ci])

    yield from rec(0, lo, hi, [])


def _segment_in_ball(offset: Sequence, direction: Sequence, delta):
    """Parameter interval of {offset + s direction} inside the open delta-ball, or None."""
    vv = sum(x * x for x in direction)
    pv = sum(x * y for x, y in zip(offset, direction))
    pp = sum(x * x for x in offset)
    disc = pv * pv - vv * (pp - delta * delta)
    if disc <= 0:
        return None
    root = gmpy2.sqrt(disc)
    return (-pv - root) / vv, (-pv + root) / vv


def phi_delta_count(matrix: Sequence[Sequence[int]], line: LineJ, delta) -> int:
    """Number of components of A(J & B_delta(0)) meeting B_delta(Z^p minus 0)."""
    bits = _bits_for(matrix)
    with working_precision(bits):
        delta_f = mpfr(delta)
        q = [mpfr(x) for x in line.offset]
        v = [mpfr(x) for x in line.direction]
        seg = _segment_in_ball(q, v, delta_f)
        if seg is None:
            return 0
        aq = la.matvec(matrix, q)
        av = la.matvec(matrix, v)
        count = 0
        for c, _, _ in lattice_hits(aq, av, seg[0], seg[1], delta_f):
            if any(c):
                count += 1
    return count


# --------------------------------------------------------------------------
# the exclusion probe


@dataclass
class _Piece:
    foot: list  # mpfr coordinates, |foot| < delta
    unit: list  # unit direction
    lo: object  # parameter interval along unit, relative to foot
    hi: object
    offsets: tuple  # incremental lattice vectors, one per block


@dataclass(frozen=True)
class Certificate:
    blocks: tuple  # exact block matrices
    offsets: tuple  # incremental lattice offsets, one per block
    point: tuple  # rational point of the last piece (local coordinates)


@dataclass
class SampleOutcome:
    depth: int  # blocks survived (m if it survived all, -1 if J misses the delta-ball)
    status: str  # "died", "survived", "overflow", "truncated"
    certificate: Certificate | None = None
    child_norm_ratio: float | None = None  # min ||J_k|| * ||A||_0 / (1 - 2 delta) over children
    phi_checks: list = field(default_factory=list)  # (phi, ||A||_0) per block


def _norm(v):
    return gmpy2.sqrt(sum(x * x for x in v))


def _propagate(piece: _Piece, a_matrix, delta, bits) -> list[_Piece]:
    aq = la.matvec(a_matrix, piece.foot)
    av = la.matvec(a_matrix, piece.unit)
    rho = _norm(av)
    unit = [x / rho for x in av]
    lo, hi = piece.lo * rho, piece.hi * rho
    children = []
    for c, a, b in lattice_hits(aq, unit, lo, hi, delta):
        rel = [x - ci for x, ci in zip(aq, c)]
        tau = -sum(x * y for x, y in zip(rel, unit))
        foot = [x + tau * y for x, y in zip(rel, unit)]
        children.append(_Piece(foot, unit, a - tau, b - tau, piece.offsets + (c,)))
        if len(children) > MAX_LIVE_PIECES:
            raise Overflow("too many pieces")
    return children


def _run_sample(cocycle, line: LineJ, delta: Fraction, block: int, blocks: int, state) -> SampleOutcome:
    dim = cocycle.dim
    mats = []
    with working_precision(256):
        q = [mpfr(x) for x in line.offset]
        v = [mpfr(x) for x in line.direction]
        nv = _norm(v)
        unit = [x / nv for x in v]
        seg = _segment_in_ball(q, unit, mpfr(delta))
    if seg is None:
        return SampleOutcome(-1, "died")
    pieces = [_Piece(q, unit, seg[0], seg[1], ())]
    min_ratio = None
    phi_checks = []
    for k in range(1, blocks + 1):
        a = la.identity(dim)
        for _ in range(block):
            got = cocycle.advance(state)
            if got is None:
                return SampleOutcome(k - 1, "truncated", None, min_ratio, phi_checks)
            m, state = got
            a = la.matmul(m, a)
        mats.append(a)
        bits = _bits_for(a)
        ln0 = log_norm0(a)
        nxt = []
        try:
            with working_precision(bits):
                dl = mpfr(delta)
                pieces = [_Piece([mpfr(x) for x in p.foot], [mpfr(x) for x in p.unit],
                                 mpfr(p.lo), mpfr(p.hi), p.offsets) for p in pieces]
                for p in pieces:
                    kids = _propagate(p, a, dl, bits)
                    nonzero = [kid for kid in kids if any(kid.offsets[-1])]
                    phi_checks.append((len(nonzero), ln0))
                    for kid in nonzero:
                        r = float(_norm(kid.foot)) * math.exp(ln0) / (1 - 2 * float(delta))
                        min_ratio = r if min_ratio is None else min(min_ratio, r)
                    nxt.extend(kids)
                    if len(nxt) > MAX_LIVE_PIECES:
                        raise Overflow("too many pieces")
        except Overflow:
            return SampleOutcome(k - 1, "overflow", None, min_ratio, phi_checks)
        pieces = nxt
        if not pieces:
            return SampleOutcome(k - 1, "died", None, min_ratio, phi_checks)
    best = pieces[0]
    with working_precision(_bits_for(mats[-1])):
        mid = (best.lo + best.hi) / 2
        point = tuple(Fraction(*(x + mid * u).as_integer_ratio())
                      for x, u in zip(best.foot, best.unit))
    cert = Certificate(tuple(mats), best.offsets, point)
    return SampleOutcome(blocks, "survived", cert, min_ratio, phi_checks)


def replay_certificate(cert: Certificate, line: LineJ, delta) -> bool:
    """Exact check that some point of J stays delta-close to the lattice at every block."""
    delta = Fraction(str(delta)) if isinstance(delta, float) else Fraction(delta)
    ps = [tuple(line.offset)]
    vs = [tuple(line.direction)]
    for a, c in zip(cert.blocks, cert.offsets):
        ps.append(tuple(x - ci for x, ci in zip(la.matvec(a, ps[-1]), c)))
        vs.append(la.matvec(a, vs[-1]))
    pk, vk = ps[-1], vs[-1]
    s = la.dot([y - p for y, p in zip(cert.point, pk)], vk) / la.dot(vk, vk)
    d2 = delta * delta
    for p, v in zip(ps, vs):
        y = [pi + s * vi for pi, vi in zip(p, v)]
        if la.dot(y, y) >= d2:
            return False
    return True


@dataclass
class ProbeReport:
    estimates: list[float]  # upper estimate of mu(Gamma^m) for m = 0..blocks
    certified: list[float]  # share of samples certified to survive m blocks
    samples: int
    blocks: int
    block: int
    delta: str
    line_norm: float
    died: int
    survived: int
    overflow: int
    truncated: int
    certificates_ok: bool
    child_bound_ok: bool
    phi_bound_ok: bool
    seed: int
    cocycle: dict
    outcomes: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("outcomes")
        return out


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("IETLAB_THREADS", "1")))
    except ValueError:
        return 1


def _probe_task(args):
    cocycle, line, delta, block, blocks, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    return _run_sample(cocycle, line, delta, block, blocks, cocycle.sample_state(rng))


def wstable_probe(cocycle, line: LineJ, delta, block: int, blocks: int, samples: int,
                  seed: int = 0) -> ProbeReport:
    """Monte Carlo estimate of mu(Gamma^m_delta(J)) for m = 0..blocks.

    Each sample follows J & B_delta(0) through ``blocks`` blocks of ``block``
    cocycle steps, keeping every lattice translate that stays in a
    delta-ball.  Samples that overflow the piece cap or hit the return cap
    are counted as surviving in ``estimates`` (an upper bound) and reported.
    """
    delta = Fraction(str(delta)) if isinstance(delta, float) else Fraction(delta)
    if not delta < Fraction(1, 10):
        raise ValueError("delta must be below 1/10")
    streams = np.random.SeedSequence(seed).spawn(samples)
    tasks = [(cocycle, line, delta, block, blocks, s) for s in streams]
    threads = _threads()
    if threads > 1 and samples > 1:
        with ProcessPoolExecutor(threads) as pool:
            outcomes = list(pool.map(_probe_task, tasks, chunksize=max(1, samples // (4 * threads))))
    else:
        outcomes = [_probe_task(t) for t in tasks]
    est, cert = [], []
    for m in range(blocks + 1):
        sure = sum(1 for o in outcomes if o.depth >= m)
        open_ = sum(1 for o in outcomes if o.depth < m and o.status in ("overflow", "truncated"))
        est.append((sure + open_) / samples)
        cert.append(sure / samples)
    certs_ok = all(replay_certificate(o.certificate, line, delta)
                   for o in outcomes if o.status == "survived")
    ratios = [o.child_norm_ratio for o in outcomes if o.child_norm_ratio is not None]
    child_ok = all(r >= 1 - 1e-9 for r in ratios)
    phi_ok = all(phi <= math.exp(ln0) * (1 + 1e-9) for o in outcomes for phi, ln0 in o.phi_checks)
    return ProbeReport(
        estimates=est,
        certified=cert,
        samples=samples,
        blocks=blocks,
        block=block,
        delta=str(delta),
        line_norm=line.norm,
        died=sum(o.status == "died" for o in outcomes),
        survived=sum(o.status == "survived" for o in outcomes),
        overflow=sum(o.status == "overflow" for o in outcomes),
        truncated=sum(o.status == "truncated" for o in outcomes),
        certificates_ok=certs_ok,
        child_bound_ok=child_ok,
        phi_bound_ok=phi_ok,
        seed=seed,
        cocycle=cocycle.describe(),
        outcomes=outcomes,
    )


# --------------------------------------------------------------------------
# dimension bound


def _log_cover(log_norm: float, delta: float, p: int) -> float:
    # ln(1 + (3 delta |A|)^p) without overflow
    z = p * (math.log(3 * delta) + log_norm)
    return z + math.log1p(math.exp(-z)) if z > 0 else math.log1p(math.exp(z))


def _log_spectral_norm(m) -> float:
    big = max(abs(x) for row in m for x in row)
    shift = max(big.bit_length() - 60, 0)
    a = np.array([[x >> shift if x >= 0 else -((-x) >> shift) for x in row] for row in m], dtype=float)
    return math.log(np.linalg.norm(a, 2)) + shift * math.log(2)


def orbit_log_norms(cocycle, horizon: int, seed: int) -> list[float]:
    """ln |A(T^k x)| (operator 2-norm) along one sampled orbit, k < horizon."""
    rng = np.random.default_rng(seed)
    state = cocycle.sample_state(rng)
    out = []
    while len(out) < horizon:
        got = cocycle.advance(state)
        if got is None:
            state = cocycle.sample_state(rng)
            continue
        m, state = got
        out.append(_log_spectral_norm(m))
    return out


@dataclass(frozen=True)
class DimensionEstimate:
    beta: float
    dim_bound: float
    delta: float
    horizon: int
    exponent: float  # smallest positive Lyapunov exponent used
    seed: int
    line: tuple

    def to_dict(self) -> dict:
        out = asdict(self)
        out["line"] = [str(x) for x in self.line]
        return out


def beta_delta(log_norms: Sequence[float], delta: float, p: int) -> float:
    return sum(_log_cover(x, float(delta), p) for x in log_norms) / len(log_norms)


def smallest_positive_exponent(spectrum: SpectrumEstimate) -> float:
    pos = [x for x in spectrum.exponents if x > 0]
    if not pos:
        raise ValueError("spectrum has no positive exponent")
    return min(pos)


def hausdorff_estimate(cocycle, line: LineJ | None, delta: float, horizon: int, seed: int,
                       spectrum: SpectrumEstimate, log_norms: Sequence[float] | None = None
                       ) -> DimensionEstimate:
    """beta_delta along a sampled orbit and the bound beta_delta / lambda on dim(G & W^s)."""
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    if horizon < 100:
        raise ValueError("horizon must be at least 100")
    norms = list(log_norms) if log_norms is not None else orbit_log_norms(cocycle, horizon, seed)
    beta = beta_delta(norms[:horizon], delta, cocycle.dim)
    lam = smallest_positive_exponent(spectrum)
    offset = tuple(str(x) for x in line.offset) if line is not None else ()
    return DimensionEstimate(beta, beta / lam, delta, horizon, lam, seed, offset)
