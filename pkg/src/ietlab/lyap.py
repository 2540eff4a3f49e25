"""Lyapunov spectrum of the Zorich cocycle on H(pi), Oseledets subspaces, and
the integrability diagnostic omega(kappa)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import subspace_angles

from . import _linalg as la
from .perm import Permutation, h_subspace, rauzy_class, rauzy_move
from .renorm import (
    DEFAULT_ZORICH_CAP,
    BasisMismatch,
    HaltOnTie,
    InducedCocycle,
    cycle_length,
    cycle_nilpotent,
    normalize,
    restrict_linear,
    restrict_to_h,
    step_matrix,
    zorich_advance,
)
from .scalars import DEFAULT_PRECISION, random_dirichlet, working_precision

__all__ = [
    "BasisMismatch", "PrecisionLoss", "restrict_to_h", "ClassTables", "SpectrumEstimate",
    "lyapunov_spectrum", "FiltrationEstimate", "oseledets_filtration", "norm0", "log_norm0",
    "OmegaEstimate", "omega_kappa", "induced_spectrum",
]

GROWTH_LIMIT = 1e8  # re-orthonormalise early once frame entries get this large


class PrecisionLoss(ArithmeticError):
    """Lengths or the orthonormal frame lost too much accuracy to continue."""


# --------------------------------------------------------------------------
# per-class tables of restricted matrices


@dataclass
class _Move:
    succ: Permutation
    cycle: int
    nilpotent: np.ndarray  # restricted (C - I)
    prefixes: list  # restricted composites of r single steps, r < cycle


class ClassTables:
    """Restricted step and cycle matrices for every member of a Rauzy class.

    ``basis_change`` optionally maps a permutation to a unimodular 2g x 2g
    matrix U; the cocycle is then written in the basis L_pi U_pi.
    """

    def __init__(self, pi: Permutation, basis_change: Mapping[Permutation, Sequence] | None = None):
        self.members = rauzy_class(pi)
        self.dim = h_subspace(pi).dim
        self.moves: dict[tuple[Permutation, int], _Move] = {}
        change = {}
        change_inv = {}
        for s in self.members:
            u = basis_change.get(s) if basis_change else None
            u = la.identity(self.dim) if u is None else tuple(tuple(r) for r in u)
            change[s] = u
            change_inv[s] = la.inverse_unimodular(u)

        def conj(r, before, after):
            return la.matmul(change_inv[after], la.matmul(r, change[before]))

        self.step_restricted: dict[tuple[Permutation, int], la.Matrix] = {}
        for s in self.members:
            for kind in (1, 2):
                succ = rauzy_move(s, kind)
                r = restrict_to_h(step_matrix(s, kind), h_subspace(s), h_subspace(succ))
                self.step_restricted[(s, kind)] = conj(r, s, succ)
        for s in self.members:
            for kind in (1, 2):
                m = cycle_length(s, kind)
                nil = conj(restrict_linear(cycle_nilpotent(s, kind), h_subspace(s), h_subspace(s)), s, s)
                prefixes = [np.eye(self.dim)]
                at = s
                acc = la.identity(self.dim)
                for _ in range(m - 1):
                    acc = la.matmul(self.step_restricted[(at, kind)], acc)
                    at = rauzy_move(at, kind)
                    prefixes.append(np.array(acc, dtype=float))
                self.moves[(s, kind)] = _Move(rauzy_move(s, kind), m, np.array(nil, dtype=float), prefixes)

    def run_matrix(self, pi: Permutation, kind: int, n: int) -> np.ndarray:
        """Restricted composite of a Zorich run of ``n`` steps, as floats."""
        mv = self.moves[(pi, kind)]
        k, r = divmod(n, mv.cycle)
        if not k:
            return mv.prefixes[r]
        return mv.prefixes[r] @ (np.eye(self.dim) + float(k) * mv.nilpotent)


# --------------------------------------------------------------------------
# spectrum


@dataclass(frozen=True)
class SpectrumEstimate:
    exponents: tuple[float, ...]
    normalized: tuple[float, ...]
    steps: int
    stderr: tuple[float, ...]
    normalized_stderr: tuple[float, ...]
    seed: int
    perm: str
    precision: int
    reortho: int
    batches: int
    warmup: int
    restarts: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["class"] = out.pop("perm")
        return out


class _QRAccumulator:
    """Orthonormal frame pushed through a matrix sequence, with batch-wise log sums."""

    def __init__(self, dim: int, reortho: int):
        self.frame = np.eye(dim)
        self.reortho = reortho
        self.pending = 0
        self.sums = np.zeros(dim)

    def push(self, m: np.ndarray) -> None:
        self.frame = m @ self.frame
        self.pending += 1
        if self.pending >= self.reortho or np.abs(self.frame).max() > GROWTH_LIMIT:
            self.flush()

    def flush(self) -> None:
        if not self.pending:
            return
        q, r = np.linalg.qr(self.frame)
        diag = np.abs(np.diag(r))
        if not np.all(np.isfinite(diag)) or diag.min() <= 0:
            raise PrecisionLoss("orthonormal frame degenerated")
        self.sums += np.log(diag)
        self.frame = q
        self.pending = 0

    def take(self) -> np.ndarray:
        self.flush()
        out = self.sums
        self.sums = np.zeros_like(out)
        return out


def _check_lengths(lam: list, bits: int) -> None:
    floor = 2.0 ** (-(bits - 24))
    if min(lam) <= floor:
        raise PrecisionLoss("a length fell below the working precision")


def lyapunov_spectrum(pi: Permutation, steps: int, seed: int, precision: int = DEFAULT_PRECISION,
                      reortho: int = 10, batches: int = 50, warmup: int | None = None,
                      basis_change: Mapping | None = None, tables: ClassTables | None = None
                      ) -> SpectrumEstimate:
    """Exponents of the Zorich cocycle restricted to H, per Zorich step.

    One random-start orbit; the frame is re-orthonormalised every ``reortho``
    steps and at every batch boundary; stderr comes from batch means.
    """
    if steps < batches:
        raise ValueError("need at least one step per batch")
    if precision < 64:
        raise ValueError("precision must be at least 64 bits")
    tables = tables or ClassTables(pi, basis_change)
    dim = tables.dim
    rng = np.random.default_rng(seed)
    warmup = min(10_000, steps // 10) if warmup is None else warmup
    restarts = 0

    def fresh():
        return list(random_dirichlet(rng, pi.d, precision)), pi

    lam, cur = fresh()
    acc = _QRAccumulator(dim, reortho)
    per_batch = steps // batches
    batch_sums = []
    batch_steps = []
    with working_precision(precision):
        done = -warmup
        for b in range(batches + 1):
            count = warmup if b == 0 else (per_batch if b < batches else steps - per_batch * (batches - 1))
            i = 0
            while i < count:
                try:
                    before = cur
                    cur, kind, n = zorich_advance(lam, cur, DEFAULT_ZORICH_CAP)
                except HaltOnTie:
                    restarts += 1
                    lam, cur = fresh()
                    continue
                normalize(lam)
                _check_lengths(lam, precision)
                acc.push(tables.run_matrix(before, kind, n))
                i += 1
            sums = acc.take()
            if b > 0:
                batch_sums.append(sums)
                batch_steps.append(count)
            done += count
    sums = np.array(batch_sums)
    counts = np.array(batch_steps, dtype=float)
    total = sums.sum(axis=0) / counts.sum()
    order = np.argsort(-total)
    exps = total[order]
    per = (sums / counts[:, None])[:, order]
    se = per.std(axis=0, ddof=1) / math.sqrt(len(per))
    ratios = per / per[:, :1]
    nse = ratios.std(axis=0, ddof=1) / math.sqrt(len(per))
    return SpectrumEstimate(
        exponents=tuple(float(x) for x in exps),
        normalized=tuple(float(x / exps[0]) for x in exps),
        steps=steps,
        stderr=tuple(float(x) for x in se),
        normalized_stderr=tuple(float(x) for x in nse),
        seed=seed,
        perm=str(pi),
        precision=precision,
        reortho=reortho,
        batches=batches,
        warmup=warmup,
        restarts=restarts,
    )


# --------------------------------------------------------------------------
# Oseledets subspaces


@dataclass(frozen=True)
class FiltrationEstimate:
    perm: Permutation
    lengths: tuple
    depth: int
    central_stable: np.ndarray  # d x g, orthonormal columns in R^d
    stable: np.ndarray  # d x k, k <= g
    growth: tuple[float, ...]  # per-step log growth of the reverse frame
    angle: float  # largest principal angle between the depth and depth/2 estimates
    converged: bool


def _zorich_matrices(lengths, pi: Permutation, depth: int, tables: ClassTables, precision: int):
    lam = list(lengths)
    mats = []
    cur = pi
    with working_precision(precision):
        for _ in range(depth):
            before = cur
            cur, kind, n = zorich_advance(lam, cur)
            normalize(lam)
            mats.append(tables.run_matrix(before, kind, n))
    return mats


def _reverse_frame(mats: Sequence[np.ndarray], dim: int, rng) -> tuple[np.ndarray, np.ndarray]:
    # columns ordered fastest first; returns (frame, per-column log growth)
    frame, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    logs = np.zeros(dim)
    for m in reversed(mats):
        q, r = np.linalg.qr(m.T @ frame)
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1
        frame = q * signs
        logs += np.log(np.abs(np.diag(r)))
    return frame, logs


def _ambient(pi: Permutation, coords: np.ndarray) -> np.ndarray:
    basis = np.array(h_subspace(pi).basis_matrix(), dtype=float)
    if coords.shape[1] == 0:
        return np.zeros((pi.d, 0))
    q, _ = np.linalg.qr(basis @ coords)
    return q


def oseledets_filtration(lengths: Sequence, pi: Permutation, depth: int, seed: int = 0,
                         precision: int = DEFAULT_PRECISION, threshold: float = 1e-6,
                         stable_margin: float = 0.05, tables: ClassTables | None = None
                         ) -> FiltrationEstimate:
    """E^cs at the base point as the slow right-singular subspace of B_depth restricted to H.

    The fast subspace comes from pushing a frame through the transposed
    factors in reverse order; E^cs is the span of its last g columns.
    """
    if depth < 100:
        raise ValueError("depth must be at least 100")
    tables = tables or ClassTables(pi)
    dim = tables.dim
    g = dim // 2
    mats = _zorich_matrices(lengths, pi, depth, tables, precision)
    rng = np.random.default_rng(seed)
    frame, logs = _reverse_frame(mats, dim, rng)
    half, _ = _reverse_frame(mats[: depth // 2], dim, np.random.default_rng(seed + 1))
    cs = frame[:, g:]
    angle = float(np.max(subspace_angles(cs, half[:, g:])))
    growth = logs / depth
    top = max(growth[0], 1e-300)
    stable_cols = [j for j in range(g, dim) if growth[j] < -stable_margin * top]
    return FiltrationEstimate(
        perm=pi,
        lengths=tuple(lengths),
        depth=depth,
        central_stable=_ambient(pi, cs),
        stable=_ambient(pi, frame[:, stable_cols]),
        growth=tuple(float(x) for x in growth),
        angle=angle,
        converged=angle < threshold,
    )


# --------------------------------------------------------------------------
# norms and omega(kappa)


def _log_spectral(m: Sequence[Sequence[int]]) -> float:
    big = max(abs(x) for row in m for x in row)
    if big == 0:
        return -math.inf
    shift = max(big.bit_length() - 60, 0)
    a = np.array([[x >> shift if x >= 0 else -((-x) >> shift) for x in row] for row in m],
                 dtype=float)
    return math.log(np.linalg.norm(a, 2)) + shift * math.log(2)


def log_norm0(m: Sequence[Sequence[int]]) -> float:
    """ln max(|B|, |B^-1|) for an integer unimodular matrix, operator 2-norm."""
    inv = la.inverse_unimodular(m)
    return max(_log_spectral(m), _log_spectral(inv), 0.0)


def norm0(m: Sequence[Sequence[int]]) -> float:
    return math.exp(log_norm0(m))


@dataclass(frozen=True)
class OmegaEstimate:
    value: float
    kappa: float
    horizon: int
    samples: int
    used: int
    truncated: int


def omega_values(cocycle: InducedCocycle, horizon: int, samples: int, rng) -> tuple[list[float], int]:
    """(1/N) ln |A_N(x)|_0 at sampled window points; also the number of truncated orbits."""
    values = []
    truncated = 0
    for _ in range(samples):
        x = cocycle.sample(rng)
        branches, end = cocycle.orbit(x, horizon)
        if end is None:
            truncated += 1
            continue
        prod = la.identity(cocycle.dim)
        for b in branches:
            prod = la.matmul(b.restricted, prod)
        values.append(log_norm0(prod) / horizon)
    return values, truncated


def omega_from_values(values: Sequence[float], kappa: float, total: int) -> float:
    """Integral of the integrand over the worst kappa-mass of the sample (a lower bound for the sup)."""
    if not 0 < kappa <= 1:
        raise ValueError("kappa must lie in (0, 1]")
    if not values:
        return 0.0
    take = min(len(values), math.ceil(kappa * total))
    top = sorted(values, reverse=True)[:take]
    return sum(top) / total


def omega_kappa(cocycle: InducedCocycle, kappa: float, horizon: int, samples: int, seed: int = 0
                ) -> OmegaEstimate:
    rng = np.random.default_rng(seed)
    values, truncated = omega_values(cocycle, horizon, samples, rng)
    return OmegaEstimate(omega_from_values(values, kappa, len(values)), kappa, horizon, samples,
                         len(values), truncated)


# --------------------------------------------------------------------------
# exponents of an induced cocycle


def induced_spectrum(cocycle: InducedCocycle, returns: int, seed: int, reortho: int = 5,
                     batches: int = 20) -> SpectrumEstimate:
    """Exponents per return of the induced cocycle, from one sampled orbit."""
    rng = np.random.default_rng(seed)
    dim = cocycle.dim
    acc = _QRAccumulator(dim, reortho)
    per_batch = max(returns // batches, 1)
    x = cocycle.sample(rng)
    restarts = 0
    batch_sums, batch_counts = [], []
    done = 0
    count = 0
    while done < returns:
        got = cocycle.first_return(x)
        if got is None:
            restarts += 1
            x = cocycle.sample(rng)
            continue
        b, x = got
        acc.push(np.array(b.restricted, dtype=float))
        done += 1
        count += 1
        if count == per_batch or done == returns:
            batch_sums.append(acc.take())
            batch_counts.append(count)
            count = 0
    sums = np.array(batch_sums)
    counts = np.array(batch_counts, dtype=float)
    total = sums.sum(axis=0) / counts.sum()
    order = np.argsort(-total)
    exps = total[order]
    per = (sums / counts[:, None])[:, order]
    n = len(per)
    se = per.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(dim, math.nan)
    ratios = per / per[:, :1]
    nse = ratios.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(dim, math.nan)
    return SpectrumEstimate(
        exponents=tuple(float(v) for v in exps),
        normalized=tuple(float(v / exps[0]) for v in exps),
        steps=returns,
        stderr=tuple(float(v) for v in se),
        normalized_stderr=tuple(float(v) for v in nse),
        seed=seed,
        perm=str(cocycle.perm),
        precision=cocycle.precision,
        reortho=reortho,
        batches=n,
        warmup=0,
        restarts=restarts,
        extra={"window": cocycle.window.word, "return_cap": cocycle.return_cap},
    )
