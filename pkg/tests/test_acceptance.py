"""Acceptance criteria, each run at its stated size and tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""

import json
import math
import os
import random
import subprocess
import sys
import time
from fractions import Fraction as F

import gmpy2
import jsonschema
import numpy as np

from conftest import record
from ietlab import _linalg as la
from ietlab.cli import load_schema
from ietlab.lyap import lyapunov_spectrum, norm0
from ietlab.perm import (Permutation, genus, h_subspace, irreducible_permutations, nr_vectors,
                         rauzy_classes, rauzy_move, singularity_data, standard_members)
from ietlab.renorm import (HaltOnTie, InducedCocycle, Window, ZorichCocycle, rauzy_step,
                           restrict_to_h, shortest_positive_word, step_matrix,
                           visitation_matrix_oracle)
from ietlab.scalars import parse_scalar, parse_vector, working_precision
from ietlab.wmlab import (LineJ, beta_delta, default_probe_line, hausdorff_estimate,
                          orbit_log_norms, phi_delta_count, veech_scan, wstable_probe)

P = Permutation
GENUS2 = P((4, 3, 2, 1))


# ---------------------------------------------------------------- 1


def test_criterion_1_oracle_equivalence():
    rng = random.Random(20240601)
    perms = [pi for d in range(2, 7) for pi in irreducible_permutations(d)]
    start = time.perf_counter()
    checked = mismatches = 0
    while checked < 200:
        pi = rng.choice(perms)
        lam = tuple(F(rng.randint(1, 10**6), rng.randint(1, 10**6)) for _ in range(pi.d))
        try:
            step = rauzy_step(lam, pi)
        except HaltOnTie:
            continue
        if visitation_matrix_oracle(lam, pi) != step.matrix:
            mismatches += 1
        checked += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    record(1, ok, f"{checked} random exact pairs, {mismatches} mismatches, {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------- 2


def test_criterion_2_exact_identities():
    rng = random.Random(7)
    failures = 0
    steps_done = 0
    paths = 0
    for pi in (P((4, 3, 2, 1)), P((5, 4, 3, 2, 1)), P((6, 5, 4, 3, 2, 1))):
        lam = tuple(F(rng.getrandbits(60_000) | 1) for _ in range(pi.d))
        lam0 = lam
        total = la.identity(pi.d)
        cur = pi
        for _ in range(10_000):
            step = rauzy_step(lam, cur)
            b = step.matrix
            if la.matvec(la.transpose(b), step.lengths_after) != lam:
                failures += 1
            # an integer vector orthogonal to lam, and a generic one
            w0 = [0] * pi.d
            i, j = rng.sample(range(pi.d), 2)
            w0[i], w0[j] = lam[j], -lam[i]
            w1 = [rng.randint(-9, 9) for _ in range(pi.d)]
            for w in (w0, w1):
                if (la.dot(lam, w) == 0) != (la.dot(step.lengths_after, la.matvec(b, w)) == 0):
                    failures += 1
            total = la.matmul(b, total)
            lam, cur = step.lengths_after, step.perm_after
            steps_done += 1
        if la.matvec(la.transpose(total), lam) != lam0:
            failures += 1
        paths += 1
    ok = failures == 0
    record(2, ok, f"{paths} paths x 10^4 Rauzy steps ({steps_done} steps), {failures} failures")
    assert ok


# ---------------------------------------------------------------- 3


def test_criterion_3_combinatorial_invariants():
    problems = []
    count = 0
    for d in range(2, 8):
        irreducible = set(irreducible_permutations(d))
        for pi in irreducible:
            sd = singularity_data(pi)
            dim = h_subspace(pi).dim
            count += 1
            if dim != d - sd.n_orbits + 1 or dim % 2:
                problems.append(f"dim {pi}")
            if sum(n - 1 for n in sd.cone_orders) != 2 * sd.genus - 2:
                problems.append(f"cones {pi}")
        classes = rauzy_classes(d)
        members = [m for c in classes for m in c]
        if len(members) != len(set(members)) or set(members) != irreducible:
            problems.append(f"partition d={d}")
        for c in classes:
            if not standard_members(c):
                problems.append(f"no standard member in class of {c[0]}")
            for s in c:
                for kind in (1, 2):
                    succ = rauzy_move(s, kind)
                    try:
                        r = restrict_to_h(step_matrix(s, kind), h_subspace(s), h_subspace(succ))
                    except ValueError:
                        problems.append(f"lattice {s} type {kind}")
                        continue
                    if abs(la.det(r)) != 1:
                        problems.append(f"unimodular {s} type {kind}")
    ok = not problems
    record(3, ok, f"{count} irreducible permutations d<=7, problems: {problems[:3] or 'none'}")
    assert ok


# ---------------------------------------------------------------- 4


def test_criterion_4_nogueira_rudolph_vectors():
    bad = []
    count = 0
    for d in range(2, 8):
        for pi in irreducible_permutations(d):
            if not pi.is_standard:
                continue
            count += 1
            hs = h_subspace(pi)
            vs = [list(map(F, v)) for v in nr_vectors(pi)]
            inside = all(la.dot(v, b) == 0 for v in vs for b in hs.annihilators)
            if la.rank(vs) != hs.dim or not inside:
                bad.append(str(pi))
    ok = not bad
    record(4, ok, f"{count} standard permutations d<=7, span != H for: {bad[:3] or 'none'}")
    assert ok


# ---------------------------------------------------------------- 5


def test_criterion_5_lyapunov_spectrum():
    start = time.perf_counter()
    a = lyapunov_spectrum(GENUS2, 1_000_000, seed=11, precision=256)
    b = lyapunov_spectrum(GENUS2, 1_000_000, seed=12, precision=256)
    elapsed = time.perf_counter() - start
    e, s = a.exponents, a.stderr

    def apart(i, j):
        return e[i] - e[j] > 3 * math.hypot(s[i], s[j])

    ordered = apart(0, 1) and e[1] > 3 * s[1] and -e[2] > 3 * s[2] and apart(2, 3)
    sym = max(abs(e[i] + e[3 - i]) / e[0] for i in range(2))
    nu_gap = abs(a.normalized[1] - b.normalized[1])
    nu_tol = 3 * math.hypot(a.normalized_stderr[1], b.normalized_stderr[1])
    ok = ordered and sym < 0.05 and nu_gap <= nu_tol and elapsed < 600
    record(5, ok, f"exponents {tuple(round(x, 4) for x in e)} stderr {max(s):.1e}; symmetry {sym:.4f}; "
                  f"nu2 {a.normalized[1]:.4f} vs {b.normalized[1]:.4f} (gap {nu_gap:.4f}, tol {nu_tol:.4f}); "
                  f"{elapsed:.0f}s for two runs")
    assert ok


# ---------------------------------------------------------------- 6


INV_PHI = ("0.61803398874989484820458683436563811772030917980576286213544862270526046281890"
           "244970720720418939113748475408807538689175212663386222353693179318006076672635")


def test_criterion_6_veech_controls():
    bits = 512
    lam = parse_vector("1,phi", bits)
    pi = P((2, 1))
    window = shortest_positive_word(pi)
    base = parse_scalar(INV_PHI, bits)
    with working_precision(bits):
        family = [base, base + 1, base - 1, 2 - base]
    eig = veech_scan(lam, pi, (1, 1), family, window, max_visits=30)
    eigen_ok = all(s["visits"] <= 30 and s["min"] < 1e-3 for s in eig.summary)
    rng = np.random.default_rng(6)
    with working_precision(bits):
        ts = [gmpy2.mpfr(float(rng.random())) for _ in range(100)]
    rand = veech_scan(lam, pi, (1, 1), ts, window, max_visits=30)
    excluded = sum(s["tail_max"] > 0.1 for s in rand.summary)
    ok = eigen_ok and excluded >= 95
    minima = ", ".join(f"{s['min']:.1e}" for s in eig.summary)
    record(6, ok, f"eigen family minima [{minima}]; "
                  f"{excluded}/100 random t with tail-max > 0.1")
    assert ok


# ---------------------------------------------------------------- 7


def _random_line(rng, delta):
    while True:
        q = rng.uniform(-1, 1, 4)
        if np.linalg.norm(q) < 1:
            break
    q = q * float(delta) * 0.9
    return LineJ.through([F(float(x)).limit_denominator(10**9) for x in q],
                         [F(float(x)).limit_denominator(10**6) for x in rng.uniform(0, 1, 4)])


def test_criterion_7_exclusion_probe():
    delta = F(1, 20)
    window = Window(GENUS2, shortest_positive_word(GENUS2))
    line = default_probe_line(4, delta)
    induced = InducedCocycle(window)
    rep = wstable_probe(induced, line, delta, block=1, blocks=8, samples=1000, seed=7)
    est = rep.estimates
    monotone = all(x >= y for x, y in zip(est, est[1:]))

    # the counting bound on every enumerated branch, against the probe line and random lines
    rng = np.random.default_rng(8)
    branches = induced.enumerate_branches(20)
    phi_ok = True
    for b in branches:
        bound = norm0(b.restricted)
        for ln in [line] + [_random_line(rng, delta) for _ in range(3)]:
            if phi_delta_count(b.restricted, ln, delta) > bound:
                phi_ok = False
    ok = (monotone and est[8] < 0.05 and rep.certificates_ok and phi_ok and rep.phi_bound_ok
          and rep.child_bound_ok)
    record(7, ok, f"induced cocycle (window {window.word}, return cap {induced.return_cap}): "
                  f"estimates {[round(x, 3) for x in est]}; died {rep.died}, survived {rep.survived}, "
                  f"overflow {rep.overflow}, truncated {rep.truncated}; certificates "
                  f"{'ok' if rep.certificates_ok else 'BAD'}; phi bound on {len(branches)} branches "
                  f"{'ok' if phi_ok else 'BAD'}; child bound {'ok' if rep.child_bound_ok else 'BAD'}")

    # supplementary, not part of the criterion: the same probe over blocks of 10 Zorich steps
    zc = ZorichCocycle(GENUS2, window)
    sup = wstable_probe(zc, line, delta, block=10, blocks=8, samples=1000, seed=7)
    print(f"supplementary (Zorich cocycle, N=10): estimates {[round(x, 3) for x in sup.estimates]}, "
          f"certificates {'ok' if sup.certificates_ok else 'BAD'}, "
          f"child bound {'ok' if sup.child_bound_ok else 'BAD'}")
    assert ok


# ---------------------------------------------------------------- 8


def test_criterion_8_dimension_estimator():
    cocycle = ZorichCocycle(GENUS2)
    spectrum = lyapunov_spectrum(GENUS2, 200_000, seed=21)
    norms = orbit_log_norms(cocycle, 10_000, seed=22)
    deltas = (1e-4, 1e-3, 1e-2, 1e-1)
    betas = [beta_delta(norms, d, cocycle.dim) for d in deltas]
    monotone = all(x <= y for x, y in zip(betas, betas[1:]))
    est = hausdorff_estimate(cocycle, default_probe_line(4, F(1, 1000)), 1e-3, 10_000, 22,
                             spectrum, norms)
    ok = monotone and est.dim_bound < 0.5
    record(8, ok, f"beta at {deltas}: {[round(b, 5) for b in betas]}; lambda {est.exponent:.4f}; "
                  f"dimBound(1e-3) = {est.dim_bound:.4f}")
    assert ok


# ---------------------------------------------------------------- 9


CLI_RUNS = {
    "class": ["class", "--perm", "5 4 3 2 1"],
    "lyapunov": ["lyapunov", "--perm", "4 3 2 1", "--steps", "5000", "--seed", "4"],
    "scan": ["scan", "--perm", "2 1", "--lambda", "1,phi", "--h", "1,1", "--t-random", "10",
             "--visits", "30", "--seed", "5"],
    "exclude": ["exclude", "--samples", "50", "--blocks", "4", "--seed", "6"],
    "dim": ["dim", "--steps", "500", "--spectrum-steps", "5000", "--seed", "7"],
    "induct": ["induct", "--perm", "5 4 3 2 1",
               "--lambda", "0.1234567,0.2718281,0.3141592,0.1414213,0.1732050",
               "--steps", "20", "--mode", "zorich"],
    "orbit": ["orbit", "--perm", "4 3 2 1", "--lambda", "1/2,1/3,1/5,1/7", "--x0", "1/9",
              "--steps", "25"],
}


def _run_cli(args, out, hash_seed):
    env = dict(os.environ, PYTHONHASHSEED=str(hash_seed))
    proc = subprocess.run([sys.executable, "-m", "ietlab.cli", *args, "--out", str(out)],
                          env=env, capture_output=True, text=True)
    return proc.returncode, out.read_bytes() if out.exists() else b""


def test_criterion_9_determinism(tmp_path):
    problems = []
    for name, args in CLI_RUNS.items():
        out = tmp_path / f"{name}.json"
        code1, first = _run_cli(args, out, 1)
        out.unlink(missing_ok=True)
        code2, second = _run_cli(args, out, 2)
        if code1 or code2:
            problems.append(f"{name}: exit {code1}/{code2}")
            continue
        if first != second:
            problems.append(f"{name}: outputs differ")
        try:
            jsonschema.validate(json.loads(first), load_schema(name))
        except jsonschema.ValidationError as exc:
            problems.append(f"{name}: schema {exc.message}")
    ok = not problems
    record(9, ok, f"{len(CLI_RUNS)} subcommands run twice in fresh processes; problems: {problems or 'none'}")
    assert ok
