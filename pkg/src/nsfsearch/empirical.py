"""Concrete TSP and 2-SAT instances, landscape censuses, and NSF reports.

Exhaustive censuses enumerate every canonical tour (city 0 fixed, the smaller
orientation kept) or every assignment; sampled censuses estimate the fitness
distribution from uniform points and the kernel row at one target cost from
the neighbours of retained points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .model import ModelError

TSP_ENUM_LIMIT = 10
SAT_ENUM_LIMIT = 20


class EnumerationLimitError(ModelError):
    """Search space too large for an exhaustive census."""


class NoPointsAtTargetError(ModelError):
    """Sampling pass found nothing at the requested cost level."""


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TspInstance:
    n: int
    max_edge: int
    seed: int
    dist_matrix: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dist_matrix)
        d.setflags(write=False)
        object.__setattr__(self, "dist_matrix", d)
        if d.shape != (self.n, self.n):
            raise ModelError("distance matrix shape mismatch")
        if not np.array_equal(d, d.T) or np.any(np.diag(d) != 0):
            raise ModelError("distance matrix must be symmetric with zero diagonal")
        off = d[~np.eye(self.n, dtype=bool)]
        if off.min() < 1 or off.max() > self.max_edge:
            raise ModelError(f"edges must lie in 1..{self.max_edge}")

    def to_text(self) -> str:
        lines = [f"{self.n} {self.max_edge} {self.seed}"]
        for i in range(1, self.n):
            lines.append(" ".join(str(int(self.dist_matrix[i, j])) for j in range(i)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TspInstance":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        n, max_edge, seed = (int(x) for x in lines[0].split())
        d = np.zeros((n, n), dtype=np.int64)
        for i in range(1, n):
            vals = [int(x) for x in lines[i].split()]
            d[i, :i] = vals
            d[:i, i] = vals
        return cls(n, max_edge, seed, d)


def gen_tsp(n: int, max_edge: int, seed: int,
            rng: np.random.Generator | None = None) -> TspInstance:
    """Symmetric matrix of uniform integer edges in 1..max_edge."""
    if n < 4:
        raise ModelError("need at least 4 cities")
    if max_edge < 1:
        raise ModelError("max_edge must be >= 1")
    rng = np.random.default_rng(seed) if rng is None else rng
    d = rng.integers(1, max_edge + 1, size=(n, n))
    d = np.triu(d, 1)
    return TspInstance(n, max_edge, seed, d + d.T)


def tour_cost(instance: TspInstance, tour) -> int:
    t = np.asarray(tour)
    return int(instance.dist_matrix[t, np.roll(t, -1)].sum())


def _canonicalize(tour: np.ndarray) -> tuple[int, ...]:
    """Rotate city 0 to front, keep the lexicographically smaller direction."""
    t = list(tour)
    i = t.index(0)
    t = t[i:] + t[:i]
    rev = [t[0]] + t[:0:-1]
    return tuple(min(t, rev))


def two_opt_moves(n: int) -> list[tuple[int, int]]:
    """Position pairs (i, j), reverse tour[i..j]; the full-remainder reversal
    is excluded as it yields the same undirected tour.  Count: n(n-3)/2."""
    return [(i, j) for i in range(1, n) for j in range(i + 1, n)
            if not (i == 1 and j == n - 1)]


def two_opt_neighbors(instance: TspInstance, tour) -> list[tuple[int, ...]]:
    """All distinct 2-opt neighbours, canonicalized."""
    t = np.asarray(tour)
    n = instance.n
    out = []
    for i, j in two_opt_moves(n):
        nb = t.copy()
        nb[i:j + 1] = nb[i:j + 1][::-1]
        out.append(_canonicalize(nb))
    return out


_TOUR_CACHE: dict[int, np.ndarray] = {}


def canonical_tours(n: int) -> np.ndarray:
    """All (n-1)!/2 canonical tours as an array; cached per n."""
    if n not in _TOUR_CACHE:
        perms = np.array([p for p in permutations(range(1, n)) if p[0] < p[-1]],
                         dtype=np.int8)
        tours = np.zeros((len(perms), n), dtype=np.int8)
        tours[:, 1:] = perms
        tours.setflags(write=False)
        _TOUR_CACHE[n] = tours
    return _TOUR_CACHE[n]


@dataclass(frozen=True)
class Sat2Instance:
    """Degree-regular 2-SAT: pairs[c] = the two variables of clause c,
    neg[c,i] True when the literal is negated."""

    n_vars: int
    seed: int
    pairs: np.ndarray
    neg: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pairs)
        g = np.asarray(self.neg)
        p.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "pairs", p)
        object.__setattr__(self, "neg", g)
        if np.any(p[:, 0] == p[:, 1]):
            raise ModelError("a clause repeats a variable")
        counts = np.bincount(p.ravel(), minlength=self.n_vars)
        if len(set(counts.tolist())) != 1:
            raise ModelError("variable occurrence counts are not uniform")

    @property
    def n_clauses(self) -> int:
        return self.pairs.shape[0]

    @property
    def occurrences_per_var(self) -> int:
        return self.pairs.size // self.n_vars

    def costs(self, assigns: np.ndarray) -> np.ndarray:
        """Unsatisfied-clause counts for a (batch, n_vars) bool array."""
        lit1 = assigns[:, self.pairs[:, 0]] ^ self.neg[:, 0]
        lit2 = assigns[:, self.pairs[:, 1]] ^ self.neg[:, 1]
        return (~lit1 & ~lit2).sum(axis=1)

    def flip_delta(self, assign: np.ndarray, var: int, occ_index) -> int:
        """Cost change from flipping `var`; occ_index maps var -> clause ids."""
        delta = 0
        for c in occ_index[var]:
            v1, v2 = self.pairs[c]
            l1 = bool(assign[v1]) ^ bool(self.neg[c, 0])
            l2 = bool(assign[v2]) ^ bool(self.neg[c, 1])
            before = (not l1) and (not l2)
            if v1 == var:
                l1 = not l1
            if v2 == var:
                l2 = not l2
            after = (not l1) and (not l2)
            delta += int(after) - int(before)
        return delta

    def occurrence_index(self) -> list[list[int]]:
        occ = [[] for _ in range(self.n_vars)]
        for c in range(self.n_clauses):
            occ[self.pairs[c, 0]].append(c)
            occ[self.pairs[c, 1]].append(c)
        return occ

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.n_vars} {self.n_clauses}"]
        for c in range(self.n_clauses):
            lits = []
            for s in (0, 1):
                v = int(self.pairs[c, s]) + 1
                lits.append(str(-v if self.neg[c, s] else v))
            lines.append(" ".join(lits) + " 0")
        return "\n".join(lines) + "\n"


def flip_deltas_all(inst: Sat2Instance, assign: np.ndarray) -> np.ndarray:
    """Cost change of every single-variable flip, vectorized over clauses."""
    l1 = assign[inst.pairs[:, 0]] ^ inst.neg[:, 0]
    l2 = assign[inst.pairs[:, 1]] ^ inst.neg[:, 1]
    before = (~l1 & ~l2).astype(np.int64)
    contrib0 = (l1 & ~l2).astype(np.int64) - before   # slot-0 literal flipped
    contrib1 = (~l1 & l2).astype(np.int64) - before   # slot-1 literal flipped
    deltas = np.zeros(inst.n_vars, dtype=np.int64)
    np.add.at(deltas, inst.pairs[:, 0], contrib0)
    np.add.at(deltas, inst.pairs[:, 1], contrib1)
    return deltas


def gen_sat2(seed: int, n_vars: int = 50, occurrences: int = 4,
             max_retries: int = 1000) -> Sat2Instance:
    """Configuration-model pairing of `occurrences` stubs per variable into
    2-clauses with random polarities; rejects pairings that repeat a variable
    within a clause."""
    if (n_vars * occurrences) % 2 != 0:
        raise ModelError("variable occurrences must pair into clauses")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n_vars), occurrences)
    for _ in range(max_retries):
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2).copy()
        if np.all(pairs[:, 0] != pairs[:, 1]):
            neg = rng.random(pairs.shape) < 0.5
            return Sat2Instance(n_vars, seed, pairs, neg)
    raise ModelError(f"no valid clause pairing found in {max_retries} shuffles")


# ---------------------------------------------------------------------------
# census
# ---------------------------------------------------------------------------

@dataclass
class CensusReport:
    """Pooled fitness and neighbour counts over one or more instances."""

    offset: int                 # lowest observed cost
    p_counts: np.ndarray        # points per cost level, index = cost - offset
    pn_counts: np.ndarray       # neighbour pairs, [cost, nbr_cost] - offset
    n_points: int
    n_instances: int
    sample_mode: str            # "exhaustive" | "sampled"
    seed: int | None = None
    evaluations: int = 0
    target_k: int | None = None  # sampled mode: only this row is populated

    @property
    def k_lo(self) -> int:
        return self.offset

    @property
    def k_hi(self) -> int:
        return self.offset + len(self.p_counts) - 1

    def p_hat(self, k: int) -> float:
        i = k - self.offset
        if 0 <= i < len(self.p_counts):
            return float(self.p_counts[i]) / self.n_points
        return 0.0

    def pn_hat_row(self, k: int) -> np.ndarray | None:
        i = k - self.offset
        if not 0 <= i < len(self.p_counts):
            return None
        tot = self.pn_counts[i].sum()
        if tot == 0:
            return None
        return self.pn_counts[i] / tot

    def r_hat(self, k: int, delta: int) -> float | None:
        """Combined-sides weight estimate; None when no p mass either side."""
        row = self.pn_hat_row(k)
        if row is None:
            return None
        den = self.p_hat(k - delta) + self.p_hat(k + delta)
        if den <= 0:
            return None
        i = k - self.offset
        num = 0.0
        if 0 <= i - delta:
            num += float(row[i - delta])
        if i + delta < len(row):
            num += float(row[i + delta])
        return num / den

    def r_hat_one_sided(self, k: int, delta: int, side: str) -> float | None:
        """Improving- or worsening-side ratio, for diagnostics."""
        row = self.pn_hat_row(k)
        if row is None:
            return None
        j = k - delta if side == "improving" else k + delta
        pj = self.p_hat(j)
        if pj <= 0:
            return None
        i, ji = k - self.offset, j - self.offset
        if not 0 <= ji < len(row):
            return 0.0
        return float(row[ji]) / pj

    def blind_improve_hat(self, k: int) -> float:
        i = k - self.offset
        return float(self.p_counts[:max(i, 0)].sum()) / self.n_points

    def nbr_improve_hat(self, k: int) -> float | None:
        row = self.pn_hat_row(k)
        if row is None:
            return None
        return float(row[:k - self.offset].sum())

    def observed_min(self) -> int:
        return self.offset + int(np.nonzero(self.p_counts)[0][0])

    def modal_k(self) -> int:
        return self.offset + int(np.argmax(self.p_counts))

    def midpoint_ge(self) -> int:
        """Halfway between observed optimum and modal cost (floored)."""
        return (self.observed_min() + self.modal_k()) // 2

    def p_inversions(self) -> int:
        """Count of p-hat increases toward the optimum, over populated levels
        between the observed optimum and the modal cost."""
        hi = self.modal_k() - self.offset
        seg = [(i, c) for i, c in enumerate(self.p_counts[:hi + 1]) if c > 0]
        return sum(1 for (_, a), (_, b) in zip(seg, seg[1:]) if b < a)


def merge_reports(reports: list[CensusReport]) -> CensusReport:
    """Pool counts across instances into one class-level report."""
    if not reports:
        raise ModelError("nothing to merge")
    lo = min(r.offset for r in reports)
    hi = max(r.k_hi for r in reports)
    K = hi - lo + 1
    P = np.zeros(K, dtype=np.int64)
    PN = np.zeros((K, K), dtype=np.int64)
    for r in reports:
        o = r.offset - lo
        P[o:o + len(r.p_counts)] += r.p_counts
        PN[o:o + len(r.p_counts), o:o + len(r.p_counts)] += r.pn_counts
    return CensusReport(lo, P, PN,
                        n_points=sum(r.n_points for r in reports),
                        n_instances=sum(r.n_instances for r in reports),
                        sample_mode=reports[0].sample_mode,
                        seed=reports[0].seed,
                        evaluations=sum(r.evaluations for r in reports),
                        target_k=reports[0].target_k)


def _tsp_census_exhaustive(instance: TspInstance) -> CensusReport:
    n = instance.n
    if n > TSP_ENUM_LIMIT:
        raise EnumerationLimitError(
            f"{n} cities exceeds the exhaustive limit of {TSP_ENUM_LIMIT}")
    tours = canonical_tours(n)
    d = instance.dist_matrix
    costs = d[tours, np.roll(tours, -1, axis=1)].sum(axis=1)
    lo, hi = int(costs.min()), int(costs.max())
    # neighbour deltas can leave [lo, hi]; pad by the largest possible swing
    pad = 2 * instance.max_edge
    K = hi - lo + 1 + 2 * pad
    off = lo - pad
    kidx = (costs - off).astype(np.int64)
    P = np.bincount(kidx, minlength=K)
    PN = np.zeros(K * K, dtype=np.int64)
    evals = len(tours)
    for i, j in two_opt_moves(n):
        a = tours[:, i - 1]
        b = tours[:, i]
        c = tours[:, j]
        e = tours[:, (j + 1) % n]
        delta = d[a, c] + d[b, e] - d[a, b] - d[c, e]
        PN += np.bincount(kidx * K + (kidx + delta), minlength=K * K)
        evals += len(tours)
    PN = PN.reshape(K, K)
    used = np.nonzero(P + PN.sum(axis=0) + PN.sum(axis=1))[0]
    a, b = int(used[0]), int(used[-1])
    return CensusReport(off + a, P[a:b + 1].copy(), PN[a:b + 1, a:b + 1].copy(),
                        n_points=len(tours), n_instances=1,
                        sample_mode="exhaustive", evaluations=evals)


def _sat_census_exhaustive(instance: Sat2Instance) -> CensusReport:
    n = instance.n_vars
    if n > SAT_ENUM_LIMIT:
        raise EnumerationLimitError(
            f"{n} variables exceeds the exhaustive limit of {SAT_ENUM_LIMIT}")
    m = instance.n_clauses
    total = 1 << n
    bits = ((np.arange(total)[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    costs = instance.costs(bits)
    K = m + 1
    P = np.bincount(costs, minlength=K).astype(np.int64)
    PN = np.zeros((K, K), dtype=np.int64)
    occ = instance.occurrence_index()
    evals = total
    for var in range(n):
        flipped = bits.copy()
        flipped[:, var] = ~flipped[:, var]
        nc = instance.costs(flipped)
        np.add.at(PN, (costs, nc), 1)
        evals += total
        del flipped
    return CensusReport(0, P, PN, n_points=total, n_instances=1,
                        sample_mode="exhaustive", evaluations=evals)


def census_exhaustive(instance) -> CensusReport:
    """Exact fitness distribution and neighbour kernel counts."""
    if isinstance(instance, TspInstance):
        return _tsp_census_exhaustive(instance)
    if isinstance(instance, Sat2Instance):
        return _sat_census_exhaustive(instance)
    raise ModelError(f"cannot census a {type(instance).__name__}")


def _random_tours(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    tours = np.zeros((count, n), dtype=np.int16)
    tours[:, 1:] = rng.permuted(np.tile(np.arange(1, n, dtype=np.int16), (count, 1)),
                                axis=1)
    return tours


def census_sampled(instances, n_samples: int, target_k: int | None, seed: int,
                   flips_per_point: int | str = "all") -> CensusReport:
    """Two-pass sampled census.

    Pass one estimates p-hat from n_samples uniform points per instance; pass
    two draws the same number again, keeps the points at target_k, and
    evaluates their neighbours (all of them, or `flips_per_point` random ones)
    to estimate the kernel row there.  target_k=None skips pass two.
    """
    if n_samples < 1:
        raise ModelError("n_samples must be >= 1")
    if isinstance(instances, (TspInstance, Sat2Instance)):
        instances = [instances]
    master = np.random.SeedSequence(seed)
    streams = master.spawn(len(instances))
    reports = []
    for inst, ss in zip(instances, streams):
        rng = np.random.default_rng(ss)
        if isinstance(inst, TspInstance):
            reports.append(_tsp_census_sampled(inst, n_samples, target_k, rng,
                                               flips_per_point))
        elif isinstance(inst, Sat2Instance):
            reports.append(_sat_census_sampled(inst, n_samples, target_k, rng,
                                               flips_per_point))
        else:
            raise ModelError(f"cannot census a {type(inst).__name__}")
    merged = merge_reports(reports)
    merged.seed = seed
    merged.sample_mode = "sampled"
    merged.target_k = target_k
    if target_k is not None and merged.pn_hat_row(target_k) is None:
        raise NoPointsAtTargetError(
            f"no sampled points hit cost {target_k}; widen the sample")
    return merged


def _tsp_move_deltas(inst: TspInstance, tour: np.ndarray,
                     move_arrays) -> np.ndarray:
    """Cost deltas of all 2-opt moves on one tour, vectorized over moves."""
    I, J, JP1 = move_arrays
    d = inst.dist_matrix
    a, b = tour[I - 1], tour[I]
    c, e = tour[J], tour[JP1]
    return d[a, c] + d[b, e] - d[a, b] - d[c, e]


def _tsp_census_sampled(inst, n_samples, target_k, rng, flips_per_point,
                        batch=50_000):
    n = inst.n
    d = inst.dist_matrix
    counts: dict[int, int] = {}
    evals = 0
    remaining = n_samples
    while remaining > 0:
        b = min(batch, remaining)
        tours = _random_tours(n, b, rng)
        costs = d[tours, np.roll(tours, -1, axis=1)].sum(axis=1)
        binc = np.bincount(costs)
        for c in np.nonzero(binc)[0]:
            counts[int(c)] = counts.get(int(c), 0) + int(binc[c])
        evals += b
        remaining -= b
    pn_pairs: dict[tuple[int, int], int] = {}
    if target_k is not None:
        moves = two_opt_moves(n)
        I = np.array([i for i, _ in moves])
        J = np.array([j for _, j in moves])
        move_arrays = (I, J, (J + 1) % n)
        remaining = n_samples
        while remaining > 0:
            b = min(batch, remaining)
            tours = _random_tours(n, b, rng)
            costs = d[tours, np.roll(tours, -1, axis=1)].sum(axis=1)
            evals += b
            for t in tours[costs == target_k]:
                deltas = _tsp_move_deltas(inst, t, move_arrays)
                if flips_per_point != "all":
                    deltas = rng.choice(deltas, size=flips_per_point, replace=True)
                for delta, cnt in zip(*np.unique(deltas, return_counts=True)):
                    key = (target_k, target_k + int(delta))
                    pn_pairs[key] = pn_pairs.get(key, 0) + int(cnt)
                evals += len(deltas)
            remaining -= b
    return _dict_report(counts, pn_pairs, n_samples, evals, target_k)


def _sat_census_sampled(inst, n_samples, target_k, rng, flips_per_point,
                        batch=100_000):
    counts: dict[int, int] = {}
    evals = 0
    remaining = n_samples
    while remaining > 0:
        b = min(batch, remaining)
        assigns = rng.random((b, inst.n_vars)) < 0.5
        costs = inst.costs(assigns)
        binc = np.bincount(costs)
        for c in np.nonzero(binc)[0]:
            counts[int(c)] = counts.get(int(c), 0) + int(binc[c])
        evals += b
        remaining -= b
    pn_pairs: dict[tuple[int, int], int] = {}
    if target_k is not None:
        occ = inst.occurrence_index()
        remaining = n_samples
        while remaining > 0:
            b = min(batch, remaining)
            assigns = rng.random((b, inst.n_vars)) < 0.5
            costs = inst.costs(assigns)
            evals += b
            hits = np.nonzero(costs == target_k)[0]
            for row in hits:
                a = assigns[row]
                if flips_per_point == "all":
                    deltas = flip_deltas_all(inst, a)
                else:
                    flip_vars = rng.integers(0, inst.n_vars, size=flips_per_point)
                    deltas = np.array([inst.flip_delta(a, int(v), occ)
                                       for v in flip_vars])
                for delta, cnt in zip(*np.unique(deltas, return_counts=True)):
                    key = (target_k, target_k + int(delta))
                    pn_pairs[key] = pn_pairs.get(key, 0) + int(cnt)
                evals += len(deltas)
            remaining -= b
    return _dict_report(counts, pn_pairs, n_samples, evals, target_k)


def _dict_report(counts, pn_pairs, n_points, evals, target_k):
    lo = min(list(counts) + [k2 for _, k2 in pn_pairs]) if counts else 0
    hi = max(list(counts) + [k2 for _, k2 in pn_pairs]) if counts else 0
    K = hi - lo + 1
    P = np.zeros(K, dtype=np.int64)
    for c, v in counts.items():
        P[c - lo] = v
    PN = np.zeros((K, K), dtype=np.int64)
    for (k1, k2), v in pn_pairs.items():
        PN[k1 - lo, k2 - lo] = v
    return CensusReport(lo, P, PN, n_points=n_points, n_instances=1,
                        sample_mode="sampled", evaluations=evals,
                        target_k=target_k)


# ---------------------------------------------------------------------------
# NSF verdict report
# ---------------------------------------------------------------------------

@dataclass
class NsfVerdicts:
    """Per-(k,delta) verdicts over a cost window, with summary fractions."""

    k_lo: int
    k_hi: int
    normality: dict[tuple[int, int], bool] = field(default_factory=dict)
    monotonicity: dict[tuple[int, int], bool] = field(default_factory=dict)
    rbar: dict[int, float] = field(default_factory=dict)
    lemma4_precondition: dict[int, bool] = field(default_factory=dict)

    def normality_fraction(self) -> float:
        return _frac(self.normality)

    def monotonicity_fraction(self) -> float:
        return _frac(self.monotonicity)

    def rbar_all_above_1(self) -> bool:
        return all(v > 1.0 for v in self.rbar.values())

    def lemma4_all(self) -> bool:
        return all(self.lemma4_precondition.values())


def _frac(d: dict) -> float:
    return sum(d.values()) / len(d) if d else 1.0


def nsf_report(report: CensusReport, k_lo: int, k_hi: int,
               slack: float = 1e-12) -> NsfVerdicts:
    """Check the NSF properties on estimated quantities over k in k_lo..k_hi.

    delta ranges over 1..(k - observed optimum); weights with no probability
    mass at either side are undefined and skipped.  rbar averages the defined
    weights; the lemma-4 precondition compares pbr-hat against rbar * p-hat.
    """
    verdicts = NsfVerdicts(k_lo, k_hi)
    opt = report.observed_min()
    for k in range(k_lo, k_hi + 1):
        row = report.pn_hat_row(k)
        if row is None:
            continue
        dmax = k - opt
        rs: dict[int, float] = {}
        for d in range(1, dmax + 1):
            r = report.r_hat(k, d)
            if r is not None:
                rs[d] = r
        if not rs:
            continue
        i = k - report.offset
        for d, r in rs.items():
            pn_impr = float(row[i - d]) if i - d >= 0 else 0.0
            verdicts.normality[(k, d)] = pn_impr >= r * report.p_hat(k - d) - slack
        ds = sorted(rs)
        for a, b in zip(ds, ds[1:]):
            if b == a + 1:
                verdicts.monotonicity[(k, a)] = rs[a] >= rs[b] - slack
        rbar = math.fsum(rs.values()) / len(rs)
        verdicts.rbar[k] = rbar
        pbr = math.fsum(r * report.p_hat(k - d) for d, r in rs.items())
        pless = report.blind_improve_hat(k)
        verdicts.lemma4_precondition[k] = pbr >= rbar * pless - slack
    return verdicts
