"""Builders for every named problem class and fixture.

Covers the four synthetic benchmark distributions, the counts-based classes
of the software experiments, the analytic degree-4 2-SAT class, and the four
counter-example fixtures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    ClassModel,
    FitnessDistribution,
    ModelError,
    NeighborKernel,
    NsfWeightTable,
)

BENCH_K_MAX = 200


class InfeasibleWeightsError(ModelError):
    """Counts-class weight vector fails the leftover-mass feasibility check."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


def _dist(raw) -> FitnessDistribution:
    a = np.asarray(raw, dtype=float)
    return FitnessDistribution(a / math.fsum(a.tolist()))


# ---------------------------------------------------------------------------
# benchmark distributions on 0..200
# ---------------------------------------------------------------------------

def build_uniform() -> FitnessDistribution:
    """Same probability at every cost level 0..200."""
    return _dist(np.ones(BENCH_K_MAX + 1))


def build_linear(mode: str = "positive-optimum") -> FitnessDistribution:
    """Probability falling linearly toward the optimum.

    "table-2" uses (100 - |100-i|)/10100, which puts zero mass on the optimum
    (blind search would never finish); "positive-optimum" shifts by one so
    p(0) > 0, which is what the reported blind-step counts imply.
    """
    i = np.arange(BENCH_K_MAX + 1)
    if mode == "table-2":
        raw = 100 - np.abs(100 - i)
    elif mode == "positive-optimum":
        raw = 101 - np.abs(100 - i)
    else:
        raise ModelError(f"unknown linear mode {mode!r}")
    return _dist(raw)


def build_steep_linear() -> FitnessDistribution:
    """Linear benchmark with a five times steeper slope toward the optimum."""
    i = np.arange(BENCH_K_MAX + 1)
    raw = 1 + 5 * np.minimum(i, BENCH_K_MAX - i)
    return _dist(raw)


def build_exponential(mode: str = "index-0") -> FitnessDistribution:
    """Binomially decaying probabilities; p spans ~60 orders of magnitude.

    "index-0" uses C(200,i)/2^200 (sums to 1 exactly, blind = 2^200);
    "table-2" uses C(200,i+1)/2^200 renormalized.
    """
    if mode == "index-0":
        raw = [math.comb(BENCH_K_MAX, i) for i in range(BENCH_K_MAX + 1)]
    elif mode == "table-2":
        raw = [math.comb(BENCH_K_MAX, i + 1) for i in range(BENCH_K_MAX + 1)]
    else:
        raise ModelError(f"unknown exponential mode {mode!r}")
    scale = 2.0 ** BENCH_K_MAX
    return _dist(np.array([c / scale for c in raw]))


BENCHMARK_BUILDERS = {
    "uniform": build_uniform,
    "linear": build_linear,
    "steep-linear": build_steep_linear,
    "exponential": build_exponential,
}


def build_benchmark(name: str, **kwargs) -> FitnessDistribution:
    try:
        builder = BENCHMARK_BUILDERS[name]
    except KeyError:
        raise ModelError(f"unknown benchmark {name!r}") from None
    return builder(**kwargs)


# ---------------------------------------------------------------------------
# counts-based classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountsClassSpec:
    """A class given by point counts per level plus level-independent weights.

    size levels 0..size-1 carry the listed counts (level 0 is the optimum);
    whatever is left of `total` sits on one implicit worst level.  weights[d-1]
    is r(_, d) for d = 1..size//2.
    """

    size: int
    counts: tuple[int, ...]
    total: int
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(self.counts))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.size % 2 != 1:
            raise ModelError(f"size must be odd, got {self.size}")
        if len(self.counts) != self.size:
            raise ModelError("counts length must equal size")
        if any(c < 1 for c in self.counts):
            raise ModelError("all counts must be >= 1")
        if sum(self.counts) > self.total:
            raise InfeasibleWeightsError("total_too_low",
                                         f"sum(counts)={sum(self.counts)} > total={self.total}")
        if len(self.weights) != self.size // 2:
            raise ModelError(f"need {self.size // 2} weights, got {len(self.weights)}")
        if any(w < 0 for w in self.weights):
            raise ModelError("weights must be non-negative")

    @property
    def eval_level(self) -> int:
        return self.size // 2


def counts_residual_weight(spec: CountsClassSpec) -> float:
    """Implied NSF weight of the leftover mass at the evaluation level.

    Mirrors the source feasibility computation: the kernel row at K must
    normalize after placing p(K) on the diagonal and r(d)*p(K+-d) on the
    listed levels, with the remainder on the implicit worst level.
    """
    K = spec.eval_level
    p = [c / spec.total for c in spec.counts]
    residual = (spec.total - sum(spec.counts)) / spec.total
    used = p[K]
    for d in range(1, K + 1):
        used += spec.weights[d - 1] * p[K - d]
        if K + d < spec.size:
            used += spec.weights[d - 1] * p[K + d]
    leftover = 1.0 - used
    if leftover < -1e-12:
        raise InfeasibleWeightsError("total_too_low",
                                     f"row {K} mass exceeds 1 by {-leftover:.3g}")
    if residual == 0.0:
        if leftover > 1e-12:
            raise InfeasibleWeightsError("total_too_low",
                                         "leftover mass but no residual level")
        return 0.0
    return max(leftover, 0.0) / residual


def build_counts_class(spec: CountsClassSpec) -> ClassModel:
    """ClassModel over levels 0..size (level size holds the residual mass).

    Kernel rows are fully specified for levels 0..size//2 (all the steps
    recursion ever reads); rows above that cannot be stochastic under
    level-independent weights and are stored as self-loops.
    """
    K = spec.eval_level
    pp = counts_residual_weight(spec)
    if pp > spec.weights[-1] + 1e-12:
        raise InfeasibleWeightsError(
            "last_NSFWeight_too_low",
            f"residual weight {pp:.4g} exceeds r(_,{K}) = {spec.weights[-1]}")
    n_levels = spec.size + 1
    probs = np.array([c / spec.total for c in spec.counts]
                     + [(spec.total - sum(spec.counts)) / spec.total])
    dist = FitnessDistribution(probs)
    rows = np.zeros((n_levels, n_levels))
    rows[0, 0] = 1.0
    for k in range(1, n_levels):
        if k > K:
            rows[k, k] = 1.0
            continue
        rows[k, k] = probs[k]
        for d in range(1, K + 1):
            if k - d >= 0:
                rows[k, k - d] = spec.weights[d - 1] * probs[k - d]
            if k + d < spec.size:
                rows[k, k + d] = spec.weights[d - 1] * probs[k + d]
        leftover = 1.0 - math.fsum(rows[k].tolist())
        if leftover < -1e-9:
            raise InfeasibleWeightsError("total_too_low",
                                         f"row {k} mass exceeds 1 by {-leftover:.3g}")
        rows[k, spec.size] += max(leftover, 0.0)
        rows[k] /= math.fsum(rows[k].tolist())
    weights = {(k, d): spec.weights[d - 1]
               for k in range(n_levels) for d in range(1, K + 1)}
    model = ClassModel(dist, NeighborKernel(rows), NsfWeightTable(weights))
    return model


# ---------------------------------------------------------------------------
# analytic degree-regular 2-SAT
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sat2Spec:
    """Degree-regular random 2-SAT: each variable in exactly `occurrences`
    distinct 2-clauses."""

    n_vars: int = 50
    n_clauses: int = 100
    clause_len: int = 2
    occurrences_per_var: int = 4

    def __post_init__(self):
        if self.n_clauses * self.clause_len != self.n_vars * self.occurrences_per_var:
            raise ModelError("clause slots must equal variable occurrences")
        if self.clause_len != 2:
            raise ModelError("only 2-clauses are modelled analytically")


#: conventions for the analytic flip kernel.
#: "appendix-f": unsat clause probability k/m, satisfied clause turns false
#:               with probability 1/3 (the correct case analysis; matches
#:               Monte-Carlo flips on generated instances).
#: "half":       same but with the 1/2 rule (sensitivity variant).
#: "paper":      the 1/2 rule with improving/worsening sides mirrored; this
#:               is the convention that regenerates every published 2-SAT
#:               value (cost-20 table, the r(10,.) row, the crossings).
SAT2_CONVENTIONS = ("appendix-f", "half", "paper")


def _flip_row(p_unsat: float, false_frac: float, occ: int) -> dict[int, float]:
    """Multinomial over cost change for `occ` independent clauses.

    Each clause: unsat (prob p_unsat) -> newly satisfied (-1); satisfied and
    flipped false (prob (1-p_unsat)*false_frac) -> +1; otherwise unchanged.
    """
    pu = p_unsat
    nf = (1.0 - pu) * false_frac
    nt = (1.0 - pu) - nf
    row: dict[int, float] = {}
    for a in range(occ + 1):          # clauses going unsat -> sat
        for b in range(occ + 1 - a):  # clauses going sat -> unsat
            c = occ - a - b
            coeff = math.comb(occ, a) * math.comb(occ - a, b)
            row[b - a] = row.get(b - a, 0.0) + coeff * pu**a * nf**b * nt**c
    return row


def build_sat2_analytic(spec: Sat2Spec = Sat2Spec(),
                        convention: str = "appendix-f") -> ClassModel:
    """Analytic fitness distribution and flip kernel for the 2-SAT class.

    p(C) = C(m,C) (1/4)^C (3/4)^(m-C) over costs 0..m.  Kernel rows follow
    the per-clause case analysis under the chosen convention; the tiny
    out-of-range mass near the boundary rows (< 1e-6) is clamped onto the
    boundary level.
    """
    if convention not in SAT2_CONVENTIONS:
        raise ModelError(f"unknown 2-SAT convention {convention!r}")
    m = spec.n_clauses
    occ = spec.occurrences_per_var
    q = (1.0 / 2) ** spec.clause_len
    probs = np.array([math.comb(m, c) * q**c * (1 - q) ** (m - c)
                      for c in range(m + 1)])
    dist = FitnessDistribution(probs / math.fsum(probs.tolist()))

    false_frac = 1.0 / 3 if convention == "appendix-f" else 0.5
    rows = np.zeros((m + 1, m + 1))
    weights: dict[tuple[int, int], float] = {}
    for k in range(m + 1):
        row = _flip_row(k / m, false_frac, occ)
        if convention == "paper":
            row = {-d: v for d, v in row.items()}
        for d, v in row.items():
            rows[k, min(max(k + d, 0), m)] += v
        rows[k] /= math.fsum(rows[k].tolist())
        for d in range(1, m + 1):
            psum = dist.p(k - d) + dist.p(k + d)
            if psum > 0:
                pnsum = (rows[k, k - d] if k - d >= 0 else 0.0) \
                    + (rows[k, k + d] if k + d <= m else 0.0)
                weights[(k, d)] = pnsum / psum
    return ClassModel(dist, NeighborKernel(rows), NsfWeightTable(weights))


# ---------------------------------------------------------------------------
# counter-example fixtures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CounterExample:
    """A fixture violating exactly one hypothesis of the improvement theorem."""

    name: str
    model: ClassModel
    k: int
    violates: str          # one of: monotone-p, nsf-weights, normal, same-cost
    expected_blind: float  # p^<(k)
    expected_nbr: float    # pn^<(k)


COUNTEREXAMPLE_IDS = ("non-monotone-p", "non-nsf-weights", "non-normal",
                      "same-cost-only")


def build_counterexample(fixture_id: str) -> CounterExample:
    """The four fixtures; each stated r table is taken verbatim, so the
    kernel/weight consistency identity deliberately does not hold for
    "non-normal"."""
    n = 101  # costs 0..100
    if fixture_id == "non-monotone-p":
        # p(0) large breaks monotonicity; neighbours sit at distance 1 only.
        probs = np.full(n, 1.0 / 200)
        probs[0] = 100.0 / 200
        dist = FitnessDistribution(probs)
        rows = np.zeros((n, n))
        for k in range(n):
            if k == 0:
                rows[k, 1] = 1.0
                continue
            c = 1.0 / (dist.p(k - 1) + dist.p(k + 1))
            rows[k, k - 1] = c * dist.p(k - 1)
            if k + 1 < n:
                rows[k, k + 1] = c * dist.p(k + 1)
            rows[k] /= math.fsum(rows[k].tolist())
        weights = {(25, 1): 100.0}
        weights.update({(25, d): 0.0 for d in range(2, 26)})
        model = ClassModel(dist, NeighborKernel(rows), NsfWeightTable(weights))
        return CounterExample(fixture_id, model, 25, "monotone-p", 0.62, 0.5)

    probs = np.full(n, 1.0 / 101)
    dist = FitnessDistribution(probs)
    rows = np.zeros((n, n))
    if fixture_id == "non-nsf-weights":
        # neighbours only at cost distance 26: weight order inverted.
        for k in range(n):
            dest = k + 26 if k + 26 < n else k - 26
            rows[k, dest] = 1.0
        weights = {(25, d): 0.0 for d in range(1, 26)}
        weights[(25, 26)] = 101.0
        model = ClassModel(dist, NeighborKernel(rows), NsfWeightTable(weights))
        return CounterExample(fixture_id, model, 25, "nsf-weights", 25 / 101, 0.0)
    if fixture_id == "non-normal":
        # every point's neighbours all sit one level worse (asymmetric).
        for k in range(n):
            rows[k, min(k + 1, n - 1)] = 1.0
        weights = {(25, 1): 101.0}
        weights.update({(25, d): 0.0 for d in range(2, 26)})
        model = ClassModel(dist, NeighborKernel(rows), NsfWeightTable(weights))
        return CounterExample(fixture_id, model, 25, "normal", 25 / 101, 0.0)
    if fixture_id == "same-cost-only":
        # all neighbours share the current cost.
        np.fill_diagonal(rows, 1.0)
        weights = {(25, d): 0.0 for d in range(1, 26)}
        model = ClassModel(dist, NeighborKernel(rows),
                           NsfWeightTable(weights, weight_at_zero={25: 101.0}))
        return CounterExample(fixture_id, model, 25, "same-cost", 25 / 101, 0.0)
    raise ModelError(f"unknown counter-example {fixture_id!r}")
