"""Expected-value machinery: one-step improvements, the steps recursions,
blind search, blind-seeded descent, the switch-point study, and the grid
falsifier that replaces the original constraint program."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .benchmarks import (
    CountsClassSpec,
    InfeasibleWeightsError,
    build_counts_class,
)
from .model import (
    ClassModel,
    FitnessDistribution,
    ModelError,
    NsfWeightTable,
    nbr_improve_prob,
)


class UnreachableOptimumError(ModelError):
    """Some level below the start has zero improving probability."""


@dataclass(frozen=True)
class StepsProfile:
    """Expected local-descent steps per starting cost, next to the blind count."""

    values: np.ndarray  # values[k] = expected steps from cost k, k = 0..k0
    blind: float
    k0: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def rows(self):
        return [(k, float(self.values[k]), self.blind) for k in range(self.k0 + 1)]


def expected_one_step_improvement(model: ClassModel, k: int,
                                  mode: str = "neighbourhood") -> float:
    """Mean improvement of a single sample; worsening samples improve by 0."""
    if not 0 <= k <= model.k_max:
        raise ModelError(f"cost {k} outside 0..{model.k_max}")
    if mode == "neighbourhood":
        probs = model.kernel.rows[k, :k]
    elif mode == "blind":
        probs = model.dist.probs[:k]
    else:
        raise ModelError(f"unknown mode {mode!r}")
    gains = np.arange(k, 0, -1, dtype=float)
    return math.fsum((probs * gains).tolist())


def blind_steps(dist: FitnessDistribution) -> float:
    """Expected evaluations for blind search to hit the optimum: 1/p(0)."""
    p0 = dist.p(0)
    if p0 <= 0:
        raise ModelError("p(0) = 0: blind search never terminates")
    return 1.0 / p0


def steps(model: ClassModel, k: int) -> StepsProfile:
    """Expected local-descent evaluations from every cost 0..k.

    steps(0) = 0 and steps(j) = 1/pn^<(j) + sum_{i<j} pn(j,i)/pn^<(j) * steps(i),
    computed bottom up.
    """
    if not 0 <= k <= model.k_max:
        raise ModelError(f"cost {k} outside 0..{model.k_max}")
    vals = np.zeros(k + 1)
    for j in range(1, k + 1):
        pn_less = nbr_improve_prob(model.kernel, j)
        if pn_less <= 0:
            raise UnreachableOptimumError(
                f"pn^<({j}) = 0: optimum unreachable from level {j}")
        row = model.kernel.rows[j, :j]
        vals[j] = (1.0 + math.fsum((row * vals[:j]).tolist())) / pn_less
    return StepsProfile(vals, blind_steps(model.dist), k)


def steps_uniform(weights: NsfWeightTable, p: float, k: int) -> float:
    """The steps recursion specialised to uniform level probability p with
    pn(k1,k2) = r(k1, k1-k2) * p; the form the descent lemmas quantify over."""
    if p <= 0:
        raise ModelError("p must be positive")
    vals = [0.0]
    for j in range(1, k + 1):
        terms = []
        for d in range(1, j + 1):
            r = weights.get(j, d)
            if r is None:
                r = 0.0
            terms.append(r * p)
        pbr_less = math.fsum(terms)
        if pbr_less <= 0:
            raise UnreachableOptimumError(
                f"pbr^<({j}) = 0: optimum unreachable from level {j}")
        acc = 1.0 + math.fsum(t * vals[j - d] for d, t in enumerate(terms, start=1))
        vals.append(acc / pbr_less)
    return vals[k]


def blind_seeded_steps(model: ClassModel, k: int, inclusive: bool = False) -> float:
    """Expected evaluations of: blind-sample until a cost better than k
    (or at least as good as k when inclusive=True), then local descent.

    Closed form of the fixed-point equation:
    blsteps(k) = (1 + sum_{i>=1, i accepted} p(i) steps(i)) / P(accept).
    """
    top = k + 1 if inclusive else k
    if top < 1:
        raise ModelError("threshold leaves no acceptable costs")
    accept = math.fsum(model.dist.probs[:top].tolist())
    if accept <= 0:
        raise ModelError(f"no probability mass below threshold {k}")
    profile = steps(model, top - 1)
    num = 1.0 + math.fsum(
        (model.dist.probs[1:top] * profile.values[1:top]).tolist())
    return num / accept


@dataclass(frozen=True)
class SwitchReport:
    """Where blind-seeded descent is cheapest, plus the one-step-gap candidate."""

    best_k: int           # strict threshold minimising blind_seeded_steps
    best_value: float
    candidate_k: int | None  # smallest k where blind one-step gain exceeds
    values: dict[int, float]


def switch_point(model: ClassModel, k_hi: int) -> SwitchReport:
    """Scan strict thresholds 1..k_hi for the cheapest seeded descent."""
    values = {}
    for k in range(1, k_hi + 1):
        try:
            values[k] = blind_seeded_steps(model, k)
        except ModelError:
            continue
    if not values:
        raise ModelError("no feasible switch threshold at or below k_hi")
    best_k = min(values, key=lambda kk: (values[kk], kk))
    candidate = None
    for k in range(1, k_hi + 1):
        e_blind = expected_one_step_improvement(model, k, "blind")
        e_nbr = expected_one_step_improvement(model, k, "neighbourhood")
        if e_blind > e_nbr:
            candidate = k
            break
    return SwitchReport(best_k, values[best_k], candidate, values)


# ---------------------------------------------------------------------------
# grid falsifier
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FalsifierViolation:
    weights: tuple[float, ...]
    steps_value: float
    blind: float


def _grid(epsilon: float, r_max: float, resolution: float) -> list[float]:
    vals = [epsilon]
    v = math.ceil(epsilon / resolution) * resolution
    while v <= r_max + 1e-12:
        if v > epsilon + 1e-12:
            vals.append(round(v, 12))
        v += resolution
    return vals


def falsify_weights(spec: CountsClassSpec, resolution: float, epsilon: float,
                    r_max: float = 10.0, model_builder=build_counts_class):
    """Search the weight grid for a counter-example to 'NSF beats blind'.

    Enumerates every non-increasing weight vector on the grid [epsilon, r_max]
    (step `resolution`), keeps the feasible ones with r(_,1) > 1 + epsilon,
    and reports any whose steps at the evaluation level reach blind.  The
    claim is a grid claim, not a proof.  model_builder is swappable so tests
    can demonstrate that dropping normality admits violations.
    """
    if resolution <= 0:
        raise ModelError("resolution must be positive")
    K = spec.eval_level
    grid = _grid(epsilon, r_max, resolution)
    blind = spec.total / spec.counts[0]
    violations: list[FalsifierViolation] = []
    for combo in itertools.combinations_with_replacement(sorted(grid, reverse=True), K):
        if combo[0] <= 1.0 + epsilon:
            continue
        candidate = CountsClassSpec(spec.size, spec.counts, spec.total, combo)
        try:
            model = model_builder(candidate)
        except InfeasibleWeightsError:
            continue
        profile = steps(model, K)
        if profile.values[K] >= blind * (1 - 1e-12):
            violations.append(FalsifierViolation(combo, float(profile.values[K]),
                                                 blind))
    return violations
