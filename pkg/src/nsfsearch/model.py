"""Core objects: fitness distributions, NSF weight tables, neighbour kernels.

Costs are integers 0..k_max with 0 the optimum.  A problem class is summarised
by three mutually related objects:

* the fitness distribution p(k) — probability a uniformly random point has
  cost k,
* the neighbour kernel pn(k1,k2) — probability a uniformly random neighbour
  of a cost-k1 point has cost k2,
* the NSF weight table r(k,delta) relating the two through
  pn(k,k+d) + pn(k,k-d) = r(k,d) * (p(k+d) + p(k-d)).

Everything here is immutable after construction and purely functional.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

NORMALIZATION_TOL = 1e-9
INEQ_SLACK = 1e-12


class ModelError(ValueError):
    """Raised when inputs violate a model-level contract."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FitnessDistribution:
    """Probabilities p(0..k_max); p[0] is the optimum's probability."""

    probs: np.ndarray

    def __post_init__(self):
        p = _readonly(self.probs)
        object.__setattr__(self, "probs", p)
        if p.ndim != 1 or len(p) < 1:
            raise ModelError("probs must be a non-empty 1-d array")
        if np.any(p < 0):
            raise ModelError("negative fitness probability")
        total = math.fsum(p.tolist())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ModelError(f"fitness probabilities sum to {total!r}, not 1")

    @property
    def k_max(self) -> int:
        return len(self.probs) - 1

    def p(self, k: int) -> float:
        """p(k), with out-of-range costs contributing 0."""
        if 0 <= k <= self.k_max:
            return float(self.probs[k])
        return 0.0


@dataclass(frozen=True)
class NsfWeightTable:
    """r(k,delta) for delta >= 1, stored sparsely; NaN/missing = undefined.

    By convention r(k,0) = 1 unless a fixture overrides it (weight_at_zero).
    """

    weights: dict[tuple[int, int], float]
    weight_at_zero: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for (k, d), w in self.weights.items():
            if d < 1:
                raise ModelError(f"delta must be >= 1 in weights, got {d}")
            if not math.isnan(w) and w < 0:
                raise ModelError(f"negative NSF weight r({k},{d}) = {w}")

    def get(self, k: int, delta: int) -> float | None:
        """r(k,delta), or None when undefined."""
        if delta == 0:
            return self.weight_at_zero.get(k, 1.0)
        w = self.weights.get((k, delta))
        if w is None or math.isnan(w):
            return None
        return w

    def defined_deltas(self, k: int, delta_max: int) -> list[int]:
        return [d for d in range(1, delta_max + 1) if self.get(k, d) is not None]


@dataclass(frozen=True)
class NeighborKernel:
    """Row-stochastic matrix pn(k1,k2) over costs 0..k_max."""

    rows: np.ndarray

    def __post_init__(self):
        r = _readonly(self.rows)
        object.__setattr__(self, "rows", r)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ModelError("kernel must be square")
        if np.any(r < 0):
            raise ModelError("negative neighbour probability")
        sums = [math.fsum(row.tolist()) for row in r]
        bad = [i for i, s in enumerate(sums) if abs(s - 1.0) > NORMALIZATION_TOL]
        if bad:
            raise ModelError(f"kernel rows {bad[:5]} do not sum to 1")

    @property
    def k_max(self) -> int:
        return self.rows.shape[0] - 1

    def pn(self, k1: int, k2: int) -> float:
        if 0 <= k1 <= self.k_max and 0 <= k2 <= self.k_max:
            return float(self.rows[k1, k2])
        return 0.0


@dataclass(frozen=True)
class ClassModel:
    """A problem class: distribution, kernel and weight table together."""

    dist: FitnessDistribution
    kernel: NeighborKernel
    weights: NsfWeightTable

    def __post_init__(self):
        if self.dist.k_max != self.kernel.k_max:
            raise ModelError("distribution and kernel cover different cost ranges")

    @property
    def k_max(self) -> int:
        return self.dist.k_max

    def consistency_residuals(self, levels=None) -> dict[tuple[int, int], float]:
        """|pn(k,k+d)+pn(k,k-d) - r(k,d)*(p(k+d)+p(k-d))| wherever r is defined.

        Builders assert these are ~0; deliberately inconsistent fixtures skip
        the check.
        """
        out = {}
        ks = range(self.k_max + 1) if levels is None else levels
        for k in ks:
            for d in range(1, self.k_max + 1):
                r = self.weights.get(k, d)
                if r is None:
                    continue
                psum = self.dist.p(k + d) + self.dist.p(k - d)
                if psum == 0.0:
                    continue
                pnsum = self.kernel.pn(k, k + d) + self.kernel.pn(k, k - d)
                out[(k, d)] = abs(pnsum - r * psum)
        return out


# ---------------------------------------------------------------------------
# scalar operations
# ---------------------------------------------------------------------------

def modal_cost(dist: FitnessDistribution) -> int:
    """Worst cost below which p is non-increasing toward the optimum.

    Equivalently the end of the longest prefix on which p is non-decreasing
    in raw cost; ties resolve toward the larger cost, so a uniform
    distribution yields k_max.
    """
    p = dist.probs
    k = 0
    for i in range(1, len(p)):
        if p[i] >= p[i - 1]:
            k = i
        else:
            break
    return k


def good_enough_cost(dist: FitnessDistribution) -> int:
    """Half the modal cost (integer floor)."""
    return modal_cost(dist) // 2


def blind_improve_prob(dist: FitnessDistribution, k: int) -> float:
    """p^<(k): probability a blind sample is strictly better than k."""
    if not 0 <= k <= dist.k_max:
        raise ModelError(f"cost {k} outside 0..{dist.k_max}")
    return math.fsum(dist.probs[:k].tolist())


def blind_worsen_prob(dist: FitnessDistribution, k: int) -> float:
    """p^>(k): probability a blind sample is strictly worse than k."""
    if not 0 <= k <= dist.k_max:
        raise ModelError(f"cost {k} outside 0..{dist.k_max}")
    return math.fsum(dist.probs[k + 1:].tolist())


def nbr_improve_prob(kernel: NeighborKernel, k: int) -> float:
    """pn^<(k): probability a random neighbour of cost k improves on it."""
    if not 0 <= k <= kernel.k_max:
        raise ModelError(f"cost {k} outside 0..{kernel.k_max}")
    return math.fsum(kernel.rows[k, :k].tolist())


def weighted_sum(dist: FitnessDistribution, weights: NsfWeightTable, k: int,
                 mode: str = "improving") -> float:
    """sum over d of r(k,d) * p(k -/+ d); undefined weights contribute 0."""
    if mode == "improving":
        terms = [(weights.get(k, d) or 0.0) * dist.p(k - d) for d in range(1, k + 1)]
    elif mode == "worsening":
        terms = [(weights.get(k, d) or 0.0) * dist.p(k + d)
                 for d in range(1, dist.k_max - k + 1)]
    else:
        raise ModelError(f"unknown mode {mode!r}")
    return math.fsum(terms)


def weighted_improve_prob(model: ClassModel, k: int, mode: str = "improving") -> float:
    """pbr^<(k) = sum r(k,d) p(k-d), or pbr^>(k) with mode='worsening'."""
    return weighted_sum(model.dist, model.weights, k, mode)


def avg_nsf_weight(weights: NsfWeightTable, k: int, delta_max: int | None = None) -> float:
    """Mean of the defined weights r(k,1..delta_max) (delta_max defaults to k).

    Undefined entries (no probability mass at either side) are excluded from
    both the sum and the divisor.
    """
    if k < 1:
        raise ModelError("average NSF weight is undefined at k = 0")
    dmax = k if delta_max is None else delta_max
    defined = [(d, weights.get(k, d)) for d in range(1, dmax + 1)]
    vals = [w for _, w in defined if w is not None]
    if not vals:
        raise ModelError(f"no defined NSF weights at k = {k}")
    return math.fsum(vals) / len(vals)


# ---------------------------------------------------------------------------
# kernel construction from a distribution and a distance bound
# ---------------------------------------------------------------------------

def kernel_from_weights(dist: FitnessDistribution, bound: int,
                        same_cost_rule: str = "flat") -> ClassModel:
    """Benchmark kernel: neighbours within cost distance `bound`, NSF weight
    constant over the window.

    same_cost_rule:
      "flat"    — one weight c_k for every level in the window including k
                  itself (the benchmark construction: pn(k,j) = p(j)/Z_k);
      "match-p" — pn(k,k) = p(k), remaining mass spread as c_k * p over the
                  off-window (the constraint-program convention);
      "zero"    — pn(k,k) = 0, everything on distances 1..bound.
    """
    if bound < 1:
        raise ModelError("bound must be >= 1")
    if same_cost_rule not in ("flat", "match-p", "zero"):
        raise ModelError(f"unknown same_cost_rule {same_cost_rule!r}")
    p = dist.probs
    n = len(p)
    rows = np.zeros((n, n))
    weights: dict[tuple[int, int], float] = {}
    wzero: dict[int, float] = {}
    for k in range(n):
        lo, hi = max(0, k - bound), min(n - 1, k + bound)
        off_mass = math.fsum(p[lo:k].tolist()) + math.fsum(p[k + 1:hi + 1].tolist())
        if same_cost_rule == "flat":
            z = off_mass + p[k]
            if z <= 0:
                raise ModelError(f"no probability mass within bound of cost {k}")
            c = 1.0 / z
            rows[k, lo:hi + 1] = p[lo:hi + 1] * c
            wzero[k] = c
        else:
            if off_mass <= 0:
                raise ModelError(f"no probability mass within bound of cost {k}")
            same = p[k] if same_cost_rule == "match-p" else 0.0
            c = (1.0 - same) / off_mass
            rows[k, lo:hi + 1] = p[lo:hi + 1] * c
            rows[k, k] = same
            if same_cost_rule == "match-p":
                wzero[k] = 1.0
            else:
                wzero[k] = 0.0
        for d in range(1, n):
            if dist.p(k - d) + dist.p(k + d) > 0:
                weights[(k, d)] = c if d <= bound else 0.0
        # exact renormalization against accumulated float error
        rows[k] /= math.fsum(rows[k].tolist())
    model = ClassModel(dist, NeighborKernel(rows), NsfWeightTable(weights, wzero))
    return model


# ---------------------------------------------------------------------------
# NSF predicates
# ---------------------------------------------------------------------------

def check_normal(model: ClassModel, k: int, slack: float = INEQ_SLACK) -> dict[int, bool]:
    """Per-delta verdicts of pn(k,k-d) >= r(k,d) * p(k-d)."""
    out = {}
    for d in range(1, k + 1):
        r = model.weights.get(k, d)
        if r is None:
            continue
        out[d] = model.kernel.pn(k, k - d) >= r * model.dist.p(k - d) - slack
    return out


def is_normal(model: ClassModel, k: int) -> bool:
    return all(check_normal(model, k).values())


def check_boosting(model: ClassModel, k: int) -> bool:
    """Strict version of normal at every improving distance with p mass."""
    for d in range(1, k + 1):
        r = model.weights.get(k, d)
        pk = model.dist.p(k - d)
        if r is None or pk == 0:
            continue
        if not model.kernel.pn(k, k - d) > r * pk:
            return False
    return True


def check_nsf(weights: NsfWeightTable, k: int, delta_max: int | None = None,
              slack: float = INEQ_SLACK) -> dict[int, bool]:
    """Per-delta verdicts of r(k,d) >= r(k,d+1) over adjacent defined pairs."""
    if k < 1:
        raise ModelError("NSF check needs k >= 1")
    dmax = k if delta_max is None else delta_max
    ds = weights.defined_deltas(k, dmax)
    out = {}
    for a, b in zip(ds, ds[1:]):
        if b == a + 1:
            out[a] = weights.get(k, a) >= weights.get(k, b) - slack
    return out


def has_nsf(weights: NsfWeightTable, k: int, delta_max: int | None = None) -> bool:
    return all(check_nsf(weights, k, delta_max).values())


def check_full_nsf(weights: NsfWeightTable, k0: int,
                   delta_max: int | None = None) -> bool:
    """NSF at every level up to k0 plus weights non-increasing in the level.

    r(k1,d) <= r(k2,d) whenever d <= k2 < k1 <= k0.
    """
    if k0 < 1:
        raise ModelError("full NSF needs k0 >= 1")
    for k in range(1, k0 + 1):
        if not has_nsf(weights, k, delta_max):
            return False
    for k1 in range(2, k0 + 1):
        for k2 in range(1, k1):
            dmax = k2 if delta_max is None else min(delta_max, k2)
            for d in range(1, dmax + 1):
                w1, w2 = weights.get(k1, d), weights.get(k2, d)
                if w1 is None or w2 is None:
                    continue
                if w1 > w2 + INEQ_SLACK:
                    return False
    return True


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------

def model_to_json(model: ClassModel) -> str:
    """Serialize with full float precision for exact round trips."""
    obj = {
        "k_max": model.k_max,
        "probs": [float(x) for x in model.dist.probs],
        "weights": {
            str(k): {str(d): model.weights.weights[(k, d)]
                     for (kk, d) in sorted(model.weights.weights)
                     if kk == k}
            for k in sorted({kk for kk, _ in model.weights.weights})
        },
        "weight_at_zero": {str(k): v for k, v in sorted(model.weights.weight_at_zero.items())},
        "rows": [[float(x) for x in row] for row in model.kernel.rows],
    }
    return json.dumps(obj)


def model_from_json(text: str) -> ClassModel:
    obj = json.loads(text)
    dist = FitnessDistribution(np.array(obj["probs"]))
    kernel = NeighborKernel(np.array(obj["rows"]))
    weights = {(int(k), int(d)): w
               for k, row in obj["weights"].items() for d, w in row.items()}
    wzero = {int(k): v for k, v in obj.get("weight_at_zero", {}).items()}
    return ClassModel(dist, kernel, NsfWeightTable(weights, wzero))
