"""Randomized property suites for the improvement and descent results.

The source proofs are not desk-checkable here; instead each lemma/theorem is
an executable property evaluated on freshly generated models that satisfy its
hypotheses.  A suite returns a list of violation records (empty = pass), so
the CLI `verify` command and the test suite share one implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import blind_seeded_steps, steps, steps_uniform
from .model import (
    ClassModel,
    FitnessDistribution,
    NeighborKernel,
    NsfWeightTable,
    avg_nsf_weight,
    blind_improve_prob,
    blind_worsen_prob,
    modal_cost,
    weighted_sum,
)

REL_TOL = 1e-9


@dataclass
class Violation:
    suite: str
    seed_index: int
    detail: str


def _rel_ge(lhs: float, rhs: float) -> bool:
    """lhs >= rhs up to relative tolerance."""
    return lhs >= rhs - REL_TOL * max(abs(lhs), abs(rhs), 1.0)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def gen_ge_instance(rng: np.random.Generator):
    """(dist, weights, k) with k <= k_ge and r(k,.) non-increasing.

    p is non-decreasing on 0..2k (so the modal cost is at least 2k) and
    arbitrary beyond; weights are positive and non-increasing in delta.
    """
    k = int(rng.integers(2, 9))
    k_max = 2 * k + int(rng.integers(1, 8))
    raw = np.sort(rng.random(2 * k + 1) + 1e-3)
    tail = rng.random(k_max - 2 * k) * raw[-1] + 1e-3
    probs = np.concatenate([raw, tail])
    dist = FitnessDistribution(probs / math.fsum(probs.tolist()))
    w = np.sort(rng.random(k_max) * rng.choice([0.5, 1.0, 3.0]))[::-1] + 1e-6
    weights = NsfWeightTable({(k, d): float(w[d - 1]) for d in range(1, k_max + 1)})
    return dist, weights, k


def _scaled_weight_rows(rng: np.random.Generator, k: int, probs: np.ndarray,
                        force_rbar_ge_1: bool):
    """Level-dependent full-NSF weight rows feasible as kernel rows."""
    k_max = len(probs) - 1
    base = np.sort(rng.random(k_max))[::-1] + 1e-6  # non-increasing in delta
    # weights grow as the level improves: row `lvl` scaled by non-increasing g
    g = np.sort(rng.random(k_max + 1) * 0.5 + 0.75)[::-1]
    rows = {lvl: base * g[lvl] for lvl in range(1, k_max + 1)}
    if force_rbar_ge_1:
        rbar = rows[k][:k].sum() / k
        if rbar < 1.0:
            factor = (1.0 / rbar) * (1.0 + float(rng.random()))
            rows = {lvl: r * factor for lvl, r in rows.items()}
    # keep every used row's off-diagonal mass below 1 so a kernel row exists
    while True:
        worst = 0.0
        for lvl in range(1, k + 1):
            mass = sum(rows[lvl][d - 1] * probs[lvl - d] for d in range(1, lvl + 1))
            mass += sum(rows[lvl][d - 1] * probs[lvl + d]
                        for d in range(1, k_max - lvl + 1))
            worst = max(worst, mass)
        if worst <= 0.999:
            break
        if force_rbar_ge_1:
            # weights cannot shrink below rbar >= 1; thin the probabilities
            probs = probs * 0.5
            probs[-1] = 1.0 - math.fsum(probs[:-1].tolist())
        else:
            rows = {lvl: r * (0.9 / worst) for lvl, r in rows.items()}
    return rows, probs


def gen_descent_model(rng: np.random.Generator, force_rbar_ge_1=True):
    """(model, k) satisfying the descent theorem's hypotheses.

    p(i) >= p(0) for i <= k, full NSF from k, normal rows (equality), and
    optionally rbar(k) >= 1.  The leftover mass of each row sits on the worst
    level, which the recursion never reads.
    """
    k = int(rng.integers(2, 7))
    k_max = k + int(rng.integers(1, 5))
    raw = np.concatenate([
        np.sort(rng.random(k + 1) + 0.05),      # p non-decreasing up to k
        rng.random(k_max - k) + 0.05,           # arbitrary above
    ])
    probs = raw / math.fsum(raw.tolist())
    wrows, probs = _scaled_weight_rows(rng, k, probs, force_rbar_ge_1)
    dist = FitnessDistribution(probs)
    rows = np.zeros((k_max + 1, k_max + 1))
    rows[0, 0] = 1.0
    for lvl in range(1, k_max + 1):
        if lvl > k:
            rows[lvl, lvl] = 1.0
            continue
        for d in range(1, lvl + 1):
            rows[lvl, lvl - d] = wrows[lvl][d - 1] * probs[lvl - d]
        for d in range(1, k_max - lvl + 1):
            rows[lvl, lvl + d] = wrows[lvl][d - 1] * probs[lvl + d]
        leftover = 1.0 - math.fsum(rows[lvl].tolist())
        rows[lvl, k_max] += leftover
        rows[lvl] /= math.fsum(rows[lvl].tolist())
    weights = {(lvl, d): float(wrows[lvl][d - 1])
               for lvl in range(1, k + 1) for d in range(1, k_max + 1)}
    model = ClassModel(dist, NeighborKernel(rows), NsfWeightTable(weights))
    return model, k


def gen_full_nsf_weights(rng: np.random.Generator, k: int) -> NsfWeightTable:
    """A full-NSF weight table on levels 1..k (non-increasing in delta and
    in worsening level)."""
    base = np.sort(rng.random(k) * rng.choice([0.5, 2.0, 10.0]))[::-1] + 1e-6
    g = np.sort(rng.random(k + 1) * 0.5 + 0.75)[::-1]
    return NsfWeightTable({(lvl, d): float(base[d - 1] * g[lvl])
                           for lvl in range(1, k + 1) for d in range(1, lvl + 1)})


# ---------------------------------------------------------------------------
# property checks, one generated case each
# ---------------------------------------------------------------------------

def check_ratio_lemmas(dist, weights, k) -> list[str]:
    """The averaged-weight bounds, the ratio property, and the rbar>=1 case."""
    fails = []
    rbar = avg_nsf_weight(weights, k)
    pless, pmore = blind_improve_prob(dist, k), blind_worsen_prob(dist, k)
    pbr_less = weighted_sum(dist, weights, k, "improving")
    pbr_more = weighted_sum(dist, weights, k, "worsening")
    if not _rel_ge(pbr_less, rbar * pless):
        fails.append(f"pbr^< {pbr_less} < rbar*p^< {rbar * pless}")
    if not _rel_ge(rbar * pmore, pbr_more):
        fails.append(f"pbr^> {pbr_more} > rbar*p^> {rbar * pmore}")
    if pbr_more > 0 and pmore > 0:
        if not _rel_ge(pbr_less / pbr_more, pless / pmore):
            fails.append("improving/worsening ratio not improved")
    if rbar >= 1.0 and not _rel_ge(pbr_less, pless):
        fails.append(f"rbar>=1 but pbr^< {pbr_less} < p^< {pless}")
    return fails


def check_same_cost_lemma(dist, weights, k) -> list[str]:
    """pn(k,k) <= p(k) forces pbr^<(k) >= p^<(k) for the induced kernel."""
    pbr_less = weighted_sum(dist, weights, k, "improving")
    pbr_more = weighted_sum(dist, weights, k, "worsening")
    pn_same = 1.0 - pbr_less - pbr_more
    if pn_same < 0 or pn_same > dist.p(k):
        return []  # hypothesis not satisfied by this draw
    if not _rel_ge(pbr_less, blind_improve_prob(dist, k)):
        return ["pn(k,k)<=p(k) but pbr^< < p^<"]
    return []


def check_improvement_theorem(rng, dist, weights, k) -> list[str]:
    """Normal kernel row over the weights: pn^<(k) >= p^<(k), strict when
    r(k,1) > 1, mass exists above the modal cost, and pn(k,k) <= p(k)."""
    fails = []
    k_max = dist.k_max
    row = np.zeros(k_max + 1)
    for d in range(1, k + 1):
        row[k - d] = (weights.get(k, d) or 0.0) * dist.p(k - d)
    for d in range(1, k_max - k + 1):
        row[k + d] = (weights.get(k, d) or 0.0) * dist.p(k + d)
    base_off = math.fsum(row.tolist())
    if base_off > 1.0:
        return []  # weights too heavy to form a kernel row; skip this draw
    # boost the improving side within the remaining budget (stays normal)
    budget = (1.0 - base_off) * float(rng.random())
    boost = rng.random(k)
    boost = boost / max(boost.sum(), 1e-12) * budget
    for d in range(1, k + 1):
        row[k - d] += boost[d - 1]
    off = math.fsum(row.tolist())
    row[k] = max(1.0 - off, 0.0)
    same_ok = row[k] <= dist.p(k) + 1e-15
    rbar_ok = avg_nsf_weight(weights, k) >= 1.0
    if not (same_ok or rbar_ok):
        return []
    pn_less = math.fsum(row[:k].tolist())
    p_less = blind_improve_prob(dist, k)
    if not _rel_ge(pn_less, p_less):
        fails.append(f"pn^< {pn_less} < p^< {p_less}")
    if (weights.get(k, 1) or 0.0) > 1.0 and modal_cost(dist) < k_max and same_ok:
        if not pn_less > p_less - REL_TOL:
            fails.append("strict improvement expected but not found")
    return fails


def check_descent_theorem(model, k) -> list[str]:
    profile = steps(model, k)
    if not profile.values[k] <= profile.blind * (1 + 1e-6):
        return [f"steps({k}) = {profile.values[k]} > blind = {profile.blind}"]
    return []


def check_seeded_theorem(model, k) -> list[str]:
    blind = 1.0 / model.dist.p(0)
    val = blind_seeded_steps(model, k)
    if not val <= blind * (1 + 1e-6):
        return [f"blsteps({k}) = {val} > blind = {blind}"]
    return []


def check_uniform_descent_lemmas(weights, p, k) -> list[str]:
    """Lemma family for uniform level probabilities under full NSF."""
    fails = []
    rbar = avg_nsf_weight(weights, k)
    pbr_less = p * math.fsum((weights.get(k, d) or 0.0) for d in range(1, k + 1))
    val = steps_uniform(weights, p, k)
    if rbar >= 1.0:
        if not k / pbr_less <= (1.0 / p) * (1 + REL_TOL):
            fails.append("steps upper bound k/pbr^< > blind")
        if not val <= (1.0 / p) * (1 + 1e-6):
            fails.append(f"steps_u({k}) = {val} > blind = {1.0 / p}")
    if not val <= (k / pbr_less) * (1 + 1e-6):
        fails.append(f"steps_u({k}) = {val} > k/pbr^< = {k / pbr_less}")
    prev = 0.0
    for j in range(1, k + 1):
        cur = steps_uniform(weights, p, j)
        if cur < prev * (1 - 1e-9):
            fails.append(f"steps_u not monotone at {j}: {cur} < {prev}")
        prev = cur
    return fails


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

SUITES = ("lemma-ratios", "lemma-same-cost", "theorem-improvement",
          "theorem-descent", "theorem-seeded", "lemma-uniform-descent")


def run_suite(name: str, n_models: int = 1000, seed: int = 0) -> list[Violation]:
    """Run one named suite; returns violations (empty list = pass)."""
    rng = np.random.default_rng(seed)
    out: list[Violation] = []
    for i in range(n_models):
        if name in ("lemma-ratios", "lemma-same-cost", "theorem-improvement"):
            dist, weights, k = gen_ge_instance(rng)
            if name == "lemma-ratios":
                fails = check_ratio_lemmas(dist, weights, k)
            elif name == "lemma-same-cost":
                fails = check_same_cost_lemma(dist, weights, k)
            else:
                fails = check_improvement_theorem(rng, dist, weights, k)
        elif name == "theorem-descent":
            model, k = gen_descent_model(rng)
            fails = check_descent_theorem(model, k)
        elif name == "theorem-seeded":
            model, k = gen_descent_model(rng)
            fails = check_seeded_theorem(model, k)
        elif name == "lemma-uniform-descent":
            k = int(rng.integers(2, 8))
            weights = gen_full_nsf_weights(rng, k)
            srmax = max(math.fsum((weights.get(lvl, d) or 0.0)
                                  for d in range(1, lvl + 1))
                        for lvl in range(1, k + 1))
            p = float(rng.random()) * min(1.0 / (k + 2), 0.9 / srmax)
            p = max(p, 1e-6 * min(1.0 / (k + 2), 0.9 / srmax))
            fails = check_uniform_descent_lemmas(weights, p, k)
        else:
            raise ValueError(f"unknown suite {name!r}")
        out.extend(Violation(name, i, f) for f in fails)
    return out


def run_all(n_models: int = 1000, seed: int = 0,
            suites=SUITES) -> dict[str, list[Violation]]:
    return {name: run_suite(name, n_models, seed) for name in suites}
