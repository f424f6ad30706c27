"""Monte-Carlo validation: blind search, first-improvement local descent and
blind-seeded descent, on abstract kernels and on concrete instances.

Abstract runs draw successor costs straight from the class model.  Because a
rejected draw leaves the state unchanged, the number of evaluations spent at
a level is geometric; the default abstract path samples that geometric
directly (identical trial-count distribution, far fewer RNG calls) and the
`literal=True` path draws one neighbour at a time for streaming.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .empirical import Sat2Instance, TspInstance, flip_deltas_all, two_opt_moves
from .model import ClassModel, ModelError, nbr_improve_prob


@dataclass
class Trace:
    """One run: accepted fitness sequence plus evaluation counts."""

    accepted: list[int]
    trials: int
    terminal: int
    seed: int | None
    capped: bool = False
    stuck: bool = False
    blind_trials: int = 0  # seeded runs: evaluations spent in the blind phase

    def check_strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.accepted, self.accepted[1:]))


@dataclass
class AggregateStats:
    n: int
    mean: float
    se: float
    quantiles: dict[float, float]
    success_fraction: float
    stuck_fraction: float


def aggregate(traces: list[Trace]) -> AggregateStats:
    """Mean/SE/quantiles of trial counts; SE of a single trace is 0."""
    if not traces:
        raise ModelError("no traces to aggregate")
    counts = np.array([t.trials for t in traces], dtype=float)
    se = float(counts.std(ddof=1) / math.sqrt(len(counts))) if len(counts) > 1 else 0.0
    qs = {q: float(np.quantile(counts, q)) for q in (0.1, 0.5, 0.9)}
    return AggregateStats(
        n=len(traces),
        mean=float(counts.mean()),
        se=se,
        quantiles=qs,
        success_fraction=sum(not t.capped for t in traces) / len(traces),
        stuck_fraction=sum(t.stuck for t in traces) / len(traces),
    )


def sample_kernel(model: ClassModel, k: int, rng) -> int:
    """Draw a neighbour cost from the kernel row at k."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    row = model.kernel.rows[k]
    return int(rng.choice(len(row), p=row))


# ---------------------------------------------------------------------------
# abstract-model runs
# ---------------------------------------------------------------------------

def _abstract_blind(model, target, rng, cap):
    probs = model.dist.probs
    accepted = []
    trials = 0
    while trials < cap:
        k = int(rng.choice(len(probs), p=probs))
        trials += 1
        if k <= target:
            accepted.append(k)
            return accepted, trials, k, False
    return accepted, trials, -1, True


def _abstract_descent(model, start, target, rng, cap, literal, writer):
    k = start
    accepted = [k]
    trials = 0
    while k > target and trials < cap:
        if literal:
            nxt = sample_kernel(model, k, rng)
            trials += 1
            if writer:
                writer("descent", trials, nxt)
            if nxt < k:
                k = nxt
                accepted.append(k)
            continue
        pn_less = nbr_improve_prob(model.kernel, k)
        if pn_less <= 0:
            return accepted, trials, k, False, True
        draw = int(rng.geometric(pn_less))
        if trials + draw > cap:
            trials = cap
            break
        trials += draw
        row = model.kernel.rows[k, :k]
        k = int(rng.choice(k, p=row / row.sum()))
        accepted.append(k)
    return accepted, trials, k, trials >= cap and k > target, False


def run_blind(space, target: int, seed: int, cap: int,
              writer=None) -> Trace:
    """Uniform sampling until fitness <= target or the cap is reached."""
    if cap < 1:
        raise ModelError("cap must be >= 1")
    rng = np.random.default_rng(seed)
    if isinstance(space, ClassModel):
        accepted, trials, terminal, capped = _abstract_blind(space, target, rng, cap)
        return Trace(accepted, trials, terminal, seed, capped=capped)
    point, cost, trials = None, None, 0
    accepted = []
    while trials < cap:
        point, cost = _random_point(space, rng)
        trials += 1
        if writer:
            writer("blind", trials, cost)
        if cost <= target:
            accepted.append(cost)
            return Trace(accepted, trials, cost, seed)
    return Trace(accepted, trials, -1, seed, capped=True)


def run_descent(space, start, rule: str = "strict", seed: int = 0,
                cap: int = 10**7, target: int = 0, literal: bool = False,
                writer=None) -> Trace:
    """First-improvement descent counting every evaluation.

    Abstract models take `start` as a cost level and use the strict rule (a
    same-cost draw cannot change the state there).  Concrete instances take a
    point, accept strictly better (default) or equal-or-better ("plateau")
    neighbours, and record stuck=True when a full neighbourhood scan finds no
    acceptable move.
    """
    if rule not in ("strict", "plateau"):
        raise ModelError(f"unknown rule {rule!r}")
    rng = np.random.default_rng(seed)
    if isinstance(space, ClassModel):
        accepted, trials, terminal, capped, stuck = _abstract_descent(
            space, int(start), target, rng, cap, literal, writer)
        return Trace(accepted, trials, terminal, seed, capped=capped, stuck=stuck)
    return _concrete_descent(space, start, rule, rng, cap, target, seed, writer)


def run_seeded(space, threshold: int, seed: int, cap: int,
               target: int = 0, literal: bool = False, writer=None) -> Trace:
    """Blind-sample until a point strictly better than `threshold` appears,
    then descend from it; evaluations counted across both phases."""
    if threshold < 1:
        raise ModelError("threshold must be >= 1")
    rng = np.random.default_rng(seed)
    if isinstance(space, ClassModel):
        probs = space.dist.probs
        accept = float(probs[:threshold].sum())
        if accept <= 0:
            raise ModelError("no mass below the threshold")
        if literal:
            blind_trials = 0
            k = None
            while blind_trials < cap:
                k = int(rng.choice(len(probs), p=probs))
                blind_trials += 1
                if writer:
                    writer("blind", blind_trials, k)
                if k < threshold:
                    break
            else:
                return Trace([], cap, -1, seed, capped=True,
                             blind_trials=cap)
        else:
            blind_trials = int(rng.geometric(accept))
            if blind_trials > cap:
                return Trace([], cap, -1, seed, capped=True, blind_trials=cap)
            k = int(rng.choice(threshold, p=probs[:threshold] / accept))
        accepted, trials, terminal, capped, stuck = _abstract_descent(
            space, k, target, rng, cap - blind_trials, literal, writer)
        return Trace([k] + accepted[1:], blind_trials + trials, terminal, seed,
                     capped=capped, stuck=stuck, blind_trials=blind_trials)
    # concrete: blind phase then descend from the found point
    trials = 0
    point, cost = None, None
    while trials < cap:
        point, cost = _random_point(space, rng)
        trials += 1
        if writer:
            writer("blind", trials, cost)
        if cost < threshold or cost == 0:
            break
    else:
        return Trace([], cap, -1, seed, capped=True, blind_trials=cap)
    sub = _concrete_descent(space, point, "strict", rng, cap - trials, target,
                            seed, writer)
    return Trace([cost] + sub.accepted[1:], trials + sub.trials, sub.terminal,
                 seed, capped=sub.capped, stuck=sub.stuck, blind_trials=trials)


# ---------------------------------------------------------------------------
# concrete spaces
# ---------------------------------------------------------------------------

def _random_point(space, rng):
    if isinstance(space, TspInstance):
        tour = np.concatenate(([0], rng.permutation(np.arange(1, space.n))))
        cost = int(space.dist_matrix[tour, np.roll(tour, -1)].sum())
        return tour, cost
    if isinstance(space, Sat2Instance):
        assign = rng.random(space.n_vars) < 0.5
        return assign, int(space.costs(assign[None, :])[0])
    raise ModelError(f"cannot search a {type(space).__name__}")


def _neighbor_count(space) -> int:
    if isinstance(space, TspInstance):
        return space.n * (space.n - 3) // 2
    return space.n_vars


def _random_neighbor_cost(space, point, cost, rng, aux):
    """One uniform neighbour: returns (new_point_maker, new_cost)."""
    if isinstance(space, TspInstance):
        moves, arrays = aux
        m = int(rng.integers(len(moves)))
        i, j = moves[m]
        d = space.dist_matrix
        t = point
        delta = (d[t[i - 1], t[j]] + d[t[i], t[(j + 1) % space.n]]
                 - d[t[i - 1], t[i]] - d[t[j], t[(j + 1) % space.n]])

        def make():
            nb = point.copy()
            nb[i:j + 1] = nb[i:j + 1][::-1]
            return nb
        return make, cost + int(delta)
    var = int(rng.integers(space.n_vars))
    delta = space.flip_delta(point, var, aux)

    def make():
        nb = point.copy()
        nb[var] = not nb[var]
        return nb
    return make, cost + int(delta)


def _has_acceptable_neighbor(space, point, cost, rule, aux) -> bool:
    if isinstance(space, TspInstance):
        moves, (I, J, JP1) = aux
        d = space.dist_matrix
        t = point
        a, b, c, e = t[I - 1], t[I], t[J], t[JP1]
        deltas = d[a, c] + d[b, e] - d[a, b] - d[c, e]
    else:
        deltas = flip_deltas_all(space, point)
    return bool((deltas < 0).any() if rule == "strict" else (deltas <= 0).any())


def _concrete_descent(space, point, rule, rng, cap, target, seed, writer):
    if isinstance(space, TspInstance):
        moves = two_opt_moves(space.n)
        I = np.array([i for i, _ in moves])
        J = np.array([j for _, j in moves])
        aux = (moves, (I, J, (J + 1) % space.n))
        cost = int(space.dist_matrix[point, np.roll(point, -1)].sum())
    else:
        aux = space.occurrence_index()
        point = np.asarray(point)
        cost = int(space.costs(point[None, :])[0])
    accepted = [cost]
    trials = 0
    streak = 0
    scan_after = 4 * _neighbor_count(space)
    while cost > target and trials < cap:
        make, new_cost = _random_neighbor_cost(space, point, cost, rng, aux)
        trials += 1
        if writer:
            writer("descent", trials, new_cost)
        ok = new_cost < cost if rule == "strict" else new_cost <= cost
        if ok:
            point = make()
            cost = new_cost
            if accepted[-1] != cost:
                accepted.append(cost)
            streak = 0
            continue
        streak += 1
        if streak >= scan_after:
            # long rejection streak: confirm a strict improvement still exists
            # (plateau runs also stop here rather than wander forever)
            if not _has_acceptable_neighbor(space, point, cost, "strict", aux):
                return Trace(accepted, trials, cost, seed, stuck=True)
            streak = 0
    return Trace(accepted, trials, cost, seed, capped=trials >= cap and cost > target)