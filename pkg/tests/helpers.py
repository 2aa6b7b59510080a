"""Random model generators and brute-force oracles shared by the tests.

The oracles deliberately avoid the library's own helpers (topological order,
critical path, option lists) so they can catch mistakes in them.
"""
from __future__ import annotations

import itertools
import math
import random

from hypothesis import strategies as st

from sadp.model import (
    DEFAULT_CATALOG,
    ExecutionProfile,
    Microservice,
    Modality,
    Relevance,
    build_application,
)

CATALOG_KEYS = list(DEFAULT_CATALOG.keys)
DECISION_TOKENS = ("normal", "low-power", "high-performance", "skip")
TOKEN_MODALITY = {"normal": "N", "low-power": "LP", "high-performance": "HP"}


# -- generators -------------------------------------------------------------


def random_profile(rng: random.Random, integral: bool = False) -> ExecutionProfile:
    if integral:
        return ExecutionProfile(rng.randint(0, 50), rng.randint(0, 500), rng.randint(0, 20),
                                rng.randint(0, 10) / 10)
    return ExecutionProfile(
        round(rng.uniform(0, 50), 3),
        round(rng.uniform(0, 500), 3),
        round(rng.uniform(0, 20), 3),
        round(rng.uniform(0, 1), 3),
    )


def ordered_profiles(rng: random.Random) -> tuple[ExecutionProfile, ExecutionProfile, ExecutionProfile]:
    """LP <= N <= HP in both power and duration."""
    powers = sorted(round(rng.uniform(0, 50), 3) for _ in range(3))
    durations = sorted(round(rng.uniform(0, 500), 3) for _ in range(3))
    return tuple(
        ExecutionProfile(p, d, round(rng.uniform(0, 10), 3), round(rng.uniform(0, 1), 3))
        for p, d in zip(powers, durations)
    )


def random_model(rng: random.Random, max_tasks: int = 6, ordered: bool = False,
                 edge_prob: float = 0.35, integral: bool = False):
    n = rng.randint(1, max_tasks)
    services = []
    for i in range(n):
        annotations = {k: f"v{i}" for k in CATALOG_KEYS if rng.random() < 0.5}
        if rng.random() < 0.1:
            annotations["not_in_catalog"] = "x"
        relevance = rng.choice(list(Relevance))
        if ordered:
            lp, normal, hp = ordered_profiles(rng)
            pool = {Modality.LOW_POWER: lp, Modality.NORMAL: normal, Modality.HIGH_PERFORMANCE: hp}
            baseline = normal
        else:
            pool = {m: random_profile(rng, integral) for m in Modality}
            baseline = random_profile(rng, integral)
        variants = {m: p for m, p in pool.items() if rng.random() < 0.5}
        services.append(Microservice(f"t{i}", relevance=relevance, annotations=annotations,
                                     baseline_profile=baseline, declared_variants=variants))
    edges = [(f"t{i}", f"t{j}") for i in range(n) for j in range(i + 1, n) if rng.random() < edge_prob]
    # shuffle the declaration order so topological order is not trivially the list order
    rng.shuffle(services)
    return build_application(services, edges)


@st.composite
def models(draw, max_tasks: int = 6):
    seed = draw(st.integers(0, 2**32 - 1))
    ordered = draw(st.booleans())
    return random_model(random.Random(seed), max_tasks=max_tasks, ordered=ordered)


# -- oracles ----------------------------------------------------------------


def oracle_scores(model) -> tuple[float, float, float, float]:
    """(step1, step2 explicit, step2 implicit, step3) by direct counting."""
    n = len(model.microservices)
    annotated = 0
    for ms in model.microservices:
        for key in model.catalog.keys:
            if key in ms.annotations:
                annotated += 1
    tagged = [ms for ms in model.microservices if ms.relevance.value != "unannotated"]
    mandatory = {ms.id for ms in tagged if ms.relevance.value == "mandatory"}
    optional = {ms.id for ms in tagged if ms.relevance.value == "optional"}
    variants = 0
    for ms in model.microservices:
        for token in ("N", "LP", "HP"):
            if any(m.value == token for m in ms.declared_variants):
                variants += 1
    return (
        annotated / (len(model.catalog) * n),
        (len(optional) + len(mandatory)) / n,
        0.0 if not (optional | mandatory) else 1.0,
        variants / (3 * n),
    )


def all_paths(model) -> list[list[str]]:
    """Every source-to-sink path, by depth-first enumeration."""
    succ = {ms.id: [] for ms in model.microservices}
    has_pred = set()
    for e in model.edges:
        succ[e.from_id].append(e.to_id)
        has_pred.add(e.to_id)
    paths = []

    def walk(node, path):
        path = path + [node]
        if not succ[node]:
            paths.append(path)
        for nxt in succ[node]:
            walk(nxt, path)

    for ms in model.microservices:
        if ms.id not in has_pred:
            walk(ms.id, [])
    return paths


def oracle_longest(model, durations: dict[str, float]) -> float:
    best = 0.0
    for path in all_paths(model):
        total = 0.0
        for node in path:
            total += durations[node]
        best = max(best, total)
    return best


def oracle_profile(ms, token: str):
    """(profile or None, fallback flag) for a decision token."""
    if token == "skip":
        return None, False
    for modality, profile in ms.declared_variants.items():
        if modality.value == TOKEN_MODALITY[token]:
            return profile, False
    return ms.baseline_profile, token != "normal"


def oracle_simulate(model, decisions: dict[str, str]) -> dict:
    energies, rewards, durations, quality = [], [], {}, []
    for ms in model.microservices:
        profile, _ = oracle_profile(ms, decisions[ms.id])
        if profile is None:
            durations[ms.id] = 0.0
            continue
        energies.append(profile.power_watts * profile.duration_ms / 1000.0)
        rewards.append(profile.reward_units)
        durations[ms.id] = profile.duration_ms
        quality.append(profile.quality_score)
    return {
        "energy": math.fsum(energies),
        "response": oracle_longest(model, durations),
        "reward": math.fsum(rewards),
        "quality": math.fsum(quality) / len(quality) if quality else 1.0,
    }


def oracle_choices(ms) -> list[str]:
    out = ["normal"]
    tokens = {m.value for m in ms.declared_variants}
    if "LP" in tokens:
        out.append("low-power")
    if "HP" in tokens:
        out.append("high-performance")
    if ms.relevance.value == "optional":
        out.append("skip")
    return out


def oracle_optimize(model, we, wt, wr, max_rt=None, max_e=None):
    """Exhaustive minimum: returns (cost, decisions) or None when infeasible."""
    ids = [ms.id for ms in model.microservices]
    by_id = sorted(ids)
    rank = {t: i for i, t in enumerate(DECISION_TOKENS)}
    best = None
    for combo in itertools.product(*(oracle_choices(ms) for ms in model.microservices)):
        decisions = dict(zip(ids, combo))
        sim = oracle_simulate(model, decisions)
        if max_rt is not None and sim["response"] > max_rt:
            continue
        if max_e is not None and sim["energy"] > max_e:
            continue
        cost = we * sim["energy"] + wt * sim["response"] - wr * sim["reward"]
        key = (cost, sim["energy"], tuple(rank[decisions[i]] for i in by_id))
        if best is None or key < best[0]:
            best = (key, decisions)
    if best is None:
        return None
    return best[0][0], best[1]


def respects_edges(order: list[str], model) -> bool:
    pos = {ms_id: i for i, ms_id in enumerate(order)}
    return sorted(order) == sorted(model.ids) and all(
        pos[e.from_id] < pos[e.to_id] for e in model.edges
    )
