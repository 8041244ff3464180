"""Instance files, allocation files, and seeded random generation.

The wire format keeps every number exact: integers stay JSON integers and
non-integers become "p/q" strings. Serialization is canonical (lowest terms,
sorted keys), so parse-then-serialize is a byte-stable round trip.
"""

from __future__ import annotations

import hashlib
import json
import random
from fractions import Fraction
from pathlib import Path
from typing import Any

from .model import (
    Allocation,
    FairDivisionError,
    Instance,
    StructuralError,
    make_allocation,
)

__all__ = [
    "GenerationError",
    "ParseError",
    "allocation_to_payload",
    "gen_instances",
    "instance_sha256",
    "instance_to_json",
    "parse_allocation",
    "parse_instance",
    "rational_from_json",
    "rational_to_json",
    "serialize_instance",
]


class ParseError(FairDivisionError):
    """Malformed instance or allocation document."""


class GenerationError(FairDivisionError):
    """Random generation could not satisfy the solvability requirements."""


def rational_from_json(x: Any, where: str = "") -> Fraction:
    prefix = f"{where}: " if where else ""
    if isinstance(x, bool) or isinstance(x, float):
        raise ParseError(f"{prefix}expected an integer or 'p/q' string, got {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"{prefix}malformed rational {x!r}") from exc
    raise ParseError(f"{prefix}expected an integer or 'p/q' string, got {x!r}")


def rational_to_json(x: Fraction) -> int | str:
    if x.denominator == 1:
        return int(x)
    return f"{x.numerator}/{x.denominator}"


def parse_instance(source: str | Path | dict) -> Instance:
    """Read an instance document from a path or an already-decoded dict."""
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{source}: invalid JSON: {exc}") from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ParseError("instance document must be a JSON object")
    try:
        goods = doc["goods"]
        agents = doc["agents"]
    except KeyError as exc:
        raise ParseError(f"missing top-level key {exc}") from exc
    if not isinstance(goods, list) or not isinstance(agents, list):
        raise ParseError("'goods' and 'agents' must be arrays")

    costs: list[Fraction] = []
    seen_goods: set[int] = set()
    for pos, entry in enumerate(goods):
        where = f"goods[{pos}]"
        if not isinstance(entry, dict) or "id" not in entry or "cost" not in entry:
            raise ParseError(f"{where}: expected an object with 'id' and 'cost'")
        gid = entry["id"]
        if gid in seen_goods:
            raise ParseError(f"{where}: duplicate good id {gid}")
        if gid != pos:
            raise ParseError(f"{where}: good ids must be dense and ordered, got {gid}")
        seen_goods.add(gid)
        costs.append(rational_from_json(entry["cost"], f"{where}.cost"))

    budgets: list[Fraction] = []
    values: list[tuple[Fraction, ...]] = []
    seen_agents: set[int] = set()
    for pos, entry in enumerate(agents):
        where = f"agents[{pos}]"
        if not isinstance(entry, dict) or not {"id", "budget", "values"} <= entry.keys():
            raise ParseError(
                f"{where}: expected an object with 'id', 'budget' and 'values'"
            )
        aid = entry["id"]
        if aid in seen_agents:
            raise ParseError(f"{where}: duplicate agent id {aid}")
        if aid != pos:
            raise ParseError(f"{where}: agent ids must be dense and ordered, got {aid}")
        seen_agents.add(aid)
        budgets.append(rational_from_json(entry["budget"], f"{where}.budget"))
        row = entry["values"]
        if not isinstance(row, list) or len(row) != len(costs):
            raise ParseError(
                f"{where}.values: expected {len(costs)} entries, got "
                f"{len(row) if isinstance(row, list) else row!r}"
            )
        values.append(
            tuple(
                rational_from_json(v, f"{where}.values[{k}]") for k, v in enumerate(row)
            )
        )
    try:
        return Instance(tuple(costs), tuple(budgets), tuple(values))
    except StructuralError as exc:
        raise ParseError(str(exc)) from exc


def serialize_instance(instance: Instance) -> dict:
    return {
        "goods": [
            {"id": g, "cost": rational_to_json(instance.costs[g])}
            for g in range(instance.num_goods)
        ],
        "agents": [
            {
                "id": i,
                "budget": rational_to_json(instance.budgets[i]),
                "values": [rational_to_json(v) for v in instance.values[i]],
            }
            for i in range(instance.num_agents)
        ],
    }


def instance_to_json(instance: Instance) -> str:
    return json.dumps(serialize_instance(instance), sort_keys=True, indent=2) + "\n"


def instance_sha256(instance: Instance) -> str:
    return hashlib.sha256(instance_to_json(instance).encode()).hexdigest()


def parse_allocation(source: str | Path | dict, instance: Instance) -> Allocation:
    """Read an allocation document: {"bundles": [[good ids], ...]}."""
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{source}: invalid JSON: {exc}") from exc
    else:
        doc = source
    if not isinstance(doc, dict) or "bundles" not in doc:
        raise ParseError("allocation document must be an object with 'bundles'")
    bundles = doc["bundles"]
    if not isinstance(bundles, list) or len(bundles) != instance.num_agents:
        raise ParseError(
            f"'bundles' must list one array per agent ({instance.num_agents})"
        )
    for i, b in enumerate(bundles):
        if not isinstance(b, list) or not all(isinstance(g, int) for g in b):
            raise ParseError(f"bundles[{i}] must be an array of good ids")
    try:
        return make_allocation(instance, [frozenset(b) for b in bundles])
    except StructuralError as exc:
        raise ParseError(str(exc)) from exc


def allocation_to_payload(allocation: Allocation) -> dict:
    return {
        "bundles": [sorted(b) for b in allocation.bundles],
        "unallocated": sorted(allocation.unallocated()),
    }


def _has_positive_product(instance: Instance) -> bool:
    # A positive welfare product is reachable iff each agent can be matched
    # to a distinct affordable good she values positively.
    candidates = [
        [
            g
            for g in range(instance.num_goods)
            if instance.values[i][g] > 0 and instance.costs[g] <= instance.budgets[i]
        ]
        for i in range(instance.num_agents)
    ]

    def match(i: int, used: set[int]) -> bool:
        if i == instance.num_agents:
            return True
        return any(
            g not in used and match(i + 1, used | {g}) for g in candidates[i]
        )

    return match(0, set())


def gen_instances(
    seed: int,
    count: int,
    n: int,
    m_range: tuple[int, int],
    cost_range: tuple[int, int] = (0, 20),
    value_range: tuple[int, int] = (0, 20),
    budget_spread: int = 10,
    max_retries: int = 1000,
) -> list[Instance]:
    """Deterministic batch of solvable random instances.

    Integer costs and values are uniform over their ranges. Budgets are
    uniform over [base, base * budget_spread] for a base drawn once per
    instance, so the largest-to-smallest budget ratio stays within
    ``budget_spread`` (spread 1 means equal budgets). Instances where some
    agent cannot reach a positive value are resampled, so normalization
    never rejects a generated instance.
    """
    if n not in (2, 3):
        raise GenerationError("generator supports 2 or 3 agents")
    if m_range[0] < 1 or m_range[0] > m_range[1]:
        raise GenerationError(f"bad goods range {m_range}")
    if cost_range[0] < 0 or cost_range[0] > cost_range[1]:
        raise GenerationError(f"bad cost range {cost_range}")
    if value_range[0] < 0 or value_range[0] > value_range[1]:
        raise GenerationError(f"bad value range {value_range}")
    if budget_spread < 1:
        raise GenerationError("budget spread must be at least 1")

    rng = random.Random(seed)
    out: list[Instance] = []
    for _ in range(count):
        for _attempt in range(max_retries):
            m = rng.randint(*m_range)
            costs = tuple(Fraction(rng.randint(*cost_range)) for _ in range(m))
            base = rng.randint(max(1, cost_range[0]), max(2, 2 * cost_range[1]))
            budgets = tuple(
                Fraction(rng.randint(base, base * budget_spread)) for _ in range(n)
            )
            values = tuple(
                tuple(Fraction(rng.randint(*value_range)) for _ in range(m))
                for _ in range(n)
            )
            candidate = Instance(costs, budgets, values)
            if _has_positive_product(candidate):
                out.append(candidate)
                break
        else:
            raise GenerationError(
                f"could not draw a solvable instance within {max_retries} tries"
            )
    return out
