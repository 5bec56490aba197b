"""Layer plans: which feature blocks each layer merges.

Text form: stages separated by ``;``, groups by ``|``, members by ``,``::

    f1,f2|f3,f4;f12,f34

Leaf blocks are ``f1`` .. ``fn``.  A group produces the block whose name is
``f`` followed by the sorted positions it covers (``f1,f2`` -> ``f12``).  A
group may instead name its block explicitly, ``f12:f1``, to cover positions
it does not wire (the block's neurons are keyed by more letters than they
check).  Each stage may only use blocks produced by the stage before it.
"""

from __future__ import annotations

from dataclasses import dataclass


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class Group:
    name: str
    positions: tuple[int, ...]
    members: tuple[str, ...]


@dataclass(frozen=True)
class LayerPlan:
    stages: tuple[tuple[Group, ...], ...]
    n: int

    @property
    def depth(self) -> int:
        return len(self.stages)

    def leaf_positions(self) -> dict[str, tuple[int, ...]]:
        return {f"f{p}": (p,) for p in range(1, self.n + 1)}

    def block_positions(self) -> dict[str, tuple[int, ...]]:
        out = self.leaf_positions()
        for stage in self.stages:
            for g in stage:
                out[g.name] = g.positions
        return out

    def __str__(self) -> str:
        def fmt(g: Group) -> str:
            auto = _block_name(_union(self._pos_of_members(g)))
            members = ",".join(g.members)
            return members if g.name == auto else f"{g.name}:{members}"
        return ";".join("|".join(fmt(g) for g in stage) for stage in self.stages)

    def _pos_of_members(self, g: Group):
        table = self.block_positions()
        return [table[m] for m in g.members]

    # -- canned plans -----------------------------------------------------------

    @classmethod
    def single(cls, n: int) -> LayerPlan:
        """One layer wiring every leaf straight to the categories."""
        return parse(",".join(f"f{p}" for p in range(1, n + 1)), n)

    @classmethod
    def sliding(cls, n: int) -> LayerPlan:
        """``n-1`` layers of overlapping windows growing by one position per layer."""
        if n < 2:
            raise PlanError("sliding plan needs at least 2 leaves")
        stages = []
        width = 1
        while width < n:
            names = [_block_name(tuple(range(s, s + width))) for s in range(1, n - width + 2)]
            stages.append("|".join(f"{a},{b}" for a, b in zip(names, names[1:])))
            width += 1
        return parse(";".join(stages), n)


def _block_name(positions) -> str:
    sep = "." if any(p > 9 for p in positions) and len(positions) > 1 else ""
    return "f" + sep.join(str(p) for p in positions)


def _union(parts) -> tuple[int, ...]:
    out = set()
    for p in parts:
        out.update(p)
    return tuple(sorted(out))


def parse(text: str, n: int) -> LayerPlan:
    """Parse and validate a plan over ``n`` leaf blocks ``f1..fn``."""
    if n < 1:
        raise PlanError("plan needs at least one leaf")
    text = "".join(text.split())
    if not text:
        raise PlanError("empty plan")
    available = {f"f{p}": (p,) for p in range(1, n + 1)}
    names_seen = dict(available)
    stages = []
    for si, stage_text in enumerate(text.split(";")):
        groups = []
        used = set()
        produced: dict[str, tuple[int, ...]] = {}
        for group_text in stage_text.split("|"):
            name = None
            if ":" in group_text:
                name, group_text = group_text.split(":", 1)
            members = tuple(m for m in group_text.split(",") if m)
            if not members:
                raise PlanError(f"stage {si}: empty group")
            if len(set(members)) != len(members):
                raise PlanError(f"stage {si}: repeated member in group {group_text!r}")
            for m in members:
                if m not in available:
                    raise PlanError(f"stage {si}: block {m!r} is not an output of the previous stage")
            used.update(members)
            covered = _union(available[m] for m in members)
            if name is None:
                if len(members) < 2:
                    raise PlanError(f"stage {si}: group {group_text!r} needs at least 2 members")
                positions = covered
                name = _block_name(positions)
            else:
                positions = _parse_name(name, n)
                if not set(covered) <= set(positions):
                    raise PlanError(f"stage {si}: block {name!r} does not cover its members")
                if len(members) < 2 and positions == covered:
                    raise PlanError(f"stage {si}: block {name!r} would copy {members[0]!r}")
            if name in produced or name in names_seen:
                raise PlanError(f"stage {si}: block {name!r} produced twice")
            produced[name] = positions
            groups.append(Group(name, positions, members))
        unused = set(available) - used
        if unused:
            raise PlanError(f"stage {si}: blocks {sorted(unused)} are never consumed")
        names_seen.update(produced)
        available = produced
        stages.append(tuple(groups))
    if len(available) != 1:
        raise PlanError(f"final stage must yield one block, got {sorted(available)}")
    (final,) = available.values()
    if final != tuple(range(1, n + 1)):
        raise PlanError(f"final block covers positions {final}, expected 1..{n}")
    return LayerPlan(tuple(stages), n)


def _parse_name(name: str, n: int) -> tuple[int, ...]:
    if not name.startswith("f") or not name[1:].isdigit():
        raise PlanError(f"bad block name {name!r}")
    if n > 9:
        raise PlanError("explicit block names are only supported for up to 9 leaves")
    positions = tuple(int(ch) for ch in name[1:])
    if list(positions) != sorted(set(positions)) or not all(1 <= p <= n for p in positions):
        raise PlanError(f"bad block name {name!r}")
    return positions
