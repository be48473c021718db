"""The one-dimensional closure toy model: bricks on a basement.

A level-l brick occupies ``2**-l * [index, index+1]``.  Every brick above
the basement demands the brick directly underneath and the one touching it
at the corner of its off-centre half; a round chooses one new child brick
and adds the demand closure.  The interest is in the total number of bricks
added after N rounds, which never exceeds 4N.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field


Brick = tuple[int, int]  # (level, index)


def brick_demands(brick: Brick) -> tuple[Brick, Brick]:
    """The two level-(l-1) bricks a brick rests on: directly below, and the
    corner neighbour on the side of its off-centre half."""
    level, index = brick
    if level < 1:
        raise ValueError("basement bricks demand nothing")
    below = index >> 1
    side = below - 1 if index % 2 == 0 else below + 1
    return (level - 1, below), (level - 1, side)


def brick_children(brick: Brick) -> tuple[Brick, Brick]:
    level, index = brick
    return (level + 1, 2 * index), (level + 1, 2 * index + 1)


@dataclass
class Pile:
    """Demand-closed set of bricks over a finite clipped basement.

    Only bricks of level >= 1 are stored; the basement bricks
    ``(0, lo), ..., (0, hi-1)`` are implicit.  Demands falling outside the
    basement range are ignored, which can only shrink towers.
    """

    basement_lo: int = -(2**20)
    basement_hi: int = 2**20
    bricks: set = field(default_factory=set)

    def __contains__(self, brick: Brick) -> bool:
        level, index = brick
        if level == 0:
            return self.basement_lo <= index < self.basement_hi
        return brick in self.bricks

    def in_range(self, brick: Brick) -> bool:
        level, index = brick
        lo = self.basement_lo * (1 << level)
        hi = self.basement_hi * (1 << level)
        return lo <= index < hi

    def is_legal_child(self, brick: Brick) -> bool:
        level, index = brick
        if level < 1 or brick in self or not self.in_range(brick):
            return False
        return (level - 1, index >> 1) in self

    def add_brick(self, chosen: Brick) -> int:
        """Add a chosen child brick and its demand closure; returns the
        number of bricks added this round."""
        if not self.is_legal_child(chosen):
            raise ValueError(f"brick {chosen} is not a child of the pile")
        added = 0
        stack = [chosen]
        while stack:
            b = stack.pop()
            if b in self or not self.in_range(b):
                continue
            if b[0] == 0:
                continue  # outside the clipped basement; ignore
            self.bricks.add(b)
            added += 1
            for dem in brick_demands(b):
                if dem[0] == 0:
                    continue
                if dem not in self:
                    stack.append(dem)
        return added

    def per_level_counts(self) -> dict:
        counts: dict[int, int] = {}
        for level, _ in self.bricks:
            counts[level] = counts.get(level, 0) + 1
        return counts


@dataclass
class PileTrace:
    strategy: str
    seed: int | None
    rounds: list = field(default_factory=list)  # (round, level, index, added, cumulative)

    @property
    def total_added(self) -> int:
        return self.rounds[-1][4] if self.rounds else 0

    def csv_lines(self) -> list[str]:
        lines = ["round,chosen_level,chosen_index,added,cumulative,bound_4N"]
        for r, lvl, idx, added, cum in self.rounds:
            lines.append(f"{r},{lvl},{idx},{added},{cum},{4 * r}")
        return lines


def _tower_moves(pile: Pile, n_rounds: int):
    """Always choose a child of a top brick, alternating sides."""
    top = (0, 0)
    for j in range(n_rounds):
        left, right = brick_children(top)
        top = left if j % 2 == 0 else right
        yield top


def _quasitower_moves(pile: Pile, n_rounds: int):
    """Climb a thin tower, then trigger one full-height cascade on each side.

    The first ``m = N - 3`` rounds climb (two bricks each); the choices of
    rounds m+1 and m+3 each demand a staircase of m-1 bricks reaching down
    the whole pile, pushing the bricks-per-round ratio towards 4.
    """
    m = max(1, n_rounds - 3)
    for j in range(1, min(m, n_rounds) + 1):
        yield (j, -1)
    if n_rounds >= m + 1:
        yield (m, -2)
    if n_rounds >= m + 2:
        yield (m, 0)
    if n_rounds >= m + 3:
        yield (m, 1)


def _random_moves(pile: Pile, n_rounds: int, rng: random.Random):
    produced = 0
    supply = [(0, 0), (0, -1), (0, 1)]
    while produced < n_rounds:
        base = supply[rng.randrange(len(supply))]
        child = brick_children(base)[rng.randrange(2)]
        if pile.is_legal_child(child):
            supply.append(child)
            produced += 1
            yield child


def play(strategy: str, n_rounds: int, seed: int | None = None,
         basement_halfwidth: int = 2**20) -> PileTrace:
    """Run an N-round pile game and record the per-round trace."""
    if n_rounds < 1:
        raise ValueError("need at least one round")
    pile = Pile(-basement_halfwidth, basement_halfwidth)
    trace = PileTrace(strategy, seed)
    if strategy == "tower":
        moves = _tower_moves(pile, n_rounds)
    elif strategy == "quasitower":
        moves = _quasitower_moves(pile, n_rounds)
    elif strategy == "random":
        moves = _random_moves(pile, n_rounds, random.Random(seed))
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    cumulative = 0
    for rnd, chosen in enumerate(moves, start=1):
        added = pile.add_brick(chosen)
        cumulative += added
        trace.rounds.append((rnd, chosen[0], chosen[1], added, cumulative))
    return trace
