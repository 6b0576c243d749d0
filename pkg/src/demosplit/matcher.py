"""Align motion descriptions of video segments with verbal instructions.

Every instruction, in order, receives a non-empty run of consecutive
segments. Before each run any number of segments may be skipped, and any
segments left after the last instruction are skipped as well. The cost of
an assignment is

    sum over instructions j of
        c_skip * (segments skipped before j)
      + c_dist * D(first segment of run, j)
      + c_group * (grouping cost of the remaining members of the run)
    + c_skip * (trailing skipped segments)

where the grouping cost is either the members' distances to the instruction
(``group_cost="to_instruction"``) or the distances between consecutive
captions inside the run (``group_cost="chain"``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import Infeasible, InvalidInput, InvalidParameter, MalformedInput
from .lexdist import DistanceConfig, EmbeddingTable, Sentence, as_sentence, instruction_distance, wmd
from .splitter import SegmentList

GROUP_COST_MODES = ("to_instruction", "chain")


@dataclass(frozen=True)
class DescribedSegments:
    segments: SegmentList
    descriptions: tuple[Sentence, ...]

    def __post_init__(self):
        descs = tuple(as_sentence(d) for d in self.descriptions)
        if len(descs) != len(self.segments):
            raise MalformedInput(
                f"{len(self.segments)} segments but {len(descs)} descriptions"
            )
        object.__setattr__(self, "descriptions", descs)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[tuple[float, float], Sentence | str]]) -> DescribedSegments:
        return cls(SegmentList(tuple(seg for seg, _ in pairs)), tuple(d for _, d in pairs))

    def __len__(self) -> int:
        return len(self.descriptions)

    def __iter__(self):
        return iter(zip(self.segments, self.descriptions))


@dataclass(frozen=True)
class InstructionScript:
    instructions: tuple[Sentence, ...]

    def __post_init__(self):
        instr = tuple(as_sentence(s) for s in self.instructions)
        if not instr:
            raise MalformedInput("an instruction script needs at least one instruction")
        for k, s in enumerate(instr):
            if s.is_nothing:
                raise MalformedInput(f"instruction {k} is the reserved label 'nothing'")
        object.__setattr__(self, "instructions", instr)

    @classmethod
    def from_lines(cls, lines: Sequence[str]) -> InstructionScript:
        return cls(tuple(ln.strip() for ln in lines if ln.strip()))

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)


@dataclass(frozen=True)
class MatchCosts:
    c_dist: float = 1.0
    c_group: float = 0.5
    c_skip: float = 0.5
    group_cost: str = "to_instruction"

    def __post_init__(self):
        for name in ("c_dist", "c_group", "c_skip"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise InvalidParameter(f"{name} must be finite and >= 0, got {v}")
        if self.group_cost not in GROUP_COST_MODES:
            raise InvalidParameter(f"group_cost must be one of {GROUP_COST_MODES}, got {self.group_cost!r}")

    def scaled(self, c: float) -> MatchCosts:
        return MatchCosts(self.c_dist * c, self.c_group * c, self.c_skip * c, self.group_cost)


@dataclass(frozen=True)
class InstructionMatch:
    index: int
    text: str
    first: int  # first segment index of the run
    stop: int  # one past the last segment index
    start_s: float
    end_s: float
    skipped_before: int
    dist_cost: float
    group_cost: float
    skip_cost: float

    @property
    def segment_indices(self) -> list[int]:
        return list(range(self.first, self.stop))

    @property
    def cost(self) -> float:
        """Distance plus grouping cost of this instruction's run."""
        return self.dist_cost + self.group_cost


@dataclass(frozen=True)
class MatchAssignment:
    matches: tuple[InstructionMatch, ...]
    skipped: tuple[int, ...]
    total_cost: float
    n_segments: int

    def __post_init__(self):
        covered = set(self.skipped)
        prev = 0
        for m in self.matches:
            if m.stop <= m.first:
                raise MalformedInput(f"instruction {m.index} has an empty segment range")
            if m.first < prev:
                raise MalformedInput("instruction ranges overlap or are out of order")
            prev = m.stop
            covered.update(range(m.first, m.stop))
        if covered != set(range(self.n_segments)) or len(self.skipped) != len(set(self.skipped)):
            raise MalformedInput("assigned and skipped segments must partition all segments")

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return [(m.start_s, m.end_s) for m in self.matches]

    @property
    def ranges(self) -> list[tuple[int, int]]:
        return [(m.first, m.stop) for m in self.matches]


def build_distance_matrix(
    segs: DescribedSegments,
    script: InstructionScript,
    table: EmbeddingTable,
    cfg: DistanceConfig = DistanceConfig(),
) -> np.ndarray:
    """``M x N`` matrix of description-to-instruction distances."""
    cache: dict[tuple[str, str], float] = {}
    out = np.empty((len(segs), len(script)))
    for i, desc in enumerate(segs.descriptions):
        for j, instr in enumerate(script.instructions):
            key = (desc.text, instr.text)
            if key not in cache:
                cache[key] = instruction_distance(desc, instr, table, cfg)
            out[i, j] = cache[key]
    return out


def caption_chain_distances(
    segs: DescribedSegments,
    table: EmbeddingTable,
    cfg: DistanceConfig = DistanceConfig(),
) -> np.ndarray:
    """Distances between consecutive descriptions, for ``group_cost="chain"``.

    Two ``"nothing"`` captions are at distance 0; ``"nothing"`` next to any
    other caption is at ``cfg.c_nothing``.
    """
    d = segs.descriptions
    out = np.empty(max(len(d) - 1, 0))
    for r in range(len(d) - 1):
        a, b = d[r], d[r + 1]
        if a.is_nothing and b.is_nothing:
            out[r] = 0.0
        elif a.is_nothing or b.is_nothing:
            out[r] = cfg.c_nothing
        else:
            out[r] = wmd(a, b, table, cfg)
    return out


def _group_term(dist: np.ndarray, chain: np.ndarray | None, s: int, e: int, j: int) -> float:
    if chain is None:
        return float(np.sum(dist[s + 1:e, j]))
    return float(np.sum(chain[s:e - 1]))


def match(
    segs: DescribedSegments | int,
    script: InstructionScript | int,
    dist: np.ndarray,
    costs: MatchCosts = MatchCosts(),
    chain: np.ndarray | None = None,
) -> MatchAssignment:
    """Minimum-cost monotone assignment of segment runs to instructions.

    ``segs`` and ``script`` may be plain counts when only the matrix matters.
    Ties prefer fewer skipped segments, then shorter runs, deciding the
    earliest instruction first.
    """
    M = segs if isinstance(segs, int) else len(segs)
    N = script if isinstance(script, int) else len(script)
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (M, N):
        raise InvalidInput(f"distance matrix has shape {dist.shape}, expected ({M}, {N})")
    if not np.all(np.isfinite(dist)) or np.any(dist < 0):
        raise InvalidInput("distances must be finite and non-negative")
    if N < 1:
        raise InvalidInput("need at least one instruction")
    if M < N:
        raise Infeasible(M, N)
    if costs.group_cost == "chain":
        if chain is None:
            raise InvalidParameter("group_cost='chain' needs caption chain distances")
        chain = np.asarray(chain, dtype=float)
        if chain.shape != (M - 1,):
            raise InvalidInput(f"chain distances must have length {M - 1}")
    else:
        chain = None

    cd, cg, cs = costs.c_dist, costs.c_group, costs.c_skip
    dp = np.full((M + 1, N + 1), np.inf)
    choice = np.zeros((M + 1, N + 1, 2), dtype=int)
    for i in range(M + 1):
        dp[i, N] = cs * (M - i)
    for j in range(N - 1, -1, -1):
        # instruction j and the N-j-1 after it need at least N-j segments
        for i in range(M - (N - j), -1, -1):
            best, arg = np.inf, (0, 0)
            for k in range(0, M - i - (N - j) + 1):
                s = i + k
                for g in range(1, M - s - (N - j - 1) + 1):
                    e = s + g
                    val = cs * k + cd * dist[s, j] + cg * _group_term(dist, chain, s, e, j) + dp[e, j + 1]
                    if val < best:
                        best, arg = val, (k, g)
            dp[i, j] = best
            choice[i, j] = arg

    matches = []
    skipped: list[int] = []
    i = 0
    for j in range(N):
        k, g = (int(x) for x in choice[i, j])
        s, e = i + k, i + k + g
        skipped.extend(range(i, s))
        start_s = end_s = float("nan")
        text = ""
        if not isinstance(segs, int):
            start_s, end_s = segs.segments[s][0], segs.segments[e - 1][1]
        if not isinstance(script, int):
            text = script.instructions[j].text
        matches.append(
            InstructionMatch(
                index=j,
                text=text,
                first=s,
                stop=e,
                start_s=start_s,
                end_s=end_s,
                skipped_before=k,
                dist_cost=cd * float(dist[s, j]),
                group_cost=cg * _group_term(dist, chain, s, e, j),
                skip_cost=cs * k,
            )
        )
        i = e
    skipped.extend(range(i, M))
    return MatchAssignment(tuple(matches), tuple(skipped), float(dp[0, 0]), M)


def assignment_cost(
    ranges: Sequence[tuple[int, int]],
    dist: np.ndarray,
    costs: MatchCosts = MatchCosts(),
    chain: np.ndarray | None = None,
) -> float:
    """Cost of an explicit assignment given as ``(first, stop)`` runs per instruction."""
    M = dist.shape[0]
    total, prev = 0.0, 0
    use_chain = chain if costs.group_cost == "chain" else None
    for j, (s, e) in enumerate(ranges):
        total += costs.c_skip * (s - prev)
        total += costs.c_dist * dist[s, j] + costs.c_group * _group_term(dist, use_chain, s, e, j)
        prev = e
    return float(total + costs.c_skip * (M - prev))


def explain(assignment: MatchAssignment) -> dict:
    """JSON-ready report of an assignment."""
    return {
        "instructions": [
            {
                "index": m.index,
                "text": m.text,
                "start_s": m.start_s,
                "end_s": m.end_s,
                "segment_indices": m.segment_indices,
                "cost": m.cost,
                "cost_terms": {"dist": m.dist_cost, "group": m.group_cost, "skip_before": m.skip_cost},
            }
            for m in assignment.matches
        ],
        "skipped_segments": list(assignment.skipped),
        "total_cost": assignment.total_cost,
    }


def assignment_from_report(report: dict, n_segments: int | None = None) -> MatchAssignment:
    """Rebuild a :class:`MatchAssignment` from :func:`explain` output."""
    skipped = tuple(report["skipped_segments"])
    matches = []
    prev = 0
    for item in report["instructions"]:
        idx = item["segment_indices"]
        first, stop = idx[0], idx[-1] + 1
        if idx != list(range(first, stop)):
            raise MalformedInput(f"instruction {item['index']} has non-contiguous segments")
        terms = item.get("cost_terms", {})
        k = sum(1 for s in skipped if prev <= s < first)
        matches.append(
            InstructionMatch(
                index=item["index"],
                text=item["text"],
                first=first,
                stop=stop,
                start_s=item["start_s"],
                end_s=item["end_s"],
                skipped_before=k,
                dist_cost=terms.get("dist", item["cost"]),
                group_cost=terms.get("group", 0.0),
                skip_cost=terms.get("skip_before", 0.0),
            )
        )
        prev = stop
    if n_segments is None:
        n_segments = max([prev, *(s + 1 for s in skipped)])
    return MatchAssignment(tuple(matches), skipped, report["total_cost"], n_segments)
