"""Word embeddings and Word Mover's Distance between short sentences.

Sentences are compared as normalized bags of words; the distance is the
optimal transport cost between the two bags with Euclidean distance between
word vectors as the ground cost. Captions are short, so the transport problem
is solved exactly instead of using the relaxed lower bounds.
"""
from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping

import numpy as np
from scipy.optimize import linprog

from .errors import EmptyAfterFiltering, InvalidParameter, MalformedInput, UnknownWord

log = logging.getLogger(__name__)

NOTHING = "nothing"
DEFAULT_C_NOTHING = 2.0

STOP_WORDS = frozenset(
    "a an the of to in into on onto at from with and or is are be it its this that".split()
)

_PUNCT = re.compile(r"[^\w\s']|_")


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, replace punctuation by spaces, split on whitespace."""
    return tuple(_PUNCT.sub(" ", text.lower()).replace("'", "").split())


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[str, ...]

    def __post_init__(self):
        toks = tuple(self.tokens)
        if not toks:
            raise MalformedInput("a sentence needs at least one token")
        object.__setattr__(self, "tokens", toks)

    @classmethod
    def from_text(cls, text: str) -> Sentence:
        toks = tokenize(text)
        if not toks:
            raise MalformedInput(f"no words in sentence {text!r}")
        return cls(toks)

    @property
    def is_nothing(self) -> bool:
        return self.tokens == (NOTHING,)

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def __str__(self) -> str:
        return self.text


def as_sentence(s: Sentence | str) -> Sentence:
    return s if isinstance(s, Sentence) else Sentence.from_text(s)


@dataclass(frozen=True)
class DistanceConfig:
    """Knobs for :func:`wmd` and :func:`instruction_distance`.

    ``oov_policy`` is ``"drop"`` (ignore unknown words) or ``"error"``.
    """

    c_nothing: float = DEFAULT_C_NOTHING
    oov_policy: str = "drop"
    remove_stop_words: bool = False
    normalize_embeddings: bool = False

    def __post_init__(self):
        if not np.isfinite(self.c_nothing) or self.c_nothing < 0:
            raise InvalidParameter(f"c_nothing must be finite and >= 0, got {self.c_nothing}")
        if self.oov_policy not in ("drop", "error"):
            raise InvalidParameter(f"oov_policy must be 'drop' or 'error', got {self.oov_policy!r}")


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    words: tuple[str, ...]
    vectors: np.ndarray
    duplicates: int = 0
    _index: Mapping[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        vec = np.array(self.vectors, dtype=float)
        if vec.ndim != 2 or vec.shape[0] != len(self.words):
            raise MalformedInput(f"expected {len(self.words)} vectors, got array of shape {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise MalformedInput("embedding components must be finite")
        vec.setflags(write=False)
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.words)})
        if len(self._index) != len(self.words):
            raise MalformedInput("duplicate words in embedding table")

    @classmethod
    def from_dict(cls, table: Mapping[str, Iterable[float]]) -> EmbeddingTable:
        words = list(table)
        return cls(tuple(words), np.array([list(table[w]) for w in words], dtype=float))

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def __getitem__(self, word: str) -> np.ndarray:
        return self.vectors[self._index[word]]

    def scaled(self, c: float) -> EmbeddingTable:
        return EmbeddingTable(self.words, self.vectors * c)

    def to_text(self) -> str:
        lines = [f"{len(self)} {self.dim}"]
        for w, v in zip(self.words, self.vectors):
            lines.append(w + " " + " ".join(repr(float(x)) for x in v))
        return "\n".join(lines) + "\n"


def load_embeddings(source: str | Path | IO[str]) -> EmbeddingTable:
    """Parse the word-vector text format.

    An optional first line ``"<vocab_size> <dim>"`` is recognised; without it
    the dimension is taken from the first row. Repeated words keep the last
    vector and are counted in ``EmbeddingTable.duplicates``.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MalformedInput("empty embedding file")

    declared = None
    head = lines[0].split()
    if len(head) == 2 and all(h.isdigit() for h in head):
        declared = (int(head[0]), int(head[1]))
        lines = lines[1:]

    dim = declared[1] if declared else None
    table: dict[str, np.ndarray] = {}
    dups = 0
    for lineno, line in enumerate(lines, 2 if declared else 1):
        parts = line.split()
        word, vals = parts[0], parts[1:]
        if dim is None:
            dim = len(vals)
            if dim == 0:
                raise MalformedInput(f"line {lineno}: word {word!r} has no vector")
        if len(vals) != dim:
            raise MalformedInput(f"line {lineno}: expected {dim} values for {word!r}, got {len(vals)}")
        try:
            vec = np.array([float(v) for v in vals])
        except ValueError as exc:
            raise MalformedInput(f"line {lineno}: non-numeric vector component") from exc
        if word in table:
            dups += 1
            del table[word]  # last wins, and takes the later position
        table[word] = vec

    if declared and declared[0] != len(lines):
        raise MalformedInput(f"header declares {declared[0]} words, file has {len(lines)} rows")
    if dups:
        log.warning("%d duplicate words in embedding table; kept the last occurrence", dups)
    words = tuple(table)
    return EmbeddingTable(words, np.array([table[w] for w in words]).reshape(len(words), dim), dups)


def bag_of_words(
    sentence: Sentence | str, table: EmbeddingTable, cfg: DistanceConfig = DistanceConfig()
) -> tuple[list[str], np.ndarray]:
    """Distinct in-vocabulary words and their normalized weights (nBOW)."""
    sentence = as_sentence(sentence)
    toks = [w for w in sentence.tokens if not (cfg.remove_stop_words and w in STOP_WORDS)]
    kept = []
    for w in toks:
        if w in table:
            kept.append(w)
        elif cfg.oov_policy == "error":
            raise UnknownWord(w)
    if not kept:
        raise EmptyAfterFiltering(f"no in-vocabulary words left in {sentence.text!r}")
    counts = Counter(kept)
    words = sorted(counts)
    weights = np.array([counts[w] for w in words], dtype=float)
    return words, weights / weights.sum()


def _vectors(words: list[str], table: EmbeddingTable, normalize: bool) -> np.ndarray:
    vec = np.array([table[w] for w in words])
    if normalize:
        norms = np.linalg.norm(vec, axis=1, keepdims=True)
        vec = vec / np.where(norms > 0, norms, 1.0)
    return vec


def transport_cost(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> float:
    """Exact minimum of ``sum(cost * plan)`` over plans with marginals ``a`` and ``b``.

    The LP is solved with the HiGHS dual simplex, which stops at a vertex. The
    vertex is then recomputed from its support (a spanning forest of the
    bipartite graph, so the linear system has a unique solution) to remove the
    solver's feasibility tolerance from the reported cost.
    """
    m, n = cost.shape
    if m == 1 or n == 1:
        # a single source or sink admits exactly one plan
        return float(np.sum(cost * np.outer(a, b)))

    rows = np.zeros((m + n, m * n))
    for i in range(m):
        rows[i, i * n:(i + 1) * n] = 1.0
    for j in range(n):
        rows[m + j, j::n] = 1.0
    rhs = np.concatenate([a, b])
    # one marginal constraint is implied by the others
    res = linprog(
        cost.ravel(),
        A_eq=rows[:-1],
        b_eq=rhs[:-1],
        bounds=(0, None),
        method="highs-ds",
        options={"dual_feasibility_tolerance": 1e-10, "primal_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    x = res.x
    support = np.flatnonzero(x > 1e-12)
    sol, *_ = np.linalg.lstsq(rows[:, support], rhs, rcond=None)
    if np.all(sol >= -1e-12) and np.allclose(rows[:, support] @ sol, rhs, atol=1e-12, rtol=0):
        return float(max(0.0, cost.ravel()[support] @ np.clip(sol, 0.0, None)))
    return float(max(0.0, cost.ravel() @ x))


def wmd(
    a: Sentence | str,
    b: Sentence | str,
    table: EmbeddingTable,
    cfg: DistanceConfig = DistanceConfig(),
) -> float:
    """Word Mover's Distance between two sentences."""
    wa, pa = bag_of_words(a, table, cfg)
    wb, pb = bag_of_words(b, table, cfg)
    if wa == wb and np.array_equal(pa, pb):
        return 0.0
    va = _vectors(wa, table, cfg.normalize_embeddings)
    vb = _vectors(wb, table, cfg.normalize_embeddings)
    cost = np.linalg.norm(va[:, None, :] - vb[None, :, :], axis=2)
    return transport_cost(pa, pb, cost)


def instruction_distance(
    desc: Sentence | str,
    instr: Sentence | str,
    table: EmbeddingTable,
    cfg: DistanceConfig = DistanceConfig(),
) -> float:
    """Distance from a motion description to a verbal instruction.

    A description that is exactly ``"nothing"`` costs ``cfg.c_nothing``
    regardless of the instruction, so noise sections are hard to match.
    """
    desc = as_sentence(desc)
    if desc.is_nothing:
        return float(cfg.c_nothing)
    return wmd(desc, instr, table, cfg)
