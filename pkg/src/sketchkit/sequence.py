"""Construction sequences and their integer-token serialization.

Two orderings are extracted from a sketch: the canonical interleaving,
where each constraint is inserted as soon as all of its member primitives
exist, and the constraints-last ordering used when raw geometry is
imported first and constrained afterwards.
"""

from __future__ import annotations

import json
import lzma
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional

from .errors import DanglingReference, InsufficientCorpus, OutOfVocabulary
from .graph import CONSTRAINT, ConstraintGraph
from .model import Constraint, ConstraintType, PrimitiveType, Sketch


@dataclass(frozen=True)
class EdgeParams:
    """Serializable numeric/categorical payload of a constraint edge."""

    length: Optional[float] = None  # meters
    angle: Optional[float] = None  # degrees
    direction: Optional[str] = None
    halfSpace0: Optional[str] = None
    halfSpace1: Optional[str] = None
    aligned: Optional[bool] = None
    clockwise: Optional[bool] = None

    @staticmethod
    def of(c: Constraint) -> "EdgeParams":
        return EdgeParams(
            None if c.length is None else c.length.meters,
            c.angle,
            c.direction,
            c.halfSpace0,
            c.halfSpace1,
            c.aligned,
            c.clockwise,
        )


@dataclass(frozen=True)
class AddNode:
    index: int
    type: PrimitiveType


@dataclass(frozen=True)
class AddEdge:
    type: ConstraintType
    members: tuple  # graph node ids
    params: EdgeParams = EdgeParams()
    # Which standalone constraint produced this op; provenance only.
    constraint_index: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class Stop:
    pass


STOP = Stop()


@dataclass(frozen=True)
class ConstructionSequence:
    ops: tuple  # AddNode/AddEdge ops followed by a single Stop

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))

    def node_ops(self) -> list:
        return [op for op in self.ops if isinstance(op, AddNode)]

    def edge_ops(self) -> list:
        return [op for op in self.ops if isinstance(op, AddEdge)]


def _edge_op(sketch: Sketch, g: ConstraintGraph, ci: int) -> AddEdge:
    c = sketch.constraints[ci]
    members = tuple(g.node_for(ref.index, ref.selector) for ref in c.locals)
    return AddEdge(c.type, members, EdgeParams.of(c), ci)


def canonical_sequence(sketch: Sketch, g: ConstraintGraph) -> ConstructionSequence:
    """Interleave constraints at the earliest position after all their member
    primitives exist; simultaneous edges keep the standalone constraint order.
    Sub-node insertions are implicit in their parent's op."""
    n = len(sketch.primitives)
    ready_at: list = [[] for _ in range(n)]
    for e in g.edges:
        if e.kind != CONSTRAINT:
            continue
        last = max(g.parent_primitive(m) for m in e.members)
        if last >= n:
            raise DanglingReference(f"edge {e.id} references a missing primitive")
        ready_at[last].append(e.constraint_index)
    ops: list = []
    for i, p in enumerate(sketch.primitives):
        ops.append(AddNode(i, p.type))
        for ci in sorted(ready_at[i]):
            ops.append(_edge_op(sketch, g, ci))
    ops.append(STOP)
    return ConstructionSequence(tuple(ops))


def constraints_last_sequence(sketch: Sketch, g: ConstraintGraph) -> ConstructionSequence:
    """All primitives in insertion order, then all constraints in standalone
    order."""
    ops: list = [AddNode(i, p.type) for i, p in enumerate(sketch.primitives)]
    ops.extend(_edge_op(sketch, g, ci) for ci in range(len(sketch.constraints)))
    ops.append(STOP)
    return ConstructionSequence(tuple(ops))


# --- tokenization -----------------------------------------------------------
#
# Symbols are strings with a category prefix, one token per symbol:
#   stop                      end of sequence
#   node:<PrimitiveType>      primitive insertion
#   edge:<ConstraintType>     constraint insertion
#   ref:<node id>             edge member
#   dir:/hs0:/hs1:/aligned:/cw:   categorical edge parameters
#   len:<meters> / ang:<deg>  exact numeric values (most frequent in corpus)
#   lenbin:<k> / angbin:<k>   uniform fallback bins for everything else
#
# Category prefixes make decoding unambiguous: after an edge symbol, refs
# are consumed while they last, then parameters, until the next marker.

_NUM_FMT = ".12g"


def _canon(value: float) -> str:
    return format(float(value), _NUM_FMT)


@dataclass(frozen=True)
class TokenVocabulary:
    symbols: tuple
    length_bin_edges: tuple = ()  # len k+1 edges for k bins
    angle_bin_edges: tuple = ()
    index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {s: i for i, s in enumerate(self.symbols)})

    def __len__(self) -> int:
        return len(self.symbols)

    def id_of(self, symbol: str) -> int:
        try:
            return self.index[symbol]
        except KeyError:
            raise OutOfVocabulary(symbol) from None

    def _numeric_id(self, prefix: str, bin_prefix: str, edges: tuple, value: float) -> int:
        exact = f"{prefix}{_canon(value)}"
        got = self.index.get(exact)
        if got is not None:
            return got
        if len(edges) < 2 or not edges[0] <= value <= edges[-1]:
            raise OutOfVocabulary(exact)
        k = min(int((value - edges[0]) / (edges[1] - edges[0])), len(edges) - 2)
        return self.id_of(f"{bin_prefix}{k}")

    def length_id(self, meters: float) -> int:
        return self._numeric_id("len:", "lenbin:", self.length_bin_edges, meters)

    def angle_id(self, degrees: float) -> int:
        return self._numeric_id("ang:", "angbin:", self.angle_bin_edges, degrees)

    def symbol_of(self, token: int) -> str:
        if not 0 <= token < len(self.symbols):
            raise OutOfVocabulary(f"token {token}")
        return self.symbols[token]

    def numeric_value(self, symbol: str) -> float:
        kind, _, payload = symbol.partition(":")
        if kind in ("len", "ang"):
            return float(payload)
        edges = self.length_bin_edges if kind == "lenbin" else self.angle_bin_edges
        k = int(payload)
        return (edges[k] + edges[k + 1]) / 2.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "symbols": list(self.symbols),
                "length_bin_edges": list(self.length_bin_edges),
                "angle_bin_edges": list(self.angle_bin_edges),
            }
        )

    @staticmethod
    def from_json(text: str) -> "TokenVocabulary":
        raw = json.loads(text)
        return TokenVocabulary(
            tuple(raw["symbols"]),
            tuple(raw["length_bin_edges"]),
            tuple(raw["angle_bin_edges"]),
        )


def _uniform_edges(values: list, bins: int) -> tuple:
    if not values or bins <= 0:
        return ()
    lo, hi = min(values), max(values)
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / bins
    return tuple(lo + i * step for i in range(bins + 1))


def build_vocabulary(
    sketches: Iterable[Sketch],
    max_numeric_values: int = 300,
    fallback_bins: int = 64,
    max_ref: Optional[int] = None,
) -> TokenVocabulary:
    """Vocabulary over a corpus: all type markers, member-reference ids up to
    the largest node id seen, the most frequent numeric values exactly, and
    uniform fallback bins covering the rest."""
    from collections import Counter

    from .graph import build_graph

    lengths: Counter = Counter()
    angles: Counter = Counter()
    top_ref = -1
    for s in sketches:
        g = build_graph(s)
        top_ref = max(top_ref, len(g.nodes) - 1)
        for c in s.constraints:
            if c.length is not None:
                lengths[_canon(c.length.meters)] += 1
            if c.angle is not None:
                angles[_canon(c.angle)] += 1
    if max_ref is not None:
        top_ref = max(top_ref, max_ref)
    symbols = ["stop"]
    symbols += [f"node:{t.value}" for t in PrimitiveType]
    symbols += [f"edge:{t.value}" for t in ConstraintType]
    symbols += [f"ref:{i}" for i in range(top_ref + 1)]
    symbols += [f"dir:{d}" for d in ("minimum", "vertical", "horizontal")]
    symbols += [f"hs0:{h}" for h in ("left", "right")]
    symbols += [f"hs1:{h}" for h in ("left", "right")]
    symbols += ["aligned:0", "aligned:1", "cw:0", "cw:1"]

    def top(counter: Counter) -> list:
        ranked = sorted(counter.items(), key=lambda kv: (-kv[1], float(kv[0])))
        return [k for k, _ in ranked[:max_numeric_values]]

    symbols += [f"len:{v}" for v in top(lengths)]
    symbols += [f"ang:{v}" for v in top(angles)]
    length_edges = _uniform_edges([float(v) for v in lengths], fallback_bins)
    angle_edges = _uniform_edges([float(v) for v in angles], fallback_bins)
    symbols += [f"lenbin:{k}" for k in range(max(0, len(length_edges) - 1))]
    symbols += [f"angbin:{k}" for k in range(max(0, len(angle_edges) - 1))]
    return TokenVocabulary(tuple(symbols), length_edges, angle_edges)


def tokenize(seq: ConstructionSequence, vocab: TokenVocabulary) -> list:
    tokens = []
    for op in seq.ops:
        if isinstance(op, AddNode):
            tokens.append(vocab.id_of(f"node:{op.type.value}"))
        elif isinstance(op, AddEdge):
            tokens.append(vocab.id_of(f"edge:{op.type.value}"))
            tokens.extend(vocab.id_of(f"ref:{m}") for m in op.members)
            p = op.params
            if p.direction is not None:
                tokens.append(vocab.id_of(f"dir:{p.direction}"))
            if p.halfSpace0 is not None:
                tokens.append(vocab.id_of(f"hs0:{p.halfSpace0}"))
            if p.halfSpace1 is not None:
                tokens.append(vocab.id_of(f"hs1:{p.halfSpace1}"))
            if p.aligned is not None:
                tokens.append(vocab.id_of(f"aligned:{int(p.aligned)}"))
            if p.clockwise is not None:
                tokens.append(vocab.id_of(f"cw:{int(p.clockwise)}"))
            if p.length is not None:
                tokens.append(vocab.length_id(p.length))
            if p.angle is not None:
                tokens.append(vocab.angle_id(p.angle))
        else:
            tokens.append(vocab.id_of("stop"))
    return tokens


def detokenize(tokens: Iterable[int], vocab: TokenVocabulary) -> ConstructionSequence:
    ops: list = []
    node_count = 0
    pending: Optional[dict] = None

    def flush():
        nonlocal pending
        if pending is not None:
            ops.append(
                AddEdge(pending["type"], tuple(pending["members"]), EdgeParams(**pending["params"]))
            )
            pending = None

    for token in tokens:
        symbol = vocab.symbol_of(token)
        kind, _, payload = symbol.partition(":")
        if kind == "stop":
            flush()
            ops.append(STOP)
        elif kind == "node":
            flush()
            ops.append(AddNode(node_count, PrimitiveType(payload)))
            node_count += 1
        elif kind == "edge":
            flush()
            pending = {"type": ConstraintType(payload), "members": [], "params": {}}
        elif pending is None:
            raise OutOfVocabulary(f"unexpected {symbol} outside an edge")
        elif kind == "ref":
            pending["members"].append(int(payload))
        elif kind == "dir":
            pending["params"]["direction"] = payload
        elif kind == "hs0":
            pending["params"]["halfSpace0"] = payload
        elif kind == "hs1":
            pending["params"]["halfSpace1"] = payload
        elif kind == "aligned":
            pending["params"]["aligned"] = bool(int(payload))
        elif kind == "cw":
            pending["params"]["clockwise"] = bool(int(payload))
        elif kind in ("len", "lenbin"):
            pending["params"]["length"] = vocab.numeric_value(symbol)
        elif kind in ("ang", "angbin"):
            pending["params"]["angle"] = vocab.numeric_value(symbol)
        else:
            raise OutOfVocabulary(symbol)
    flush()
    return ConstructionSequence(tuple(ops))


# --- compression baseline ---------------------------------------------------


def encode_token_stream(tokens: Iterable[int]) -> bytes:
    """Raw byte form of a token stream: unsigned 16-bit little endian."""
    out = bytearray()
    for t in tokens:
        if not 0 <= t < 1 << 16:
            raise OutOfVocabulary(f"token {t} exceeds the 16-bit raw encoding")
        out += t.to_bytes(2, "little")
    return bytes(out)


def lzma_codec(data: bytes) -> bytes:
    """Reference compressor: dictionary coding at maximum effort."""
    return lzma.compress(data, preset=9 | lzma.PRESET_EXTREME)


def entropy_rate_estimate(
    corpus: Iterable[list],
    n1: int,
    n2: int,
    codec: Callable[[bytes], bytes] = lzma_codec,
) -> float:
    """Marginal compressed size in bits per sketch between corpus prefixes of
    n1 and n2 sketches: (size(n2) - size(n1)) / (n2 - n1)."""
    if not 0 <= n1 < n2:
        raise InsufficientCorpus(f"need 0 <= n1 < n2, got {n1}, {n2}")
    streams = []
    for i, tokens in enumerate(corpus):
        if i >= n2:
            break
        streams.append(encode_token_stream(tokens))
    if len(streams) < n2:
        raise InsufficientCorpus(f"corpus has {len(streams)} sketches, need {n2}")
    s1 = 8 * len(codec(b"".join(streams[:n1])))
    s2 = 8 * len(codec(b"".join(streams)))
    return (s2 - s1) / (n2 - n1)


def write_token_streams(path, streams: Iterable[list]) -> int:
    """One sketch per line, space-separated decimal token ids."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for tokens in streams:
            fh.write(" ".join(str(t) for t in tokens))
            fh.write("\n")
            count += 1
    return count


def read_token_streams(path) -> List[list]:
    with open(path, encoding="utf-8") as fh:
        return [[int(t) for t in line.split()] for line in fh if line.strip()]
