"""Finite simple graphs and their clique complexes."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Simplex count past which an unbounded build warns.
_DENSE_WARNING_SIMPLICES = 20_000


class GraphFormatError(ValueError):
    """Raised for malformed edge-list or JSON graph input."""


@dataclass(frozen=True)
class Graph:
    vertex_count: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.vertex_count < 0:
            raise ValueError("vertex_count must be nonnegative")
        normalized = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValueError(f"edge ({u}, {v}) out of range for {self.vertex_count} vertices")
            normalized.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(normalized))

    @classmethod
    def complete(cls, n: int) -> Graph:
        return cls(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)))

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.vertex_count)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


@dataclass(frozen=True)
class SimplicialComplex:
    """Clique complex with simplices grouped by dimension.

    ``simplices[p]`` is the lexicographically sorted list of ascending
    vertex tuples of length ``p + 1``. The global index of a simplex is
    ``offsets[p] + position``.
    """

    simplices: tuple[tuple[tuple[int, ...], ...], ...]

    @property
    def f_vector(self) -> tuple[int, ...]:
        return tuple(len(level) for level in self.simplices)

    @property
    def offsets(self) -> tuple[int, ...]:
        out = [0]
        for count in self.f_vector:
            out.append(out[-1] + count)
        return tuple(out)

    @property
    def total_dim(self) -> int:
        return self.offsets[-1]

    @property
    def dimension(self) -> int:
        return len(self.simplices) - 1

    def index(self, simplex: tuple[int, ...]) -> int:
        p = len(simplex) - 1
        return self.offsets[p] + self._positions[p][tuple(simplex)]

    def degrees(self) -> np.ndarray:
        """Form degree of every global slot."""
        return np.repeat(np.arange(len(self.f_vector)), self.f_vector)

    @property
    def _positions(self) -> list[dict[tuple[int, ...], int]]:
        cached = self.__dict__.get("_pos_cache")
        if cached is None:
            cached = [{s: i for i, s in enumerate(level)} for level in self.simplices]
            object.__setattr__(self, "_pos_cache", cached)
        return cached

    @classmethod
    def from_simplices(cls, simplices) -> SimplicialComplex:
        """Build from arbitrary simplex lists, closing under faces."""
        by_dim: dict[int, set[tuple[int, ...]]] = {}
        stack = [tuple(sorted(int(x) for x in s)) for s in simplices]
        while stack:
            s = stack.pop()
            if len(set(s)) != len(s) or not s:
                raise ValueError(f"invalid simplex {s}")
            level = by_dim.setdefault(len(s) - 1, set())
            if s in level:
                continue
            level.add(s)
            if len(s) > 1:
                stack.extend(s[:i] + s[i + 1:] for i in range(len(s)))
        top = max(by_dim, default=-1)
        return cls(tuple(tuple(sorted(by_dim.get(p, ()))) for p in range(top + 1)))


def build_clique_complex(g: Graph, max_dim: int | None = None) -> SimplicialComplex:
    """All cliques of ``g`` with at most ``max_dim + 1`` vertices.

    Each clique is extended only by larger vertices adjacent to all of its
    members, so every clique appears exactly once and already in ascending
    order. With ``max_dim=None`` the full complex is built; dense graphs can
    have exponentially many cliques.
    """
    if max_dim is not None and max_dim < 0:
        raise ValueError("max_dim must be nonnegative")
    adj = g.adjacency()
    levels: list[list[tuple[int, ...]]] = []
    current = [((v,), adj[v]) for v in range(g.vertex_count)]
    total = 0
    warned = False
    while current:
        levels.append([c for c, _ in current])
        total += len(current)
        if max_dim is not None and len(levels) > max_dim:
            break
        if total > _DENSE_WARNING_SIMPLICES and max_dim is None and not warned:
            warnings.warn(
                f"clique complex already has {total} simplices; pass max_dim to bound it",
                RuntimeWarning,
                stacklevel=2,
            )
            warned = True
        nxt = []
        for clique, common in current:
            for w in sorted(x for x in common if x > clique[-1]):
                nxt.append((clique + (w,), common & adj[w]))
        nxt.sort(key=lambda item: item[0])
        current = nxt
    return SimplicialComplex(tuple(tuple(level) for level in levels))


def euler_characteristic(c: SimplicialComplex) -> int:
    return sum((-1) ** p * v for p, v in enumerate(c.f_vector))


def clique_polynomial(c: SimplicialComplex) -> list[int]:
    """Coefficients of c(t) = sum_k v_k t^k, lowest degree first."""
    return list(c.f_vector)


def generate_erdos_renyi(n: int, edge_prob: float, seed: int) -> Graph:
    """G(n, p) graph from numpy's PCG64 generator.

    Pairs (i, j), i < j, are visited in lexicographic order and one uniform
    double is drawn per pair; the pair is an edge when the draw is below
    ``edge_prob``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError("edge_prob must lie in [0, 1]")
    rng = np.random.Generator(np.random.PCG64(seed))
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                edges.append((i, j))
    return Graph(n, frozenset(edges))


def parse_edge_list(text: str, vertex_count: int | None = None) -> Graph:
    """Parse "u v" lines; '#' starts a comment.

    A line holding a single integer declares an isolated vertex. Without an
    explicit ``vertex_count`` the graph has ``max(vertex) + 1`` vertices.
    """
    edges = []
    isolated = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            nums = [int(x) for x in parts]
        except ValueError:
            raise GraphFormatError(f"line {lineno}: expected integers, got {raw!r}") from None
        if len(nums) == 1:
            isolated.append(nums[0])
        elif len(nums) == 2:
            edges.append((nums[0], nums[1]))
        else:
            raise GraphFormatError(f"line {lineno}: expected 'u v', got {raw!r}")
    vertices = [x for e in edges for x in e] + isolated
    if any(x < 0 for x in vertices):
        raise GraphFormatError("negative vertex id")
    n = vertex_count if vertex_count is not None else (max(vertices) + 1 if vertices else 0)
    try:
        return Graph(n, frozenset(edges))
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None


def parse_graph_json(text: str) -> Graph | SimplicialComplex:
    """Read ``{"n": int, "edges": [[u, v], ...]}``.

    A ``"simplices"`` key instead yields an abstract complex, closed under
    faces.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise GraphFormatError("top-level JSON value must be an object")
    try:
        if "simplices" in data:
            return SimplicialComplex.from_simplices(data["simplices"])
        edges = [tuple(e) for e in data.get("edges", [])]
        if any(len(e) != 2 for e in edges):
            raise GraphFormatError("every edge must be a pair")
        return Graph(int(data["n"]), frozenset(edges))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, GraphFormatError):
            raise
        raise GraphFormatError(f"bad graph JSON: {exc}") from None


def load_graph(path: str | Path) -> Graph | SimplicialComplex:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphFormatError(str(exc)) from None
    if path.suffix.lower() == ".json":
        return parse_graph_json(text)
    return parse_edge_list(text)


def graph_to_json(g: Graph) -> dict:
    return {"n": g.vertex_count, "edges": [list(e) for e in g.sorted_edges()]}
