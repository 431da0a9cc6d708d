"""Weighted graphs with magnetic edge phases, and their (twisted) products.

A graph here is a finite vertex set {0, ..., n-1} with a positive vertex
weight m, a sparse symmetric edge weight E, and an antisymmetric edge phase
theta with values in (-pi, pi].  Phases are stored once per edge on the
canonical ordered pair (i, j) with i < j and negated on reversed lookup, so
antisymmetry holds by construction.

Two factor builders cover the funnel geometry: an exponentially weighted
half-line (m(n) = e^n, nearest-neighbour weights e^{(2n+1)/2}) and an
arbitrary finite second factor.  `twisted_product` combines them with
m(x,y) = m1(x) m2(y) and edges inherited factor-wise without extra weight
factors; `cartesian_product` is the classical variant whose edge weights
pick up the opposite factor's vertex weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import json
import math

import numpy as np

# m1(n) = e^n overflows double precision near n = 709; products of two
# sqrt-weights appear in flattening, so the graph route stops at 600.
HALF_LINE_MAX = 600
MIN_EDGE_WEIGHT = 1e-300


def flat_index(x1: int, x2: int, n2: int) -> int:
    """Row-major flat index of the product vertex (x1, x2)."""
    return x1 * n2 + x2


def pair_index(i: int, n2: int) -> tuple[int, int]:
    """Inverse of `flat_index`."""
    return divmod(i, n2)


def _canonical(x: int, y: int) -> tuple[tuple[int, int], float]:
    """Canonical key (min, max) and the sign picked up by theta."""
    return ((x, y), 1.0) if x < y else ((y, x), -1.0)


@dataclass(frozen=True)
class WeightedMagneticGraph:
    """Immutable weighted graph with magnetic phases.

    `edges` and `phases` are keyed by canonical pairs (i, j), i < j.
    `shape` records a row-major product layout (n1, n2) when the graph was
    built as a product; it is metadata only.
    """

    m: np.ndarray
    edges: dict[tuple[int, int], float]
    phases: dict[tuple[int, int], float]
    shape: tuple[int, int] | None = None
    _adj: list = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        object.__setattr__(self, "m", m)
        adj = [[] for _ in range(len(m))]
        for (i, j), w in self.edges.items():
            th = self.phases.get((i, j), 0.0)
            adj[i].append((j, w, th))
            adj[j].append((i, w, -th))
        object.__setattr__(self, "_adj", adj)

    @property
    def n(self) -> int:
        return len(self.m)

    def edge_weight(self, x: int, y: int) -> float:
        key, _ = _canonical(x, y)
        return self.edges.get(key, 0.0)

    def phase(self, x: int, y: int) -> float:
        key, sign = _canonical(x, y)
        return sign * self.phases.get(key, 0.0)

    def neighbors(self, x: int):
        """List of (y, edge weight, theta(x, y)) for neighbours of x."""
        return self._adj[x]

    def x1_of(self, i: int) -> int:
        """Half-line coordinate of flat vertex i (0 when not a product)."""
        if self.shape is None:
            return i
        return i // self.shape[1]


def degree(g: WeightedMagneticGraph, x: int) -> float:
    """Weighted degree (1/m(x)) * sum_y E(x, y)."""
    return sum(w for _, w, _ in g.neighbors(x)) / g.m[x]


def degree_vector(g: WeightedMagneticGraph) -> np.ndarray:
    return np.array([degree(g, x) for x in range(g.n)])


def validate(g: WeightedMagneticGraph) -> list[str]:
    """Diagnostic checks; an empty list means the graph is well formed.

    Violations are reported, not raised, so loaders can surface several
    problems at once.
    """
    problems = []
    m = np.asarray(g.m, dtype=float)
    if m.ndim != 1 or len(m) == 0:
        problems.append("vertex weights must form a nonempty vector")
        return problems
    if not np.all(np.isfinite(m)):
        problems.append("vertex weights must be finite")
    bad = np.where(m <= 0.0)[0]
    for x in bad:
        problems.append(f"vertex weight m({x}) = {m[x]} is not positive")
    for (i, j), w in g.edges.items():
        if not (0 <= i < g.n and 0 <= j < g.n):
            problems.append(f"edge ({i},{j}) references a missing vertex")
            continue
        if i == j:
            problems.append(f"self-loop at vertex {i}")
        if j < i:
            problems.append(f"edge key ({i},{j}) is not canonical (need i < j)")
        if not np.isfinite(w) or w < 0.0:
            problems.append(f"edge weight E({i},{j}) = {w} is not a nonnegative real")
        elif 0.0 < w < MIN_EDGE_WEIGHT:
            problems.append(f"edge weight E({i},{j}) = {w} is below {MIN_EDGE_WEIGHT}")
    for (i, j), th in g.phases.items():
        if (i, j) not in g.edges or g.edges[(i, j)] == 0.0:
            problems.append(f"phase theta({i},{j}) set on a non-edge")
        if not -math.pi < th <= math.pi + 1e-15:
            problems.append(f"phase theta({i},{j}) = {th} outside (-pi, pi]")
    return problems


def validate_maps(m, edge_map: dict, phase_map: dict) -> list[str]:
    """Validate raw full (both orientations) maps before canonicalisation.

    Checks the symmetry of E and the antisymmetry of theta explicitly,
    which the canonical storage of `WeightedMagneticGraph` makes impossible
    to violate after construction.
    """
    problems = []
    m = np.asarray(m, dtype=float)
    for (x, y), w in edge_map.items():
        if x == y and w != 0.0:
            problems.append(f"self-loop at vertex {x}")
        wr = edge_map.get((y, x))
        if wr is not None and not math.isclose(w, wr, rel_tol=0.0, abs_tol=0.0):
            problems.append(f"edge weight not symmetric on ({x},{y}): {w} vs {wr}")
    for (x, y), th in phase_map.items():
        tr = phase_map.get((y, x))
        if tr is not None and th != -tr:
            problems.append(f"phase not antisymmetric on ({x},{y}): {th} vs {tr}")
        w = edge_map.get((x, y), edge_map.get((y, x), 0.0))
        if w == 0.0 and th != 0.0:
            problems.append(f"phase theta({x},{y}) set on a non-edge")
    bad = np.where(m <= 0.0)[0]
    for x in bad:
        problems.append(f"vertex weight m({x}) = {m[x]} is not positive")
    return problems


def _check(g: WeightedMagneticGraph) -> WeightedMagneticGraph:
    problems = validate(g)
    if problems:
        raise ValueError("invalid graph: " + "; ".join(problems))
    return g


@dataclass(frozen=True)
class FunnelFactorSpec:
    """Truncated exponentially weighted half-line on sites 0..n_max-1.

    theta1[k] is the phase of the edge (k, k+1); None means no magnetic
    phase.
    """

    n_max: int
    theta1: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_max < 2:
            raise ValueError(f"half-line needs n_max >= 2, got {self.n_max}")
        if self.n_max > HALF_LINE_MAX:
            raise ValueError(
                f"n_max = {self.n_max} exceeds {HALF_LINE_MAX}; the vertex "
                "weights e^n leave double range (use the closed-form "
                "flattened builders for larger truncations)"
            )
        if self.theta1 is not None:
            object.__setattr__(self, "theta1", tuple(float(t) for t in self.theta1))
            if len(self.theta1) != self.n_max - 1:
                raise ValueError(
                    f"theta1 must have length n_max-1 = {self.n_max - 1}, "
                    f"got {len(self.theta1)}"
                )

    def phase_array(self) -> np.ndarray:
        if self.theta1 is None:
            return np.zeros(self.n_max - 1)
        return np.asarray(self.theta1, dtype=float)


@dataclass(frozen=True)
class SecondFactorSpec:
    """Finite second factor: weights m2 and sparse edges (i, j, weight, theta)."""

    m2: tuple[float, ...]
    edge_list: tuple[tuple[int, int, float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "m2", tuple(float(v) for v in self.m2))
        object.__setattr__(
            self,
            "edge_list",
            tuple((int(i), int(j), float(w), float(t)) for i, j, w, t in self.edge_list),
        )
        if len(self.m2) == 0:
            raise ValueError("second factor needs at least one vertex")

    @property
    def n(self) -> int:
        return len(self.m2)

    def to_graph(self) -> WeightedMagneticGraph:
        edges, phases = {}, {}
        for i, j, w, t in self.edge_list:
            key, sign = _canonical(i, j)
            if key in edges:
                raise ValueError(f"duplicate edge {key} in second factor")
            edges[key] = w
            if t != 0.0:
                phases[key] = sign * t
        g = WeightedMagneticGraph(np.asarray(self.m2), edges, phases, shape=(1, self.n))
        return _check(g)

    def is_connected(self) -> bool:
        if self.n == 1:
            return True
        adj = [[] for _ in range(self.n)]
        for i, j, w, _ in self.edge_list:
            if w > 0.0:
                adj[i].append(j)
                adj[j].append(i)
        seen = {0}
        stack = [0]
        while stack:
            for y in adj[stack.pop()]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == self.n


def build_half_line(spec: FunnelFactorSpec) -> WeightedMagneticGraph:
    """Truncated half-line with m(n) = e^n and E(n, n+1) = e^{(2n+1)/2}."""
    n = spec.n_max
    m = np.exp(np.arange(n, dtype=float))
    edges, phases = {}, {}
    th = spec.phase_array()
    for k in range(n - 1):
        edges[(k, k + 1)] = math.exp((2 * k + 1) / 2.0)
        if th[k] != 0.0:
            phases[(k, k + 1)] = th[k]
    return _check(WeightedMagneticGraph(m, edges, phases, shape=(n, 1)))


def unit_half_line(n_max: int) -> WeightedMagneticGraph:
    """Half-line with unit weights (m = 1, E(n, n+1) = 1)."""
    if n_max < 2:
        raise ValueError("need n_max >= 2")
    edges = {(k, k + 1): 1.0 for k in range(n_max - 1)}
    return _check(WeightedMagneticGraph(np.ones(n_max), edges, {}, shape=(n_max, 1)))


def _product(g1, g2, edge_rule) -> WeightedMagneticGraph:
    n1, n2 = g1.n, g2.n
    m = np.kron(np.asarray(g1.m), np.asarray(g2.m))
    edges, phases = {}, {}
    for (x, xp), w in g1.edges.items():
        th = g1.phases.get((x, xp), 0.0)
        for y in range(n2):
            a, b = flat_index(x, y, n2), flat_index(xp, y, n2)
            edges[(a, b)] = edge_rule(w, g2.m[y], first=True)
            if th != 0.0:
                phases[(a, b)] = th
    for (y, yp), w in g2.edges.items():
        th = g2.phases.get((y, yp), 0.0)
        for x in range(n1):
            a, b = flat_index(x, y, n2), flat_index(x, yp, n2)
            edges[(a, b)] = edge_rule(w, g1.m[x], first=False)
            if th != 0.0:
                phases[(a, b)] = th
    return _check(WeightedMagneticGraph(m, edges, phases, shape=(n1, n2)))


def twisted_product(g1: WeightedMagneticGraph, g2: WeightedMagneticGraph) -> WeightedMagneticGraph:
    """Product with m = m1 m2 and edges inherited factor-wise unweighted.

    Degrees decompose as deg(x,y) = deg1(x)/m2(y) + deg2(y)/m1(x).
    """
    return _product(g1, g2, lambda w, mw, first: w)


def cartesian_product(g1: WeightedMagneticGraph, g2: WeightedMagneticGraph) -> WeightedMagneticGraph:
    """Classical Cartesian product: edge weights carry the opposite factor's m."""
    return _product(g1, g2, lambda w, mw, first: w * mw)


def load_graph_block(block: dict) -> tuple[FunnelFactorSpec, SecondFactorSpec]:
    """Parse the {"halfline": ..., "factor2": ...} graph description.

    Raises ValueError with a path-qualified message on the first semantic
    problem so scenario loaders can report the offending key.
    """
    try:
        hl = block["halfline"]
        n_max = int(hl["n_max"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"graph.halfline: missing or malformed ({exc})") from exc
    theta1 = hl.get("theta1")
    if theta1 is not None:
        theta1 = tuple(float(t) for t in theta1)
    try:
        spec1 = FunnelFactorSpec(n_max=n_max, theta1=theta1)
    except ValueError as exc:
        raise ValueError(f"graph.halfline: {exc}") from exc

    f2 = block.get("factor2", {"m2": [1.0], "edges": []})
    try:
        m2 = tuple(float(v) for v in f2["m2"])
        edge_list = tuple(
            (int(i), int(j), float(w), float(t)) for i, j, w, t in f2.get("edges", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"graph.factor2: malformed ({exc})") from exc
    spec2 = SecondFactorSpec(m2=m2, edge_list=edge_list)
    problems = validate(spec2.to_graph())
    if problems:
        raise ValueError("graph.factor2: " + "; ".join(problems))
    return spec1, spec2


def load_graph_file(path: str) -> tuple[FunnelFactorSpec, SecondFactorSpec]:
    """Load a graph spec file, reporting JSON errors with line numbers."""
    with open(path) as fh:
        text = fh.read()
    try:
        block = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return load_graph_block(block)
