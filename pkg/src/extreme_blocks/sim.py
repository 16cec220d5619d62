"""Seeded Monte-Carlo simulation of the limiting multiplicative field.

Increments are drawn clique by clique: within a clique the log-increments
are jointly normal with the clique-limit parameters anchored at its
separator toward the chosen node, and distinct cliques are independent.
Streams come from a counter-based generator (Philox) keyed by
(seed, clique index), so per-clique draws are independent, order-insensitive,
and reproducible regardless of how many workers execute them.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import SingularBlockError
from .model import DeltaFamily, increment_blocks
from .sim_keys import PARETO_STREAM_TAG, philox_stream

__all__ = [
    "IncrementDraw",
    "FieldSample",
    "sample_increments",
    "sample_limit_field",
    "sample_pareto_conditioned",
    "mc_stdf",
]


@dataclass(frozen=True)
class IncrementDraw:
    """One joint draw of the edge increments pointing away from the anchor.

    `values` maps directed edges (s, v) to Z_e; `groups` lists those edges
    clique by clique. Every node other than the anchor appears exactly once
    as an edge endpoint.
    """

    anchor: str
    values: dict[tuple[str, str], float]
    groups: tuple[tuple[tuple[str, str], ...], ...]


@dataclass(frozen=True)
class FieldSample:
    """n draws of the limiting field A_u; the anchor column is identically 1."""

    anchor: str
    nodes: tuple[str, ...]
    matrix: np.ndarray

    def column(self, v: str) -> np.ndarray:
        return self.matrix[:, self.nodes.index(v)]


def _chol_with_jitter(psi: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(psi)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-12 * float(np.trace(psi))
    try:
        return np.linalg.cholesky(psi + jitter * np.eye(psi.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise SingularBlockError("increment covariance is not factorizable") from exc


def _ln_increments(d: DeltaFamily, u: str, n: int, seed: int, threads: int = 1):
    """(n, |V|-1) matrix of log-increments, columns in sorted V-minus-u order.

    Column v holds ln Z of the last edge on the path from u to v.
    """
    g = d.graph
    rest = [v for v in g.nodes if v != u]
    pos = {v: k for k, v in enumerate(rest)}
    blocks = increment_blocks(d, u)
    out = np.empty((n, len(rest)))

    def fill(ci: int):
        targets, mean, psi = blocks[ci]
        chol = _chol_with_jitter(psi)
        rng = philox_stream(seed, ci)
        z = rng.standard_normal((n, len(targets)))
        lnz = mean[None, :] + z @ chol.T
        for j, v in enumerate(targets):
            out[:, pos[v]] = lnz[:, j]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(len(blocks))))
    else:
        for ci in range(len(blocks)):
            fill(ci)
    return rest, blocks, out


def sample_increments(d: DeltaFamily, u: str, rng_seed: int) -> IncrementDraw:
    """Draw the increment vector Z once: jointly normal on the log scale
    within each clique, independent across cliques, then exponentiated."""
    g = d.graph
    g.index(u)
    rest, blocks, lnz = _ln_increments(d, u, 1, rng_seed)
    pos = {v: k for k, v in enumerate(rest)}
    values: dict[tuple[str, str], float] = {}
    groups = []
    for ci, (targets, _, _) in enumerate(blocks):
        s = g.separator_node(u, g.cliques[ci])
        edges = tuple((s, v) for v in targets)
        for s_, v in edges:
            values[(s_, v)] = float(np.exp(lnz[0, pos[v]]))
        groups.append(edges)
    return IncrementDraw(u, values, tuple(groups))


def _path_indicator(d: DeltaFamily, u: str, rest: Sequence[str]) -> np.ndarray:
    """M[v, w] = 1 when w lies on the shortest path from u to v (w != u)."""
    g = d.graph
    pos = {v: k for k, v in enumerate(rest)}
    m = np.zeros((len(rest), len(rest)))
    for v in rest:
        for node in g.path_nodes(u, v)[1:]:
            m[pos[v], pos[node]] = 1.0
    return m


def sample_limit_field(d: DeltaFamily, u: str, n: int, rng_seed: int,
                       threads: int = 1) -> FieldSample:
    """n independent draws of A_u, where A_uv multiplies the increments
    along the unique shortest path from u to v and A_uu = 1."""
    if n < 1:
        raise ValueError("need at least one draw")
    g = d.graph
    g.index(u)
    rest, _, lnz = _ln_increments(d, u, n, rng_seed, threads)
    ln_a = lnz @ _path_indicator(d, u, rest).T
    matrix = np.ones((n, len(g.nodes)))
    iu = g.index(u)
    cols = [i for i in range(len(g.nodes)) if i != iu]
    matrix[:, cols] = np.exp(ln_a)
    return FieldSample(u, g.nodes, matrix)


def sample_pareto_conditioned(d: DeltaFamily, u: str, n: int, rng_seed: int,
                              threads: int = 1) -> np.ndarray:
    """Spectral construction of (Y | Y_u > 1): rows P_i * A_u^(i) with P_i
    independent unit Pareto. Columns follow the sorted node order."""
    field = sample_limit_field(d, u, n, rng_seed, threads)
    rng = philox_stream(rng_seed, PARETO_STREAM_TAG)
    radial = 1.0 / (1.0 - rng.random(n))
    return radial[:, None] * field.matrix


def mc_stdf(d: DeltaFamily, u: str,
            x: Mapping[str, float] | Sequence[float],
            n: int, rng_seed: int, threads: int = 1) -> tuple[float, float]:
    """Monte-Carlo stdf estimate E[max_v x_v A_uv] with its standard error."""
    g = d.graph
    if isinstance(x, Mapping):
        vec = np.zeros(len(g.nodes))
        for v, w in x.items():
            vec[g.index(v)] = float(w)
    else:
        vec = np.asarray(x, dtype=float)
        if vec.shape != (len(g.nodes),):
            raise ValueError("weight vector does not match the node count")
    if np.any(vec < 0):
        raise ValueError("weights must be nonnegative")
    field = sample_limit_field(d, u, n, rng_seed, threads)
    maxima = (field.matrix * vec[None, :]).max(axis=1)
    est = float(maxima.mean())
    se = float(maxima.std(ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    return est, se
