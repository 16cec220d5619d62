"""Latent-node identifiability and exact parameter recovery.

When some nodes carry unobserved variables, the restricted path-sum matrix
over the observed nodes still determines every edge parameter provided each
latent node lies in at least three cliques. Recovery walks outward from
each latent node to observable anchor nodes in three distinct clique
directions and solves the resulting three path-sum equations; chains of
adjacent latent nodes repeat the procedure one node further out.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InconsistentInputError, NotIdentifiableError, UnknownNodeError
from .graph import BlockGraph, canonical_edge
from .model import DeltaFamily, PathSumMatrix, path_sum_matrix, validate_delta


@dataclass(frozen=True)
class ObservationMask:
    """Partition of the node set into observed (U) and latent nodes."""

    observed: tuple[str, ...]
    latent: tuple[str, ...]

    @classmethod
    def from_latent(cls, g: BlockGraph, latent: Iterable[str]) -> "ObservationMask":
        latent_set = {str(v) for v in latent}
        unknown = latent_set - set(g.nodes)
        if unknown:
            raise UnknownNodeError(f"latent nodes not in graph: {sorted(unknown)}")
        observed = tuple(v for v in g.nodes if v not in latent_set)
        if not observed:
            raise ValueError("at least one node must be observed")
        return cls(observed, tuple(sorted(latent_set)))


def check_identifiable(g: BlockGraph, mask: ObservationMask) -> tuple[bool, tuple[str, ...]]:
    """True iff every latent node has clique degree at least three; the
    second element lists the latent nodes that fail."""
    offending = tuple(v for v in mask.latent if g.clique_degree(v) < 3)
    return (len(offending) == 0, offending)


def _first_step(g: BlockGraph, a: str, x: str) -> str:
    """The node right after a on the shortest path from a to x."""
    return g.path_nodes(a, x)[1]


def _direction_anchors(g: BlockGraph, a: str, observed: set[str]) -> dict[int, list[str]]:
    """Observable nodes grouped by the clique their path from `a` enters first."""
    dirs: dict[int, list[str]] = {ci: [] for ci in g.cliques_at(a)}
    for x in sorted(observed):
        if x == a:
            continue
        w = _first_step(g, a, x)
        dirs[g.clique_of_edge(a, w)].append(x)
    return dirs


def _anchor_through(g: BlockGraph, a: str, b: str, observed: set[str]) -> str:
    """Smallest-identifier observable whose path from a starts with edge (a, b)."""
    for x in sorted(observed):
        if x != a and _first_step(g, a, x) == b:
            return x
    raise InconsistentInputError(
        f"no observable anchor beyond edge ({a}, {b}); mask is not identifiable"
    )


def _distance_to_anchor(g: BlockGraph, a: str, ibar: str, other_cliques: list[int],
                        dirs: dict[int, list[str]], p_obs: dict[tuple[str, str], float],
                        tol: float) -> float:
    """p(a, ibar) from observable path sums, checked across all valid
    pairs of auxiliary clique directions."""
    values = []
    for n1 in range(len(other_cliques)):
        for n2 in range(n1 + 1, len(other_cliques)):
            jbar = dirs[other_cliques[n1]][0]
            ybar = dirs[other_cliques[n2]][0]
            val = 0.5 * (
                p_obs[canonical_edge(ibar, jbar)]
                + p_obs[canonical_edge(ibar, ybar)]
                - p_obs[canonical_edge(ybar, jbar)]
            )
            values.append(val)
    if not values:
        raise NotIdentifiableError([a])
    spread = max(values) - min(values)
    if spread > tol:
        raise InconsistentInputError(
            f"recovered p({a}, {ibar}) differs by {spread:.3e} across anchor triples"
        )
    return values[0]


def recover_path_sums(g: BlockGraph, p_obs: PathSumMatrix, mask: ObservationMask,
                      *, tol: float = 1e-9) -> PathSumMatrix:
    """Reconstruct the full path-sum matrix from its restriction to the
    observed nodes.

    Observable edges read off directly; edges at latent nodes come from the
    three-anchor equations, repeated one node outward along latent chains.
    The reconstruction is validated by restricting back and comparing to
    the input.
    """
    if tuple(p_obs.nodes) != mask.observed:
        raise ValueError("path-sum matrix nodes must match the observed set")
    vals = p_obs.values
    if not np.allclose(vals, vals.T, atol=1e-12 * max(1.0, float(np.abs(vals).max()))):
        raise InconsistentInputError("observed path sums are not symmetric")
    if np.any(np.abs(np.diag(vals)) > 0):
        raise InconsistentInputError("observed path sums have nonzero diagonal")

    ok, offending = check_identifiable(g, mask)
    if not ok:
        raise NotIdentifiableError(offending)

    observed = set(mask.observed)
    lookup: dict[tuple[str, str], float] = {}
    for i, a in enumerate(p_obs.nodes):
        for j, b in enumerate(p_obs.nodes):
            if i < j:
                lookup[canonical_edge(a, b)] = float(vals[i, j])

    delta2: dict[tuple[str, str], float] = {}
    for a, b in g.edges_sorted():
        if a in observed and b in observed:
            delta2[(a, b)] = lookup[(a, b)]
            continue
        # orient the edge so the first endpoint is latent
        lat, other = (a, b) if a not in observed else (b, a)
        ibar = other if other in observed else _anchor_through(g, lat, other, observed)
        dirs = _direction_anchors(g, lat, observed)
        ci_edge = g.clique_of_edge(lat, other)
        others = [ci for ci in g.cliques_at(lat) if ci != ci_edge and dirs[ci]]
        p_lat_ibar = _distance_to_anchor(g, lat, ibar, others, dirs, lookup, tol)
        if other in observed:
            value = p_lat_ibar
        else:
            # chain case: resolve p(other, ibar) with the same scheme one
            # node further out, then subtract
            dirs_b = _direction_anchors(g, other, observed)
            ci_toward = g.clique_of_edge(other, _first_step(g, other, ibar))
            others_b = [ci for ci in g.cliques_at(other) if ci != ci_toward and dirs_b[ci]]
            p_other_ibar = _distance_to_anchor(g, other, ibar, others_b, dirs_b, lookup, tol)
            value = p_lat_ibar - p_other_ibar
        if value <= 0:
            raise InconsistentInputError(
                f"recovered edge parameter for ({a}, {b}) is non-positive: {value:.3e}"
            )
        delta2[(a, b)] = value

    full = path_sum_matrix(DeltaFamily(g, delta2))
    # closing the loop: the reconstruction must restrict back to the input
    sub = full.restrict(mask.observed)
    err = float(np.abs(sub.values - vals).max())
    if err > tol:
        raise InconsistentInputError(
            f"recovered path sums disagree with the input by {err:.3e} on the observed set"
        )
    return full


def recover_edge_params(p: PathSumMatrix, g: BlockGraph) -> DeltaFamily:
    """Edge parameters read off a full path-sum matrix: single-edge paths
    mean delta_e^2 = p_ab. Validates the resulting family."""
    params = {e: p.entry(*e) for e in g.edges_sorted()}
    return validate_delta(g, params)


def nonidentifiable_witness(d: DeltaFamily, v: str, eta: float) -> DeltaFamily:
    """A distinct parameter family indistinguishable from d when v is latent.

    Requires clique degree 1 or 2 at v. With one clique, all edge
    parameters at v shift by +eta (no observed path uses them); with two
    cliques, the parameters shift by -eta in one clique and +eta in the
    other, which cancels along every path through v. The shifted family is
    validated before returning, so a too-large eta raises NotCNDError.
    """
    g = d.graph
    cliques = g.cliques_at(v)
    if len(cliques) == 1:
        signs = (+1.0,)
    elif len(cliques) == 2:
        signs = (-1.0, +1.0)
    else:
        raise ValueError(f"witness construction needs clique degree 1 or 2 at {v!r}")
    params = dict(d.edge_params)
    for ci, sign in zip(cliques, signs):
        for w in sorted(g.cliques[ci] - {v}):
            e = canonical_edge(v, w)
            params[e] = params[e] + sign * eta
    return validate_delta(g, params)
