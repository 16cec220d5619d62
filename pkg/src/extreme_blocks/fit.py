"""Moment-based estimation of edge parameters from multivariate samples.

Pipeline: standardize margins to unit Pareto by ranks, collect log-spacings
above per-anchor thresholds, form empirical covariances, and match them to
the model covariances, which are linear in the squared edge parameters.
The resulting nonnegativity-constrained linear least-squares problem is
solved by a Lawson-Hanson active-set iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.stats import rankdata

from .errors import (
    ConstantColumnError,
    KOutOfRangeError,
    ScaleError,
    UnderdeterminedError,
    UnknownNodeError,
)
from .graph import BlockGraph, Edge
from .model import edge_usage, sigma_coefficient_matrix


@dataclass(frozen=True)
class SampleSet:
    """n x |V| data matrix with node order and marginal-scale tag."""

    data: np.ndarray
    nodes: tuple[str, ...]
    scale: str = "raw"  # "raw" or "pareto"

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(self.nodes):
            raise ValueError("data shape does not match the node list")
        if data.shape[0] < 2:
            raise ValueError("need at least two observations")
        if not np.all(np.isfinite(data)):
            raise ValueError("data contains missing or non-finite entries")
        if self.scale not in ("raw", "pareto"):
            raise ValueError(f"unknown scale tag {self.scale!r}")
        if self.scale == "pareto" and np.any(data <= 0):
            raise ValueError("pareto-scale data must be strictly positive")
        object.__setattr__(self, "data", data)

    def column(self, v: str) -> np.ndarray:
        try:
            return self.data[:, self.nodes.index(v)]
        except ValueError:
            raise UnknownNodeError(f"unknown node {v!r}") from None


def rank_transform(s: SampleSet) -> SampleSet:
    """Empirical standardization to the unit-Pareto scale.

    Each entry becomes (n+1) / (n+1-r) with r the within-column rank
    (average for ties), so monotone transformations of a column leave
    the result unchanged and the largest value maps to n+1.
    """
    if s.scale != "raw":
        raise ScaleError("rank_transform expects raw-scale data")
    n = s.data.shape[0]
    out = np.empty_like(s.data)
    for j in range(s.data.shape[1]):
        col = s.data[:, j]
        if np.all(col == col[0]):
            raise ConstantColumnError(f"column {s.nodes[j]!r} is constant")
        r = rankdata(col, method="average")
        out[:, j] = (n + 1.0) / (n + 1.0 - r)
    return SampleSet(out, s.nodes, "pareto")


def log_spacings(s: SampleSet, u: str, k: int) -> np.ndarray:
    """Rows (ln X_v - ln X_u, v != u) for the k largest anchor observations.

    Ties in the anchor column break deterministically by row index. The
    columns follow the sorted node order with the anchor removed.
    """
    if s.scale != "pareto":
        raise ScaleError("log_spacings expects pareto-scale data")
    n = s.data.shape[0]
    if not 1 <= k < n:
        raise KOutOfRangeError(f"k must be in [1, {n - 1}], got {k}")
    anchor = s.column(u)
    top = np.argsort(-anchor, kind="stable")[:k]
    cols = [j for j, v in enumerate(s.nodes) if v != u]
    logs = np.log(s.data[np.ix_(top, cols)])
    return logs - np.log(anchor[top])[:, None]


@dataclass(frozen=True)
class FitResult:
    delta2_hat: dict[Edge, float]
    objective: float
    diagnostics: dict[str, dict] = field(default_factory=dict)

    def as_vector(self, g: BlockGraph) -> np.ndarray:
        return np.array([self.delta2_hat[e] for e in g.edges_sorted()])


def nnls_active_set(a: np.ndarray, b: np.ndarray,
                    kkt_tol: float = 1e-10, max_iter: int | None = None) -> np.ndarray:
    """Minimize ||a x - b||_2 subject to x >= 0 (Lawson-Hanson).

    Stops when every zero-clamped coordinate has gradient at most kkt_tol
    relative to the problem scale.
    """
    m, n = a.shape
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    scale = max(1.0, float(np.abs(a.T @ b).max())) if m else 1.0
    tol = kkt_tol * scale
    max_iter = max_iter if max_iter is not None else 10 * n

    for _ in range(max_iter):
        grad = a.T @ (b - a @ x)
        grad = np.where(passive, -np.inf, grad)
        t = int(np.argmax(grad))
        if grad[t] <= tol:
            break
        passive[t] = True
        while True:
            sol = np.zeros(n)
            cols = np.flatnonzero(passive)
            sol[cols] = np.linalg.lstsq(a[:, cols], b, rcond=None)[0]
            if np.all(sol[cols] > 0):
                x = sol
                break
            bad = passive & (sol <= 0)
            ratios = x[bad] / (x[bad] - sol[bad])
            alpha = float(ratios.min())
            x = x + alpha * (sol - x)
            passive &= x > 1e-14
            x[~passive] = 0.0
    return x


def _empirical_moments(spacings: Mapping[str, np.ndarray]):
    covs, means = {}, {}
    for u, mat in spacings.items():
        mat = np.asarray(mat, dtype=float)
        if mat.ndim != 2 or mat.shape[0] < 2:
            raise ValueError(f"anchor {u!r}: spacings need at least two rows")
        covs[u] = np.cov(mat, rowvar=False, ddof=1)
        means[u] = mat.mean(axis=0)
    return covs, means


def fit_delta(g: BlockGraph, spacings: Mapping[str, np.ndarray], *,
              include_means: bool = False, mean_weight: float = 1.0,
              anchor_weights: Mapping[str, float] | None = None,
              kkt_tol: float = 1e-10) -> FitResult:
    """Estimate delta^2 by matching model to empirical covariances.

    Minimizes sum_u w_u || Sigma_u(delta^2) - Sigma_hat_u ||_F^2 over
    delta^2 >= 0; optionally adds the mean condition mu_u = -2 p_u with
    weight `mean_weight`. Because Sigma_u is linear in delta^2, this is a
    nonnegativity-constrained linear least-squares problem.
    """
    covs, means = _empirical_moments(spacings)
    return fit_delta_from_covariances(
        g, covs, means if include_means else None,
        mean_weight=mean_weight, anchor_weights=anchor_weights, kkt_tol=kkt_tol,
        row_counts={u: int(np.asarray(m).shape[0]) for u, m in spacings.items()},
    )


def fit_delta_from_covariances(g: BlockGraph, covs: Mapping[str, np.ndarray],
                               means: Mapping[str, np.ndarray] | None = None, *,
                               mean_weight: float = 1.0,
                               anchor_weights: Mapping[str, float] | None = None,
                               kkt_tol: float = 1e-10,
                               row_counts: Mapping[str, int] | None = None) -> FitResult:
    if not covs:
        raise ValueError("need covariance estimates for at least one anchor")
    edges = g.edges_sorted()
    n_edges = len(edges)
    usage = edge_usage(g)

    design_rows, target_rows = [], []
    for u, cov_hat in covs.items():
        iu = g.index(u)
        m = len(g.nodes) - 1
        cov_hat = np.asarray(cov_hat, dtype=float)
        if cov_hat.shape != (m, m):
            raise ValueError(f"anchor {u!r}: covariance must be {m}x{m}")
        w = float(anchor_weights[u]) if anchor_weights else 1.0
        coeffs = sigma_coefficient_matrix(g, u).reshape(m * m, n_edges)
        design_rows.append(np.sqrt(w) * coeffs)
        target_rows.append(np.sqrt(w) * cov_hat.reshape(m * m))
        if means is not None:
            rest = [i for i in range(len(g.nodes)) if i != iu]
            mean_coeffs = np.zeros((m, n_edges))
            for k, e in enumerate(edges):
                mean_coeffs[:, k] = -2.0 * usage[e][iu, rest].astype(float)
            lam = np.sqrt(w * mean_weight)
            design_rows.append(lam * mean_coeffs)
            target_rows.append(lam * np.asarray(means[u], dtype=float))

    design = np.vstack(design_rows)
    target = np.concatenate(target_rows)

    svals = np.linalg.svd(design, compute_uv=False)
    rank = int(np.sum(svals > 1e-10 * svals[0]))
    if rank < n_edges:
        _, _, vt = np.linalg.svd(design)
        null = vt[rank:]
        involved = np.any(np.abs(null) > 1e-8, axis=0)
        raise UnderdeterminedError([e for e, bad in zip(edges, involved) if bad])

    delta2 = nnls_active_set(design, target, kkt_tol=kkt_tol)
    resid = design @ delta2 - target
    diagnostics = {}
    if row_counts:
        diagnostics = {u: {"rows": row_counts[u]} for u in row_counts}
    return FitResult(
        delta2_hat={e: float(v) for e, v in zip(edges, delta2)},
        objective=float(resid @ resid),
        diagnostics=diagnostics,
    )
