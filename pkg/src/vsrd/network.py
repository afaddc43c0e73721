"""First-order reaction networks: reversibility, equilibria and gap constants.

A network on N species is stored as its rate matrix ``A`` with ``A[i, j]``
the rate of the reaction ``S_j -> S_i`` (i != j) and the diagonal fixed by
zero column sums, so that ``c' = A c`` conserves ``sum(c)``.

The gap constant bounds the symmetrised reaction quadratic form

    Q(c) = sum_{i<j} (a_ij + a_ji) (c_i - c_j)^2

from below by ``eta * |c|^2`` on the hyperplane ``alpha . c = 0``. Two
routes are provided: the optimal constant (a restricted symmetric
eigenproblem) and a constructive chain bound that mirrors the
triangle-inequality argument and records which reaction chains it used.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import (
    DisconnectedNetwork,
    InvalidNetwork,
    NonPositiveKernel,
    SingularNetwork,
)


@dataclass(frozen=True)
class ReactionNetwork:
    """Linear reaction network with column-sum-zero rate matrix."""

    rates: np.ndarray
    species: tuple[str, ...] = ()

    def __post_init__(self):
        a = np.array(self.rates, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise InvalidNetwork(f"rate matrix must be square and non-empty, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidNetwork("rate matrix contains non-finite entries")
        n = a.shape[0]
        off = ~np.eye(n, dtype=bool)
        if np.any(a[off] < 0):
            raise InvalidNetwork("off-diagonal rates must be nonnegative")
        np.fill_diagonal(a, 0.0)
        np.fill_diagonal(a, -a.sum(axis=0))
        a.setflags(write=False)
        object.__setattr__(self, "rates", a)
        names = tuple(self.species) or tuple(f"S{i + 1}" for i in range(n))
        if len(names) != n:
            raise InvalidNetwork(f"{len(names)} species names for {n} species")
        object.__setattr__(self, "species", names)

    @property
    def n_species(self) -> int:
        return self.rates.shape[0]

    def offdiagonal(self) -> np.ndarray:
        a = self.rates.copy()
        np.fill_diagonal(a, 0.0)
        return a

    def pair_weights(self) -> np.ndarray:
        """Symmetric matrix of ``a_ij + a_ji`` with zero diagonal."""
        a = self.offdiagonal()
        return a + a.T

    @classmethod
    def from_json(cls, path: str | Path) -> "ReactionNetwork":
        with open(path) as fh:
            data = json.load(fh)
        try:
            return cls(np.asarray(data["rates"], dtype=float), tuple(data.get("species", ())))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidNetwork(f"bad network file {path}: {exc}") from exc

    def to_json(self) -> dict:
        return {"species": list(self.species), "rates": self.offdiagonal().tolist()}


def as_weights(alpha: Sequence[float], n: int) -> np.ndarray:
    w = np.asarray(alpha, dtype=float).ravel()
    if w.shape != (n,):
        raise InvalidNetwork(f"expected {n} weights, got {w.size}")
    if not np.all(w > 0) or not np.all(np.isfinite(w)):
        raise InvalidNetwork("weights must be finite and strictly positive")
    return w


@dataclass(frozen=True)
class Reversibility:
    weakly_reversible: bool
    components: list[list[int]]

    @property
    def single_component(self) -> bool:
        return len(self.components) == 1


def check_weak_reversibility(net: ReactionNetwork) -> Reversibility:
    """Weak reversibility test and strongly connected components.

    The network is weakly reversible iff both endpoints of every reaction
    with positive rate lie in the same strongly connected component.
    """
    a = net.offdiagonal()
    # edge j -> i when a[i, j] > 0; csgraph wants graph[src, dst]
    graph = csr_matrix((a.T > 0).astype(float))
    ncomp, labels = connected_components(graph, directed=True, connection="strong")
    src, dst = np.nonzero(a.T > 0)
    ok = bool(np.all(labels[src] == labels[dst]))
    comps: dict[int, list[int]] = {}
    for idx, lab in enumerate(labels):
        comps.setdefault(int(lab), []).append(idx)
    ordered = sorted(comps.values(), key=lambda c: c[0])
    return Reversibility(ok, ordered)


def _require_single_component(net: ReactionNetwork) -> None:
    rev = check_weak_reversibility(net)
    if not (rev.weakly_reversible and rev.single_component):
        raise DisconnectedNetwork(
            f"network must be one strongly connected component, got components {rev.components}"
        )


def network_equilibrium(net: ReactionNetwork, mass: float) -> np.ndarray:
    """Positive vector spanning ``ker A``, scaled to ``sum = mass``."""
    if not mass > 0:
        raise InvalidNetwork("mass must be positive")
    kernel = sla.null_space(net.rates, rcond=1e-12)
    if kernel.shape[1] != 1:
        raise SingularNetwork(f"kernel dimension {kernel.shape[1]} != 1")
    c = kernel[:, 0]
    c = c / c.sum()
    tol = 1e-12 * np.abs(c).max()
    if np.any(c <= tol):
        raise NonPositiveKernel(f"kernel vector is not strictly positive: {c}")
    return mass * c


def _constraint_basis(alpha: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``{c : alpha . c = 0}``."""
    return sla.null_space(alpha[None, :])


def gap_constant_optimal(net: ReactionNetwork, alpha: Sequence[float]) -> float:
    """Largest eta with ``Q(c) >= eta |c|^2`` whenever ``alpha . c = 0``."""
    n = net.n_species
    if n < 2:
        raise InvalidNetwork("gap constant undefined for a single species")
    w = as_weights(alpha, n)
    _require_single_component(net)
    pw = net.pair_weights()
    lap = np.diag(pw.sum(axis=1)) - pw
    basis = _constraint_basis(w)
    eta = float(sla.eigvalsh(basis.T @ lap @ basis)[0])
    if eta <= 0:
        raise DisconnectedNetwork("quadratic form degenerate on the constraint plane")
    return eta


@dataclass(frozen=True)
class GapResult:
    """Constructive gap constant with its provenance."""

    eta: float
    eta_unclamped: float
    eta_optimal: float
    zeta: float
    alpha_factor: float
    chains: dict[str, list[int]] = field(default_factory=dict)
    limiting_edge: tuple[int, int] = (0, 0)
    clamped: bool = False

    def to_json(self) -> dict:
        return {
            "eta": self.eta,
            "eta_unclamped": self.eta_unclamped,
            "eta_optimal": self.eta_optimal,
            "zeta": self.zeta,
            "alpha_factor": self.alpha_factor,
            "chains": self.chains,
            "limiting_edge": list(self.limiting_edge),
            "clamped": self.clamped,
        }


def chain_constant(pair_weights: np.ndarray) -> tuple[float, dict[str, list[int]], tuple[int, int]]:
    """Chain bound ``zeta`` with ``Q(c) >= zeta * sum_{i<j} (c_i - c_j)^2``.

    Every species pair is routed along a shortest path of the reaction graph
    (hop count; ties resolved by the BFS predecessor order). Cauchy-Schwarz
    on a path of length ``len`` gives
    ``(c_i - c_j)^2 <= len * sum_path (c_k - c_l)^2``, so summing over pairs
    each edge ``e`` carries the load ``sum_{pairs through e} len`` and
    ``zeta = min_e w_e / load_e``.
    """
    n = pair_weights.shape[0]
    adj = csr_matrix((pair_weights > 0).astype(float))
    _, pred = shortest_path(adj, directed=False, unweighted=True, return_predecessors=True)
    load = np.zeros((n, n))
    chains: dict[str, list[int]] = {}
    for i in range(n):
        for j in range(i + 1, n):
            path = [j]
            while path[-1] != i:
                k = pred[i, path[-1]]
                if k < 0:
                    raise DisconnectedNetwork(f"no reaction chain between species {i} and {j}")
                path.append(int(k))
            path.reverse()
            length = len(path) - 1
            chains[f"{i}-{j}"] = path
            for a, b in zip(path[:-1], path[1:]):
                lo, hi = min(a, b), max(a, b)
                load[lo, hi] += length
    used = np.argwhere(load > 0)
    ratios = [pair_weights[a, b] / load[a, b] for a, b in used]
    k = int(np.argmin(ratios))
    return float(ratios[k]), chains, (int(used[k][0]), int(used[k][1]))


def gap_constant_constructive(net: ReactionNetwork, alpha: Sequence[float]) -> GapResult:
    """Constructive gap constant, clamped to the optimal one.

    Combines the chain bound with the elementary estimate
    ``sum_{j != i0} (c_i0 - c_j)^2 >= (sum alpha)^2 / ((N-1) max alpha^2) c_i0^2``;
    summing it over ``i0`` counts every pair twice, hence the factor 1/2.
    """
    n = net.n_species
    if n < 2:
        raise InvalidNetwork("gap constant undefined for a single species (constraint forces c = 0)")
    w = as_weights(alpha, n)
    _require_single_component(net)
    zeta, chains, edge = chain_constant(net.pair_weights())
    alpha_factor = w.sum() ** 2 / (2.0 * (n - 1) * np.max(w**2))
    raw = zeta * alpha_factor
    opt = gap_constant_optimal(net, w)
    return GapResult(
        eta=float(min(raw, opt)),
        eta_unclamped=float(raw),
        eta_optimal=float(opt),
        zeta=float(zeta),
        alpha_factor=float(alpha_factor),
        chains=chains,
        limiting_edge=edge,
        clamped=bool(raw > opt),
    )


def quadratic_form(net: ReactionNetwork, c: np.ndarray) -> np.ndarray:
    """``Q(c)`` for one vector or a stack of row vectors."""
    pw = net.pair_weights()
    lap = np.diag(pw.sum(axis=1)) - pw
    c = np.atleast_2d(c)
    return np.einsum("ki,ij,kj->k", c, lap, c)
