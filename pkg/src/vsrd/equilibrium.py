"""Positive equilibria of the assembled operator.

The primary route solves ``L u = 0`` with one row replaced by the mass
constraint. Two fixed-point iterations mirror the existence arguments: each
sweep solves the decoupled per-species problems with the cross-species
terms frozen, then rescales to the prescribed mass. They exist to
cross-check the kernel solve, not to replace it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .discretization import JAK_ODE, CoupledOperator, ModelSpec, StateLayout, assemble
from .errors import KernelDimensionError, NoConvergence, SignChangeError, ValidationError, ZeroMassError
from .geometry import CompartmentMesh

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class EquilibriumProfile:
    state: np.ndarray
    layout: StateLayout
    mass: float
    bounds: tuple[float, float]
    residual: float  # |L u|_inf / (|L|_inf |u|_inf)
    method: str = "kernel"
    iterations: int = 0
    strictly_positive: bool = True
    diagnostics: dict = field(default_factory=dict)

    def species(self, name: str) -> np.ndarray:
        return self.state[self.layout[name]]

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "method": self.method,
            "mass": self.mass,
            "bounds": list(self.bounds),
            "residual": self.residual,
            "iterations": self.iterations,
            "strictly_positive": self.strictly_positive,
            "profile": {b.species: self.state[b.slice].tolist() for b in self.layout.blocks},
            "diagnostics": self.diagnostics,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1)


def _profile(op: CoupledOperator, u: np.ndarray, mass: float, method: str, iterations: int = 0) -> EquilibriumProfile:
    lu = op.matrix @ u
    norm = abs(op.matrix).sum(axis=1).max()
    residual = float(np.abs(lu).max() / (norm * np.abs(u).max()))
    lo, hi = float(u.min()), float(u.max())
    diag = {}
    if op.spec.model_kind == "lgl":
        diag["pi_gradient_spike"] = _arc_gradient_spike(op, u)
    return EquilibriumProfile(
        state=u,
        layout=op.layout,
        mass=float(mass),
        bounds=(lo, hi),
        residual=residual,
        method=method,
        iterations=iterations,
        strictly_positive=bool(lo >= 1e-14 * hi),
        diagnostics=diag,
    )


def _arc_gradient_spike(op: CoupledOperator, u: np.ndarray) -> float:
    """Largest |angular jump| of P in the outer ring near the arc ends, relative to the median jump."""
    mesh = op.mesh
    n_t = mesh.spec.resolution[1]
    ring = u[op.layout["P"]][-n_t:]
    jumps = np.abs(np.diff(np.append(ring, ring[0])))
    a, b = mesh.arc_endpoints
    near = jumps[[(a - 1) % n_t, b % n_t]]
    med = np.median(jumps)
    return float(near.max() / med) if med > 0 else float("inf")


def terminal_components(matrix: sp.spmatrix) -> int:
    """Number of closed (sink) strongly connected classes of the transfer graph."""
    off = sp.csr_matrix(matrix, copy=True)
    off.setdiag(0)
    off.eliminate_zeros()
    # transfer j -> i when L[i, j] > 0; csgraph expects graph[src, dst]
    graph = (off.T > 0).astype(float).tocsr()
    ncomp, labels = connected_components(graph, directed=True, connection="strong")
    coo = graph.tocoo()
    leaving = np.zeros(ncomp, dtype=bool)
    cross = labels[coo.row] != labels[coo.col]
    leaving[labels[coo.row[cross]]] = True
    return int(np.count_nonzero(~leaving))


def equilibrium_kernel(op: CoupledOperator, mass: float) -> EquilibriumProfile:
    """Kernel vector of ``L`` scaled so that ``sum(M u) = mass``."""
    if not mass > 0:
        raise ValidationError("mass must be positive")
    n_term = terminal_components(op.matrix)
    if n_term != 1:
        raise KernelDimensionError(f"operator has {n_term} closed classes, kernel dimension {n_term} != 1")
    a = sp.lil_matrix(op.matrix)
    a[0, :] = op.mass
    rhs = np.zeros(op.n)
    rhs[0] = mass
    u = spla.splu(a.tocsc()).solve(rhs)
    scale = np.abs(u).max()
    if np.any(u < -1e-12 * scale):
        raise SignChangeError(f"kernel vector changes sign (min {u.min():.3e}, max {u.max():.3e})")
    return _profile(op, u, mass, "kernel")


def _split_blocks(op: CoupledOperator):
    """Block-diagonal part (per species) and the remaining cross-species part of L."""
    mat = op.matrix.tocoo()
    owner = np.empty(op.n, dtype=int)
    for k, b in enumerate(op.layout.blocks):
        owner[b.slice] = k
    same = owner[mat.row] == owner[mat.col]
    diag = sp.csr_matrix((mat.data[same], (mat.row[same], mat.col[same])), shape=mat.shape)
    cross = sp.csr_matrix((mat.data[~same], (mat.row[~same], mat.col[~same])), shape=mat.shape)
    return diag, cross


def equilibrium_picard_lgl(
    spec: ModelSpec,
    mesh: CompartmentMesh,
    mass: float,
    tol: float = 1e-11,
    max_iter: int = 20000,
    initial: np.ndarray | None = None,
    relax: float = 0.5,
) -> EquilibriumProfile:
    """Damped fixed-point sweep over the four decoupled species problems.

    Each sweep solves ``-B u_new = C u_old`` where ``B`` holds every species'
    own diffusion and loss terms and ``C`` the exchange gains, then mixes with
    the previous iterate and rescales to ``mass``. Without damping the map can
    cycle (its spectrum touches the unit circle away from 1).
    """
    if spec.model_kind != "lgl":
        raise ValidationError("equilibrium_picard_lgl needs an lgl model")
    op = assemble(spec, mesh)
    return _picard(op, mass, tol, max_iter, initial, relax, "picard_lgl")


def _rescale(op: CoupledOperator, u: np.ndarray, mass: float) -> np.ndarray:
    total = op.total_mass(u)
    if not total > 0 or not np.isfinite(total):
        raise ZeroMassError("iterate has zero total mass; cannot renormalise")
    return u * (mass / total)


def _picard(op, mass, tol, max_iter, initial, relax, method):
    diag, cross = _split_blocks(op)
    lu = spla.splu((-diag).tocsc())
    u = np.ones(op.n) if initial is None else op.layout.check(initial).copy()
    u = _rescale(op, u, mass)
    weight = np.sqrt(op.mass)
    for it in range(1, max_iter + 1):
        new = _rescale(op, lu.solve(cross @ u), mass)
        new = (1 - relax) * u + relax * new
        change = np.linalg.norm(weight * (new - u)) / np.linalg.norm(weight * new)
        u = new
        if change < tol:
            return _profile(op, u, mass, method, it)
    raise NoConvergence(f"{method}: no convergence in {max_iter} sweeps (last change {change:.3e})")


def equilibrium_jak_closed_form_ode(rates, nuc_length: float, i0: float, i1: float) -> np.ndarray:
    """Nuclear values ``(u2, ..., u7)`` from the boundary integrals of u0 and u1 over the nuclear boundary."""
    r = rates
    tail = r["r_imp2"] * i1 / (r["r_delay"] * nuc_length)
    u2 = r["r_imp2"] * i1 / (r["r_exp"] * nuc_length) + r["r_imp"] * i0 / (r["r_exp"] * nuc_length)
    return np.array([u2, tail, tail, tail, tail, tail])


def jak_reduced_mass(rates, nuc_area: float, nuc_length: float, vol_total: float, i0: float, i1: float) -> float:
    """Total mass from the cytoplasmic integral and the two nuclear boundary integrals.

    ``vol_total`` is the integral of u0 + u1 over the cytoplasm.
    """
    r = rates
    c0 = r["r_imp"] / (r["r_exp"] * nuc_length)
    c1 = r["r_imp2"] / (r["r_exp"] * nuc_length) + 5 * r["r_imp2"] / (r["r_delay"] * nuc_length)
    return vol_total + nuc_area * (c0 * i0 + c1 * i1)


def boundary_integrals(op: CoupledOperator, u: np.ndarray) -> tuple[float, float]:
    nuc = op.mesh.surface("nuc")
    u0, u1 = u[op.layout["u0"]], u[op.layout["u1"]]
    return float(nuc.lengths @ u0[nuc.adjacent_cell]), float(nuc.lengths @ u1[nuc.adjacent_cell])


def equilibrium_picard_jak(
    spec: ModelSpec,
    mesh: CompartmentMesh,
    mass: float,
    tol: float = 1e-11,
    max_iter: int = 20000,
    initial: np.ndarray | None = None,
    relax: float = 0.5,
) -> EquilibriumProfile:
    """Fixed point on the cytoplasmic pair with the nuclear values eliminated.

    The nuclear source into u0 is replaced by the closed-form export flux
    ``r_exp * u2``, so each sweep solves two decoupled elliptic problems with
    nonlocal frozen sources. The pair is rescaled to the reduced mass
    constraint, then the six nuclear values follow in closed form.
    """
    if spec.model_kind != "jak":
        raise ValidationError("equilibrium_picard_jak needs a jak model")
    op = assemble(spec, mesh)
    r = spec.rates
    lay = op.layout
    nc = mesh.n_cells
    nuc, cyt = mesh.surface("nuc"), mesh.surface("cyt")
    s0, s1 = lay["u0"], lay["u1"]
    mat = op.matrix.tocsr()
    a00 = mat[s0, s0].tocsc()
    a11 = mat[s1, s1].tocsc()
    lu0, lu1 = spla.splu(-a00), spla.splu(-a11)
    act = np.zeros(nc)
    np.add.at(act, cyt.adjacent_cell, r["r_act"] * r["p_jak"] / cyt.total_length * cyt.lengths)
    spread = np.zeros(nc)
    np.add.at(spread, nuc.adjacent_cell, nuc.lengths / nuc.total_length)
    nuc_area, nuc_len = op.constants["nuc_area"], op.constants["nuc_length"]
    areas = mesh.areas

    def integrals(v0, v1):
        return float(nuc.lengths @ v0[nuc.adjacent_cell]), float(nuc.lengths @ v1[nuc.adjacent_cell])

    def rescale(v0, v1):
        i0, i1 = integrals(v0, v1)
        total = jak_reduced_mass(r, nuc_area, nuc_len, float(areas @ (v0 + v1)), i0, i1)
        if not total > 0:
            raise ZeroMassError("iterate has zero reduced mass; cannot renormalise")
        f = mass / total
        return v0 * f, v1 * f

    if initial is None:
        v0, v1 = np.ones(nc), np.ones(nc)
    else:
        init = lay.check(initial)
        v0, v1 = init[s0].copy(), init[s1].copy()
    v0, v1 = rescale(v0, v1)
    weight = np.sqrt(areas)
    for it in range(1, max_iter + 1):
        i0, i1 = integrals(v0, v1)
        export = (r["r_imp2"] * i1 + r["r_imp"] * i0) / nuc_len
        n0 = lu0.solve(export * spread)
        n1 = lu1.solve(act * v0)
        n0, n1 = rescale(n0, n1)
        n0 = (1 - relax) * v0 + relax * n0
        n1 = (1 - relax) * v1 + relax * n1
        change = np.sqrt(np.sum((weight * (n0 - v0)) ** 2) + np.sum((weight * (n1 - v1)) ** 2))
        change /= np.sqrt(np.sum((weight * n0) ** 2) + np.sum((weight * n1) ** 2))
        v0, v1 = n0, n1
        if change < tol:
            break
    else:
        raise NoConvergence(f"picard_jak: no convergence in {max_iter} sweeps (last change {change:.3e})")
    i0, i1 = integrals(v0, v1)
    u = np.concatenate([v0, v1, equilibrium_jak_closed_form_ode(r, nuc_len, i0, i1)])
    return _profile(op, u, mass, "picard_jak", it)


def weighted_distance(op: CoupledOperator, a: np.ndarray, b: np.ndarray) -> float:
    """Mass-weighted L2 distance between two states."""
    return float(np.sqrt(op.mass @ (a - b) ** 2))


def species_names(layout: StateLayout) -> list[str]:
    return [b.species for b in layout.blocks]


__all__ = [
    "EquilibriumProfile",
    "equilibrium_kernel",
    "equilibrium_picard_lgl",
    "equilibrium_picard_jak",
    "equilibrium_jak_closed_form_ode",
    "jak_reduced_mass",
    "boundary_integrals",
    "terminal_components",
    "weighted_distance",
    "JAK_ODE",
]
