"""Finite-volume assembly of the coupled volume/surface/ODE operator.

Every model is written as a list of directed *couplings*: a coupling moves
mass from degree of freedom ``src`` to ``dst`` at rate ``rate * u[src]``
(rate in mass units, i.e. already multiplied by the cell area, segment
length or exchange length). The semi-discrete system is ``M u' = L u`` with

    L[dst, src] += rate,   L[src, src] -= rate.

Built this way, ``L`` has zero column sums (discrete mass conservation) and
nonnegative off-diagonals (Metzler) by construction. Diffusion is a
symmetric coupling across each face with rate ``d * transmissibility``.

The couplings are kept on the operator: the entropy module sums its
dissipation terms over them, one labelled group per physical term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import GeometryMismatch, InvalidNetwork, LayoutMismatch, NonConservative, ValidationError
from .geometry import CompartmentMesh
from .network import ReactionNetwork

LGL_RATES = ("alpha", "beta", "gamma", "lam", "sigma", "xi")
LGL_DIFFUSION = ("d_L", "d_P", "d_l", "d_p")
JAK_RATES = ("r_act", "p_jak", "r_imp", "r_exp", "r_imp2", "r_delay")
JAK_ODE = ("u2", "u3", "u4", "u5", "u6", "u7")

MESH_FOR_MODEL = {"lgl": ("disk",), "jak": ("annulus",), "generic": ("interval", "disk", "annulus")}


@dataclass(frozen=True)
class ModelSpec:
    """Model kind with its rate constants and diffusion coefficients.

    lgl: rates ``alpha, beta, gamma, lam, sigma, xi``; diffusion
    ``d_L, d_P, d_l, d_p``. jak: rates ``r_act, p_jak, r_imp, r_exp, r_imp2,
    r_delay``; diffusion ``D`` or the pair ``D0, D1``. generic: a
    ``ReactionNetwork`` and one diffusion coefficient per species.
    """

    model_kind: str
    rates: Mapping[str, float] = field(default_factory=dict)
    diffusion: Mapping[str, float] = field(default_factory=dict)
    network: ReactionNetwork | None = None

    def __post_init__(self):
        kind = self.model_kind
        rates = {k: float(v) for k, v in self.rates.items()}
        diff = {k: float(v) for k, v in self.diffusion.items()}
        if kind == "lgl":
            _require(rates, LGL_RATES, "rate")
            _require(diff, LGL_DIFFUSION, "diffusion coefficient")
        elif kind == "jak":
            _require(rates, JAK_RATES, "rate")
            if "D" in diff:
                diff.setdefault("D0", diff["D"])
                diff.setdefault("D1", diff["D"])
            _require(diff, ("D0", "D1"), "diffusion coefficient")
        elif kind == "generic":
            if self.network is None:
                raise ValidationError("generic model needs a reaction network")
            names = self.network.species
            if set(diff) != set(names):
                raise ValidationError(f"generic diffusion must list exactly the species {names}")
            if any(v < 0 for v in diff.values()) or not any(v > 0 for v in diff.values()):
                raise ValidationError("generic diffusion must be >= 0 with at least one positive entry")
        else:
            raise ValidationError(f"unknown model kind {kind!r}")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "diffusion", diff)

    def scaled_diffusion(self, factor: float) -> "ModelSpec":
        return ModelSpec(self.model_kind, self.rates, {k: v * factor for k, v in self.diffusion.items()}, self.network)

    def with_rates(self, **changes: float) -> "ModelSpec":
        return ModelSpec(self.model_kind, {**self.rates, **changes}, self.diffusion, self.network)

    @property
    def species(self) -> tuple[str, ...]:
        if self.model_kind == "lgl":
            return ("L", "P", "l", "p")
        if self.model_kind == "jak":
            return ("u0", "u1") + JAK_ODE
        return self.network.species


def _require(values: dict, names: tuple, what: str) -> None:
    missing = [n for n in names if n not in values]
    if missing:
        raise ValidationError(f"missing {what}(s): {missing}")
    bad = [n for n in names if not values[n] > 0]
    if bad:
        raise ValidationError(f"{what}(s) must be positive: {bad}")


@dataclass(frozen=True)
class Block:
    species: str
    compartment: str
    start: int
    size: int

    @property
    def slice(self) -> slice:
        return slice(self.start, self.start + self.size)


@dataclass(frozen=True)
class StateLayout:
    """Map from (species, compartment) to offsets in the flat state."""

    blocks: tuple[Block, ...]

    @property
    def n(self) -> int:
        return sum(b.size for b in self.blocks)

    def block(self, species: str) -> Block:
        for b in self.blocks:
            if b.species == species:
                return b
        raise LayoutMismatch(f"no species {species!r} in layout")

    def __getitem__(self, species: str) -> slice:
        return self.block(species).slice

    def split(self, u: np.ndarray) -> dict[str, np.ndarray]:
        return {b.species: u[b.slice] for b in self.blocks}

    def check(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n,):
            raise LayoutMismatch(f"state has shape {u.shape}, layout expects ({self.n},)")
        return u


@dataclass(frozen=True)
class Coupling:
    """Directed transfers ``src -> dst`` with mass-unit rates.

    ``symmetric`` marks diffusion groups, where every listed edge also runs
    backwards with the same rate.
    """

    label: str
    src: np.ndarray
    dst: np.ndarray
    rate: np.ndarray
    symmetric: bool = False

    def directed(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.symmetric:
            return self.src, self.dst, self.rate
        return (
            np.concatenate([self.src, self.dst]),
            np.concatenate([self.dst, self.src]),
            np.concatenate([self.rate, self.rate]),
        )


@dataclass(frozen=True)
class CoupledOperator:
    spec: ModelSpec
    mesh: CompartmentMesh
    layout: StateLayout
    mass: np.ndarray  # diagonal of M
    matrix: sp.csr_matrix
    couplings: tuple[Coupling, ...]
    constants: dict = field(default_factory=dict)  # geometric normalisations used

    @property
    def n(self) -> int:
        return self.layout.n

    def total_mass(self, u: np.ndarray) -> float:
        return float(self.mass @ u)

    def dump_matrix_market(self, path) -> None:
        scipy.io.mmwrite(str(path), self.matrix, comment="vsrd coupled operator L (M du/dt = L u)")


def _diffusion(label, n_offset, pairs, trans, d):
    return Coupling(label, pairs[:, 0] + n_offset, pairs[:, 1] + n_offset, d * trans, symmetric=True)


def _layout(entries):
    blocks, start = [], 0
    for species, comp, size in entries:
        blocks.append(Block(species, comp, start, size))
        start += size
    return StateLayout(tuple(blocks))


def _lgl(spec: ModelSpec, mesh: CompartmentMesh):
    r, d = spec.rates, spec.diffusion
    gamma, gamma2 = mesh.surface("gamma"), mesh.surface("gamma2")
    nc = mesh.n_cells
    layout = _layout([("L", "omega", nc), ("P", "omega", nc), ("l", "gamma", gamma.n), ("p", "gamma2", gamma2.n)])
    oL, oP, ol, op = (layout.block(s).start for s in ("L", "P", "l", "p"))
    cells = np.arange(nc)
    seg = np.arange(gamma.n)
    seg2 = np.arange(gamma2.n)
    adj2 = gamma2.adjacent_cell
    couplings = [
        _diffusion("grad_L", oL, mesh.faces, mesh.face_trans, d["d_L"]),
        _diffusion("grad_P", oP, mesh.faces, mesh.face_trans, d["d_P"]),
        _diffusion("grad_l", ol, gamma.edges, gamma.edge_trans, d["d_l"]),
        _diffusion("grad_p", op, gamma2.edges, gamma2.edge_trans, d["d_p"]),
        Coupling("L->P", oL + cells, oP + cells, r["beta"] * mesh.areas),
        Coupling("P->L", oP + cells, oL + cells, r["alpha"] * mesh.areas),
        Coupling("L->l", oL + gamma.adjacent_cell, ol + seg, r["lam"] * gamma.coupling),
        Coupling("l->L", ol + seg, oL + gamma.adjacent_cell, r["gamma"] * gamma.coupling),
        Coupling("l->p", ol + gamma2.parent_index, op + seg2, r["sigma"] * gamma2.coupling),
        Coupling("p->P", op + seg2, oP + adj2, r["xi"] * gamma2.coupling),
    ]
    mass = np.concatenate([mesh.areas, mesh.areas, gamma.lengths, gamma2.lengths])
    return layout, mass, couplings, {}


def _jak(spec: ModelSpec, mesh: CompartmentMesh):
    r, d = spec.rates, spec.diffusion
    cyt, nuc = mesh.surface("cyt"), mesh.surface("nuc")
    nc = mesh.n_cells
    layout = _layout([("u0", "cyt", nc), ("u1", "cyt", nc)] + [(s, "nucleus", 1) for s in JAK_ODE])
    o0, o1 = layout.block("u0").start, layout.block("u1").start
    ode = {s: layout.block(s).start for s in JAK_ODE}
    nuc_area = np.pi * mesh.spec.radii[0] ** 2
    len_cyt, len_nuc = cyt.total_length, nuc.total_length
    ones = np.ones(nuc.n, dtype=int)
    one = np.array([1.0])
    delay = r["r_delay"]
    couplings = [
        _diffusion("grad_u0", o0, mesh.faces, mesh.face_trans, d["D0"]),
        _diffusion("grad_u1", o1, mesh.faces, mesh.face_trans, d["D1"]),
        Coupling("u0->u1", o0 + cyt.adjacent_cell, o1 + cyt.adjacent_cell, r["r_act"] * r["p_jak"] / len_cyt * cyt.coupling),
        Coupling("u0->u2", o0 + nuc.adjacent_cell, ode["u2"] * ones, r["r_imp"] / len_nuc * nuc.coupling),
        Coupling("u2->u0", ode["u2"] * ones, o0 + nuc.adjacent_cell, r["r_exp"] / len_nuc * nuc.coupling),
        Coupling("u1->u3", o1 + nuc.adjacent_cell, ode["u3"] * ones, r["r_imp2"] / len_nuc * nuc.coupling),
    ]
    chain = ["u3", "u4", "u5", "u6", "u7", "u2"]
    for a, b in zip(chain[:-1], chain[1:]):
        couplings.append(Coupling(f"{a}->{b}", np.array([ode[a]]), np.array([ode[b]]), delay * one))
    mass = np.concatenate([mesh.areas, mesh.areas, np.full(len(JAK_ODE), nuc_area)])
    consts = {"nuc_area": nuc_area, "cyt_length": len_cyt, "nuc_length": len_nuc}
    return layout, mass, couplings, consts


def _generic(spec: ModelSpec, mesh: CompartmentMesh):
    net = spec.network
    nc = mesh.n_cells
    layout = _layout([(s, "omega", nc) for s in net.species])
    offs = [b.start for b in layout.blocks]
    cells = np.arange(nc)
    couplings = []
    for name, o in zip(net.species, offs):
        dcoef = spec.diffusion[name]
        if dcoef > 0:
            couplings.append(_diffusion(f"grad_{name}", o, mesh.faces, mesh.face_trans, dcoef))
    a = net.offdiagonal()
    for i, j in zip(*np.nonzero(a)):
        couplings.append(
            Coupling(f"{net.species[j]}->{net.species[i]}", offs[j] + cells, offs[i] + cells, a[i, j] * mesh.areas)
        )
    mass = np.tile(mesh.areas, net.n_species)
    return layout, mass, couplings, {}


def coupling_matrix(n: int, couplings) -> sp.csr_matrix:
    srcs, dsts, rates = [], [], []
    for c in couplings:
        s, t, k = c.directed()
        srcs.append(s)
        dsts.append(t)
        rates.append(k)
    src = np.concatenate(srcs) if srcs else np.zeros(0, int)
    dst = np.concatenate(dsts) if dsts else np.zeros(0, int)
    rate = np.concatenate(rates) if rates else np.zeros(0)
    off = sp.csr_matrix((rate, (dst, src)), shape=(n, n))
    diag = -np.asarray(off.sum(axis=0)).ravel()
    return (off + sp.diags(diag)).tocsr()


def assemble(spec: ModelSpec, mesh: CompartmentMesh) -> CoupledOperator:
    """Assemble ``M`` and ``L`` for a model on a mesh."""
    allowed = MESH_FOR_MODEL[spec.model_kind]
    if mesh.kind not in allowed:
        raise GeometryMismatch(f"{spec.model_kind} model needs a {' or '.join(allowed)} mesh, got {mesh.kind}")
    builder = {"lgl": _lgl, "jak": _jak, "generic": _generic}[spec.model_kind]
    layout, mass, couplings, consts = builder(spec, mesh)
    mat = coupling_matrix(layout.n, couplings)
    colsum = np.abs(np.asarray(mat.sum(axis=0)).ravel())
    scale = abs(mat).max() if mat.nnz else 1.0
    if colsum.max(initial=0.0) > 1e-13 * scale:
        raise NonConservative(f"column sums up to {colsum.max():.3e}")
    return CoupledOperator(spec, mesh, layout, mass, mat, tuple(couplings), consts)


def apply(op: CoupledOperator, u: np.ndarray) -> np.ndarray:
    """Time derivative ``M^{-1} L u``."""
    u = op.layout.check(u)
    return (op.matrix @ u) / op.mass


def lgl_network(rates: Mapping[str, float]) -> ReactionNetwork:
    """The four-species Lgl reaction graph (species L, P, l, p) with its raw rates."""
    a = np.zeros((4, 4))
    L, P, l, p = range(4)
    a[P, L] = rates["beta"]
    a[L, P] = rates["alpha"]
    a[l, L] = rates["lam"]
    a[L, l] = rates["gamma"]
    a[p, l] = rates["sigma"]
    a[P, p] = rates["xi"]
    return ReactionNetwork(a, ("L", "P", "l", "p"))


def jak_network(rates: Mapping[str, float]) -> ReactionNetwork:
    """The eight-species JAK2/STAT5 reaction graph with its raw rates."""
    a = np.zeros((8, 8))
    a[1, 0] = rates["r_act"] * rates["p_jak"]
    a[2, 0] = rates["r_imp"]
    a[0, 2] = rates["r_exp"]
    a[3, 1] = rates["r_imp2"]
    for i in (3, 4, 5, 6):
        a[i + 1, i] = rates["r_delay"]
    a[2, 7] = rates["r_delay"]
    return ReactionNetwork(a, ("u0", "u1") + JAK_ODE)


def generic_spec(rates, diffusion, species=None) -> ModelSpec:
    """Convenience constructor for the single-domain model."""
    try:
        net = ReactionNetwork(np.asarray(rates, dtype=float), tuple(species or ()))
    except InvalidNetwork:
        raise
    diff = np.broadcast_to(np.asarray(diffusion, dtype=float), (net.n_species,))
    return ModelSpec("generic", {}, dict(zip(net.species, diff.tolist())), net)
