import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla
import sympy as sy
from hypothesis import given
from hypothesis import strategies as st

from conftest import JAK_RATES, LGL_DIFF, LGL_RATES, annulus_mesh, disk_mesh
from vsrd.discretization import ModelSpec, apply, assemble, generic_spec
from vsrd.errors import GeometryMismatch, LayoutMismatch, ValidationError
from vsrd.geometry import GeometrySpec, build_mesh

positive = st.floats(0.05, 10.0)


@st.composite
def lgl_specs(draw):
    rates = {k: draw(positive) for k in LGL_RATES}
    diff = {k: draw(positive) for k in LGL_DIFF}
    return ModelSpec("lgl", rates, diff)


@st.composite
def jak_specs(draw):
    rates = {k: draw(positive) for k in JAK_RATES}
    return ModelSpec("jak", rates, dict(D0=draw(positive), D1=draw(positive)))


def check_structure(op):
    a = op.matrix.toarray()
    scale = np.abs(a).max()
    assert np.abs(a.sum(axis=0)).max() <= 1e-13 * scale  # conservative
    off = a - np.diag(np.diag(a))
    assert off.min() >= 0  # Metzler
    assert np.all(op.mass > 0)


@given(lgl_specs())
def test_lgl_structure(spec):
    check_structure(assemble(spec, disk_mesh(4, 8)))


@given(jak_specs())
def test_jak_structure(spec):
    check_structure(assemble(spec, annulus_mesh(4, 8)))


def test_spec_validation():
    with pytest.raises(ValidationError):
        ModelSpec("lgl", {**LGL_RATES, "alpha": 0.0}, LGL_DIFF)
    with pytest.raises(ValidationError):
        ModelSpec("lgl", {k: v for k, v in LGL_RATES.items() if k != "xi"}, LGL_DIFF)
    with pytest.raises(ValidationError):
        ModelSpec("brusselator")
    with pytest.raises(ValidationError):
        ModelSpec("generic")
    assert ModelSpec("jak", JAK_RATES, dict(D=2.0)).diffusion == {"D": 2.0, "D0": 2.0, "D1": 2.0}


def test_geometry_mismatch():
    with pytest.raises(GeometryMismatch):
        assemble(ModelSpec("lgl", LGL_RATES, LGL_DIFF), annulus_mesh(4, 8))
    with pytest.raises(GeometryMismatch):
        assemble(ModelSpec("jak", JAK_RATES, dict(D=1.0)), disk_mesh(4, 8))


def test_layout_and_apply_examples(lgl_op):
    with pytest.raises(LayoutMismatch):
        apply(lgl_op, np.ones(lgl_op.n + 1))
    assert np.array_equal(apply(lgl_op, np.zeros(lgl_op.n)), np.zeros(lgl_op.n))
    mesh = lgl_op.mesh
    assert lgl_op.layout.n == 2 * mesh.n_cells + mesh.surface("gamma").n + mesh.surface("gamma2").n
    parts = lgl_op.layout.split(np.arange(lgl_op.n, dtype=float))
    assert list(parts) == ["L", "P", "l", "p"]


def test_apply_vanishes_at_kernel(lgl_op, lgl_eq, jak_op, jak_eq):
    for op, eq in ((lgl_op, lgl_eq), (jak_op, jak_eq)):
        du = apply(op, eq.state)
        assert np.abs(du).max() <= 1e-10 * np.abs(eq.state).max() * np.abs(op.matrix).max()


@given(st.integers(0, 10_000))
def test_mass_rate_zero(seed):
    rng = np.random.default_rng(seed)
    for op in (assemble(ModelSpec("lgl", LGL_RATES, LGL_DIFF), disk_mesh(4, 8)),
               assemble(ModelSpec("jak", JAK_RATES, dict(D=1.0)), annulus_mesh(4, 8))):
        u = rng.uniform(0, 1, op.n)
        assert abs(op.mass @ apply(op, u)) <= 1e-12 * (op.mass @ u) * np.abs(op.matrix).max()


def test_generic_without_reactions_is_neumann_laplacian():
    mesh = disk_mesh(6, 12)
    op = assemble(generic_spec(np.zeros((1, 1)), [1.0]), mesh)
    assert np.abs(op.matrix @ np.ones(op.n)).max() < 1e-12
    a = op.matrix.toarray()
    assert np.allclose(a, a.T)  # symmetric diffusion on a single species
    assert np.linalg.eigvalsh(a).max() < 1e-12


def test_generic_disconnected_species_two_constants():
    op = assemble(generic_spec(np.zeros((2, 2)), [1.0, 2.0]), disk_mesh(4, 8))
    u = np.concatenate([np.full(32, 3.0), np.full(32, 5.0)])
    assert np.abs(op.matrix @ u).max() < 1e-12


def test_jak_u2_row_hand_expansion():
    """|N| u2' = -r_exp u2 + r_delay u7 + r_imp / |dN| * sum_s h_s u0(s), N the nucleus."""
    r = dict(r_act=1.3, p_jak=0.7, r_imp=2.1, r_exp=0.9, r_imp2=1.7, r_delay=3.1)
    mesh = annulus_mesh(4, 4, radii=(0.5, 1.0))
    op = assemble(ModelSpec("jak", r, dict(D=1.0)), mesh)
    rng = np.random.default_rng(3)
    u = rng.uniform(0.1, 1.0, op.n)
    nuc = mesh.surface("nuc")
    u0 = u[op.layout["u0"]]
    area = np.pi * 0.5**2
    length = 2 * np.pi * 0.5
    boundary = sum(nuc.lengths[k] * u0[nuc.adjacent_cell[k]] for k in range(4))
    expected = (-r["r_exp"] * u[op.layout["u2"]][0] + r["r_delay"] * u[op.layout["u7"]][0]) / area
    expected += r["r_imp"] * boundary / (area * length)
    assert apply(op, u)[op.layout["u2"]][0] == pytest.approx(expected, rel=1e-13)
    # and the chain u3 -> ... -> u7 is a plain delay
    assert apply(op, u)[op.layout["u4"]][0] == pytest.approx(
        r["r_delay"] / area * (u[op.layout["u3"]][0] - u[op.layout["u4"]][0]), rel=1e-13
    )


def test_lgl_membrane_row_hand_expansion():
    """l' on a segment off the arc: d_l (surface Laplacian) + lam L(adj) - gamma l."""
    op = assemble(ModelSpec("lgl", LGL_RATES, {**LGL_DIFF, "d_l": 0.7}), disk_mesh(4, 16))
    mesh = op.mesh
    g = mesh.surface("gamma")
    rng = np.random.default_rng(5)
    u = rng.uniform(0.1, 1.0, op.n)
    l, L = u[op.layout["l"]], u[op.layout["L"]]
    k = 8  # segment outside gamma2
    h = g.lengths[k]
    lap = (l[k - 1] - 2 * l[k] + l[k + 1]) / h**2
    expected = 0.7 * lap + LGL_RATES["lam"] * L[g.adjacent_cell[k]] - LGL_RATES["gamma"] * l[k]
    assert apply(op, u)[op.layout["l"]][k] == pytest.approx(expected, rel=1e-12)


def test_matrix_market_roundtrip(tmp_path, jak_op):
    path = tmp_path / "op.mtx"
    jak_op.dump_matrix_market(path)
    back = scipy.io.mmread(str(path))
    assert abs(back - jak_op.matrix).max() < 1e-15


def _manufactured():
    r, th = sy.symbols("r theta", positive=True)
    u = sy.cos(sy.pi * r**2) + r * sy.cos(th) * (3 - r**2)
    lap = sy.diff(r * sy.diff(u, r), r) / r + sy.diff(u, th, 2) / r**2
    return sy.lambdify((r, th), u, "numpy"), sy.lambdify((r, th), sy.simplify(u - lap), "numpy")


def test_manufactured_solution_order():
    """u - Laplace(u) = f with zero-flux boundary on the disk converges at order >= 1.5."""
    exact, rhs = _manufactured()
    errs = []
    for n in (8, 16, 32):
        mesh = build_mesh(GeometrySpec("disk", (1.0,), 0.25, (n, 2 * n)))
        op = assemble(generic_spec(np.zeros((1, 1)), [1.0]), mesh)
        a = (sp.diags(op.mass) - op.matrix).tocsc()
        u = spla.spsolve(a, op.mass * rhs(mesh.r, mesh.theta))
        errs.append(np.sqrt(op.mass @ (u - exact(mesh.r, mesh.theta)) ** 2))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders >= 1.5), orders
