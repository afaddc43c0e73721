"""Shared fixtures: small meshes and operators, plus the acceptance summary."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vsrd.discretization import ModelSpec, assemble, generic_spec
from vsrd.equilibrium import equilibrium_kernel
from vsrd.geometry import GeometrySpec, build_mesh

settings.register_profile(
    "vsrd", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture]
)
settings.load_profile("vsrd")

LGL_RATES = dict(alpha=1.0, beta=2.0, gamma=1.0, lam=1.0, sigma=1.0, xi=1.0)
LGL_DIFF = dict(d_L=1.0, d_P=1.0, d_l=1.0, d_p=1.0)
JAK_RATES = dict(r_act=1.0, p_jak=1.0, r_imp=1.0, r_exp=1.0, r_imp2=1.0, r_delay=1.0)

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def record_criterion(number: int, name: str, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (name, bool(passed), detail)
    print(f"CRITERION {number} {name}: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"CRITERION {k} {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def disk_mesh(n_r=8, n_t=16, fraction=0.25, radius=1.0):
    return build_mesh(GeometrySpec("disk", (radius,), fraction, (n_r, n_t)))


def annulus_mesh(n_r=8, n_t=16, radii=(0.5, 1.0)):
    return build_mesh(GeometrySpec("annulus", radii, resolution=(n_r, n_t)))


@pytest.fixture(scope="session")
def lgl_op():
    return assemble(ModelSpec("lgl", LGL_RATES, LGL_DIFF), disk_mesh())


@pytest.fixture(scope="session")
def jak_op():
    return assemble(ModelSpec("jak", JAK_RATES, dict(D=1.0)), annulus_mesh())


@pytest.fixture(scope="session")
def generic_op():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    return assemble(generic_spec(a, [0.5, 0.5]), disk_mesh())


@pytest.fixture(scope="session")
def lgl_eq(lgl_op):
    return equilibrium_kernel(lgl_op, 3.0)


@pytest.fixture(scope="session")
def jak_eq(jak_op):
    return equilibrium_kernel(jak_op, 2.0)


@pytest.fixture(scope="session")
def generic_eq(generic_op):
    return equilibrium_kernel(generic_op, 2.0)


def mass_correct_random(op, rng, mass):
    u = rng.uniform(0.0, 2.0, op.n)
    return u * (mass / op.total_mass(u))
