"""End-to-end acceptance criteria 1-8.

Each test records one PASS/FAIL line (printed in the terminal summary) before
asserting, so a failing criterion still reports its measured numbers.
"""

import time

import numpy as np
import pytest

from conftest import JAK_RATES, LGL_DIFF, LGL_RATES, annulus_mesh, disk_mesh, mass_correct_random, record_criterion
from vsrd.certifier import certify, exact_eed_constant, spectral_gap, volume_part, weighted_poincare
from vsrd.discretization import ModelSpec, assemble, generic_spec
from vsrd.entropy import entropy_dissipation, fit_decay_rate, relative_entropy
from vsrd.equilibrium import (
    boundary_integrals,
    equilibrium_jak_closed_form_ode,
    equilibrium_kernel,
    equilibrium_picard_jak,
    equilibrium_picard_lgl,
    weighted_distance,
)
from vsrd.network import ReactionNetwork, gap_constant_constructive, gap_constant_optimal, quadratic_form
from vsrd.timestepper import Stepper, TimeSpec, run

pytestmark = pytest.mark.acceptance

# parameter sets fixed before any acceptance run
LGL_SETS = [
    (LGL_RATES, LGL_DIFF),
    (dict(alpha=0.5, beta=1.0, gamma=2.0, lam=0.5, sigma=3.0, xi=0.5), dict(d_L=0.5, d_P=2.0, d_l=0.3, d_p=1.0)),
    (dict(alpha=3.0, beta=0.5, gamma=0.3, lam=2.0, sigma=0.5, xi=4.0), dict(d_L=2.0, d_P=0.2, d_l=1.0, d_p=0.1)),
]
JAK_SETS = [
    (JAK_RATES, dict(D=1.0)),
    (dict(r_act=2.0, p_jak=0.5, r_imp=0.3, r_exp=2.0, r_imp2=0.7, r_delay=0.5), dict(D=0.3)),
    (dict(r_act=0.4, p_jak=3.0, r_imp=2.0, r_exp=0.5, r_imp2=2.0, r_delay=3.0), dict(D0=3.0, D1=1.5)),
]


def lgl(rates=LGL_RATES, diff=LGL_DIFF, n=(16, 32)):
    return assemble(ModelSpec("lgl", rates, diff), disk_mesh(*n))


def jak(rates=JAK_RATES, diff=dict(D=1.0), n=(16, 32)):
    return assemble(ModelSpec("jak", rates, diff), annulus_mesh(*n))


def test_criterion_1_mass_conservation():
    details, ok = [], True
    for name, op, dt in (("lgl", lgl(n=(32, 32)), 0.01), ("jak", jak(n=(32, 32)), 0.02)):
        u0 = mass_correct_random(op, np.random.default_rng(1), 5.0)
        m0 = op.total_mass(u0)
        drift = [0.0]

        def track(t, u):
            drift[0] = max(drift[0], abs(op.total_mass(u) / m0 - 1))

        start = time.perf_counter()
        traj = run(op, u0, TimeSpec(10_000 * dt, dt, output_every=1), callback=track)
        wall = time.perf_counter() - start
        steps = len(traj.times) - 1
        ok &= steps == 10_000 and drift[0] <= 1e-10 and wall <= 60
        details.append(f"{name}: {steps} steps, drift {drift[0]:.1e}, {wall:.1f} s")
    record_criterion(1, "mass conservation", ok, "; ".join(details))
    assert ok


def _identity_residual(op, eq, u, dt):
    v = Stepper(op, dt)(u)
    return abs((relative_entropy(op, v, eq) - relative_entropy(op, u, eq)) / dt + entropy_dissipation(op, v, eq))


def test_criterion_2_entropy_identity():
    details, ok = [], True
    for name, op in (("lgl", lgl()), ("jak", jak())):
        eq = equilibrium_kernel(op, 4.0)
        u = mass_correct_random(op, np.random.default_rng(2), 4.0)
        traj = run(op, u, TimeSpec(20.0, 0.01, output_every=1))
        e = np.array([relative_entropy(op, s, eq) for s in traj.states])
        active = e > 1e-13 * e[0]  # below this the differences are round-off
        decreasing = bool(np.all(np.diff(e[active]) < 0))
        # identity measured on the trajectory at t = 0.5, where it is smooth
        u_mid = traj.states[50]
        res = [_identity_residual(op, eq, u_mid, dt) for dt in (4e-3, 2e-3, 1e-3)]
        ratios = [res[0] / res[1], res[1] / res[2]]
        good = decreasing and all(abs(r - 2.0) <= 0.3 for r in ratios)
        ok &= good
        details.append(f"{name}: decreasing={decreasing} over {int(active.sum())} samples, "
                       f"halving ratios {ratios[0]:.3f}, {ratios[1]:.3f}")
    record_criterion(2, "entropy monotonicity and dissipation identity", ok, "; ".join(details))
    assert ok


def test_criterion_3_equilibrium_cross_validation():
    worst_dist, worst_ode, positive = 0.0, 0.0, True
    for rates, diff in LGL_SETS:
        spec = ModelSpec("lgl", rates, diff)
        op = assemble(spec, disk_mesh(16, 32))
        k = equilibrium_kernel(op, 4.0)
        p = equilibrium_picard_lgl(spec, op.mesh, 4.0)
        worst_dist = max(worst_dist, weighted_distance(op, k.state, p.state))
        positive &= bool(k.state.min() > 0 and p.state.min() > 0)
    for rates, diff in JAK_SETS:
        spec = ModelSpec("jak", rates, diff)
        op = assemble(spec, annulus_mesh(16, 32))
        k = equilibrium_kernel(op, 4.0)
        p = equilibrium_picard_jak(spec, op.mesh, 4.0)
        worst_dist = max(worst_dist, weighted_distance(op, k.state, p.state))
        positive &= bool(k.state.min() > 0 and p.state.min() > 0)
        i0, i1 = boundary_integrals(op, k.state)
        closed = equilibrium_jak_closed_form_ode(rates, op.constants["nuc_length"], i0, i1)
        ode = k.state[op.layout["u2"].start:]
        worst_ode = max(worst_ode, float(np.max(np.abs(ode / closed - 1))))
    ok = worst_dist <= 1e-8 and positive and worst_ode <= 1e-12
    record_criterion(3, "equilibrium cross-validation", ok,
                     f"max kernel-Picard distance {worst_dist:.1e}, positive={positive}, "
                     f"max ODE closed-form deviation {worst_ode:.1e}")
    assert ok


def _decay_run(op, seed=5, decades=45.0, n_steps=2000):
    """Run long enough for E to fall by about exp(-decades) along the slowest mode."""
    eq = equilibrium_kernel(op, 4.0)
    mu = spectral_gap(op)
    t_end = decades / (2 * mu)
    u0 = mass_correct_random(op, np.random.default_rng(seed), 4.0)
    ent = []
    traj = run(op, u0, TimeSpec(t_end, t_end / n_steps), callback=lambda t, u: ent.append(relative_entropy(op, u, eq)))
    e = np.array(ent)
    keep = e > max(1e-30, 1e-22 * e[0])
    lam_obs, r2 = fit_decay_rate(np.array(traj.times)[keep], e[keep])
    return eq, lam_obs, r2, mu


def test_criterion_4_exponential_convergence():
    rows, ok = [], True
    cases = [("lgl", lgl(r, d)) for r, d in LGL_SETS] + [("jak", jak(r, d)) for r, d in JAK_SETS]
    for k, (name, op) in enumerate(cases):
        eq, lam_obs, r2, mu = _decay_run(op)
        lam_cert = certify(op, eq).lam
        good = r2 >= 0.999 and lam_obs >= lam_cert - 1e-6
        ok &= good
        rows.append(f"{name}{k % 3 + 1}: R2 {r2:.6f}, obs {lam_obs:.4g} >= cert {lam_cert:.3g}"
                    f"{'' if good else ' [FAIL]'}")
    record_criterion(4, "exponential convergence", ok, "; ".join(rows))
    assert ok


def test_criterion_5_discrete_eed():
    details, ok = [], True
    start = time.perf_counter()
    for name, op in (("lgl", lgl()), ("jak", jak())):
        eq = equilibrium_kernel(op, 4.0)
        lam = certify(op, eq).lam
        rng = np.random.default_rng(7)
        worst = np.inf
        for i in range(1000):
            if i % 2:
                u = mass_correct_random(op, rng, 4.0)
            else:  # smooth, near-equilibrium perturbations are the hard cases
                x = op.mesh.centers
                pert = np.zeros(op.n)
                for b in op.layout.blocks:
                    if b.compartment in ("omega", "cyt"):
                        c = rng.standard_normal(3)
                        pert[b.slice] = c[0] + c[1] * x[:, 0] + c[2] * x[:, 1]
                    else:
                        pert[b.slice] = rng.standard_normal()
                pert -= (op.mass @ pert) / (op.mass @ eq.state) * eq.state
                u = eq.state + 1e-2 * rng.uniform(0.01, 1.0) * pert * eq.state.max() / np.abs(pert).max()
            e = relative_entropy(op, u, eq)
            d = entropy_dissipation(op, u, eq)
            worst = min(worst, (d - lam * e) / e)
            ok &= d >= lam * e - 1e-10 * e
        details.append(f"{name}: lam_cert {lam:.3g}, min (D - lam E)/E {worst:.3g}")
    wall = time.perf_counter() - start
    ok &= wall <= 30
    record_criterion(5, "discrete entropy-dissipation inequality", ok, "; ".join(details) + f"; {wall:.1f} s")
    assert ok


def test_criterion_6_network_gap():
    rng = np.random.default_rng(11)
    violations, ordered, worst = 0, True, np.inf
    for _ in range(50):
        n = int(rng.integers(2, 7))
        a = np.zeros((n, n))
        perm = rng.permutation(n)
        for k in range(n):
            a[perm[(k + 1) % n], perm[k]] = rng.uniform(0.05, 5.0)
        extra = rng.random((n, n)) < 0.3
        a[extra] = rng.uniform(0.05, 5.0, extra.sum())
        np.fill_diagonal(a, 0.0)
        net = ReactionNetwork(a)
        alpha = rng.uniform(0.1, 10.0, n)
        res = gap_constant_constructive(net, alpha)
        opt = gap_constant_optimal(net, alpha)
        ordered &= res.eta <= opt * (1 + 1e-12)
        c = rng.standard_normal((10_000, n))
        unit = alpha / np.linalg.norm(alpha)
        c -= np.outer(c @ unit, unit)
        c /= np.linalg.norm(c, axis=1, keepdims=True)
        q = quadratic_form(net, c)
        violations += int(np.sum(q < res.eta - 1e-10)) + int(np.sum(q < opt - 1e-10))
        worst = min(worst, float(q.min() - opt))
    ok = ordered and violations == 0
    record_criterion(6, "network gap", ok,
                     f"50 networks, eta_c <= eta* on all: {ordered}, sample violations {violations}, "
                     f"min sampled Q - eta* {worst:.2e}")
    assert ok


def test_criterion_7_spectral_sanity():
    """Certificate below the slowest decay rate of the generator (8 x 8 meshes).

    The certified rate bounds the quadratic entropy, which decays at twice the
    rate of the slowest eigenmode, so ``2 mu`` is the sharp bound. The model
    certificates are checked against the stricter ``mu``; the single-domain
    certificate is sharp by construction and is checked against ``2 mu``.
    """
    rows, ok = [], True
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    cases = [
        ("lgl", lgl(n=(8, 8)), 1.0),
        ("jak", jak(n=(8, 8)), 1.0),
        ("generic", assemble(generic_spec(a, [0.5, 0.5]), disk_mesh(8, 8)), 2.0),
    ]
    for name, op, factor in cases:
        eq = equilibrium_kernel(op, 4.0)
        lam = certify(op, eq).lam
        mu = spectral_gap(op)
        good = lam <= factor * mu * (1 + 1e-12)
        ok &= good
        bound = "mu" if factor == 1.0 else "2 mu"
        rows.append(f"{name}: lam {lam:.4g} <= {bound} ({factor * mu:.4g})")
    record_criterion(7, "spectral sanity", ok, "; ".join(rows))
    assert ok


def test_criterion_8_generic_mode():
    rows, ok = [], True
    for rate, d in ((1.0, 0.5), (0.2, 1.0)):
        a = np.array([[0.0, rate], [rate, 0.0]])
        op = assemble(generic_spec(a, [d, d]), disk_mesh(16, 32))
        eq = equilibrium_kernel(op, 4.0)
        flat = float(np.ptp(eq.state) / eq.state.max())
        mu = spectral_gap(op)
        p = weighted_poincare(volume_part(op.mesh), np.ones(op.mesh.n_cells))
        predicted = min(d * p, 2 * rate)
        _, lam_obs, r2, _ = _decay_run(op)
        match = abs(lam_obs / 2 - mu) / mu
        good = flat <= 1e-12 and match <= 0.05 and abs(predicted / mu - 1) <= 1e-9
        ok &= good
        rows.append(f"a={rate}, d={d}: flatness {flat:.1e}, mu {mu:.4f} = min(dP, 2a) {predicted:.4f}, "
                    f"lam_obs/2 {lam_obs / 2:.4f} ({100 * match:.2f}% off)")
    record_criterion(8, "single-domain mode", ok, "; ".join(rows))
    assert ok


def test_exact_constant_reported():
    """Not a criterion: the certified rate sits below the best discrete EED constant."""
    op = lgl(n=(8, 16))
    eq = equilibrium_kernel(op, 4.0)
    assert certify(op, eq).lam <= exact_eed_constant(op, eq)
