"""Command line front end.

    vsrd run          --config cfg.toml [--out DIR] [--seed N] [--mesh-level L]
    vsrd equilibrium  --config cfg.toml
    vsrd certify      --config cfg.toml      (also writes a 3-level refinement table)
    vsrd network-gap  --network net.json [--weights 1,1,1]
    vsrd mesh-export  --config cfg.toml

Exit codes: 0 ok, 2 invalid input, 3 numerical failure, 4 the simulated
entropy decayed slower than the certified rate. Set ``VSRD_LOG_LEVEL``
(DEBUG, INFO, ...) for progress messages on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .certifier import certify
from .config import RunConfig, load_config
from .discretization import assemble
from .entropy import dissipation_terms, entropy_dissipation, fit_decay_rate, relative_entropy
from .equilibrium import (
    equilibrium_kernel,
    equilibrium_picard_jak,
    equilibrium_picard_lgl,
    weighted_distance,
)
from .errors import NumericalError, ValidationError
from .geometry import build_mesh
from .network import ReactionNetwork, gap_constant_constructive, gap_constant_optimal
from .timestepper import discrete_rate, run

SCHEMA_VERSION = 1
SOUNDNESS_TOL = 1e-6
FIT_FLOOR = 1e-22  # fit only samples with E > FIT_FLOOR * E(0), well above round-off

log = logging.getLogger("vsrd")


class SoundnessViolation(Exception):
    pass


def _write_json(path: Path, obj) -> None:
    obj = {"schema_version": SCHEMA_VERSION, **obj}
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def _outdir(args, cfg: RunConfig | None) -> Path:
    out = Path(args.out) if args.out else Path(cfg.outputs.directory if cfg else ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _setup(cfg: RunConfig, level: int):
    mesh = build_mesh(cfg.geometry.refined(level))
    op = assemble(cfg.model, mesh)
    u0 = cfg.initial_condition.build(op)
    return mesh, op, u0


def _certify(cfg: RunConfig, op, eq):
    if cfg.model.model_kind == "lgl":
        return certify(op, eq, grid=cfg.grid, sharp=cfg.sharp)
    return certify(op, eq)


def _rolling_rates(times, entropies, floor):
    rates = []
    for i in range(len(times)):
        t, e = np.asarray(times[: i + 1]), np.asarray(entropies[: i + 1])
        keep = e > floor
        if np.count_nonzero(keep) < 10:
            rates.append(float("nan"))
        else:
            rates.append(fit_decay_rate(t[keep], e[keep])[0])
    return rates


def cmd_run(args) -> int:
    cfg = load_config(args.config).with_seed(args.seed)
    out = _outdir(args, cfg)
    mesh, op, u0 = _setup(cfg, args.mesh_level)
    mass0 = op.total_mass(u0)
    eq = equilibrium_kernel(op, mass0)
    cert = _certify(cfg, op, eq)
    log.info("certified rate %.6g; integrating %d steps", cert.lam, cfg.time.n_steps)

    names = [b.species for b in op.layout.blocks]
    rows = []

    def record(t, u):
        d = (u - eq.state) ** 2 * op.mass
        l2 = [float(np.sqrt(d[op.layout[n]].sum())) for n in names]
        rows.append([t, op.total_mass(u), relative_entropy(op, u, eq), entropy_dissipation(op, u, eq), *l2])

    final = {}

    def keep_last(t, u):
        record(t, u)
        final["u"] = u.copy()

    run(op, u0, cfg.time, callback=keep_last)
    times = [r[0] for r in rows]
    ent = [r[2] for r in rows]
    floor = max(1e-30, FIT_FLOOR * ent[0])
    rates = _rolling_rates(times, ent, floor)
    for r, rate in zip(rows, rates):
        r.append(rate)

    if "csv" in cfg.outputs.formats:
        with open(out / "trajectory.csv", "w", newline="") as fh:
            fh.write(f"# schema_version={SCHEMA_VERSION}\n")
            w = csv.writer(fh)
            w.writerow(["t", "mass", "entropy", "dissipation", *[f"l2_{n}" for n in names], "fitted_rate"])
            for r in rows:
                w.writerow([repr(float(x)) for x in r])
    _write_json(out / "equilibrium.json", eq.to_json())
    _write_json(out / "certificate.json", cert.to_json())

    t_arr, e_arr = np.array(times), np.array(ent)
    sel = e_arr > floor
    lam_obs, r2 = fit_decay_rate(t_arr[sel], e_arr[sel]) if np.count_nonzero(sel) >= 10 else (float("nan"), float("nan"))
    masses = np.array([r[1] for r in rows])
    drift = float(np.max(np.abs(masses / mass0 - 1)))
    lam_step = discrete_rate(cert.lam, cfg.time.dt, cfg.time.scheme)
    bound = e_arr[0] * np.exp(-(lam_step - SOUNDNESS_TOL) * t_arr)
    envelope_ok = bool(np.all(e_arr[sel] <= bound[sel] * (1 + 1e-9) + 1e-300))
    rate_ok = bool(np.isfinite(lam_obs) and lam_obs >= lam_step - SOUNDNESS_TOL)
    sound = envelope_ok and rate_ok

    _write_json(
        out / "entropy_report.json",
        {
            "t_final": times[-1],
            "entropy_final": ent[-1],
            "dissipation_final": rows[-1][3],
            "dissipation_terms_initial": dissipation_terms(op, u0, eq),
            "dissipation_terms_final": dissipation_terms(op, final["u"], eq),
            "fitted_rate": lam_obs,
            "fit_r2": r2,
        },
    )
    summary = {
        "model": cfg.model.model_kind,
        "resolution": list(mesh.spec.resolution),
        "n_dof": op.n,
        "mass_initial": mass0,
        "mass_drift": drift,
        "entropy_initial": ent[0],
        "entropy_final": ent[-1],
        "lambda_obs": lam_obs,
        "fit_r2": r2,
        "lambda_cert": cert.lam,
        "lambda_cert_time_discrete": lam_step,
        "soundness": {"pass": sound, "rate_ok": rate_ok, "envelope_ok": envelope_ok, "tol": SOUNDNESS_TOL},
        "seed": cfg.initial_condition.seed,
        "version": __version__,
    }
    _write_json(out / "summary.json", summary)
    if "gnuplot" in cfg.outputs.formats:
        (out / "plot.gp").write_text(_gnuplot(cert.lam, ent[0]))
    print(json.dumps(summary, sort_keys=True))
    if not sound:
        _write_json(out / "soundness_failure.json", {"summary": summary, "times": times, "entropy": ent})
        raise SoundnessViolation(f"observed rate {lam_obs:.6g} below certified {cert.lam:.6g}")
    return 0


def _gnuplot(lam: float, e0: float) -> str:
    return (
        "# gnuplot script: entropy decay against the certified envelope\n"
        "set datafile separator ','\n"
        "set logscale y\n"
        "set xlabel 't'\nset ylabel 'relative entropy'\n"
        f"lam = {lam!r}\ne0 = {e0!r}\n"
        "plot 'trajectory.csv' every ::1 using 1:3 with lines title 'E(t)', \\\n"
        "     e0*exp(-lam*x) with lines dashtype 2 title 'certified bound'\n"
        "pause -1\n"
    )


def cmd_equilibrium(args) -> int:
    cfg = load_config(args.config).with_seed(args.seed)
    out = _outdir(args, cfg)
    mesh, op, u0 = _setup(cfg, args.mesh_level)
    mass = op.total_mass(u0)
    eq = equilibrium_kernel(op, mass)
    payload = eq.to_json()
    picard = {"lgl": equilibrium_picard_lgl, "jak": equilibrium_picard_jak}.get(cfg.model.model_kind)
    if picard is not None:
        alt = picard(cfg.model, mesh, mass)
        payload["cross_check"] = {
            "method": alt.method,
            "iterations": alt.iterations,
            "weighted_l2_distance": weighted_distance(op, eq.state, alt.state),
        }
    payload.pop("schema_version", None)
    _write_json(out / "equilibrium.json", payload)
    print(json.dumps({"mass": mass, "bounds": list(eq.bounds), "residual": eq.residual}, sort_keys=True))
    return 0


def cmd_certify(args) -> int:
    cfg = load_config(args.config).with_seed(args.seed)
    out = _outdir(args, cfg)
    base = args.mesh_level
    mesh, op, u0 = _setup(cfg, base)
    mass = op.total_mass(u0)
    table = []
    first = None
    for level in (base, base + 1, base + 2):
        m = build_mesh(cfg.geometry.refined(level))
        o = assemble(cfg.model, m)
        eq = equilibrium_kernel(o, mass)
        cert = _certify(cfg, o, eq)
        log.info("level %d: lambda %.6g", level, cert.lam)
        if first is None:
            first = cert
        table.append(
            {
                "level": level,
                "resolution": list(m.spec.resolution),
                "lambda": cert.lam,
                "gap": cert.gap["value"],
                **{k: v for k, v in cert.poincare.items()},
                **{k: v for k, v in cert.trace.items()},
            }
        )
    payload = first.to_json()
    payload.pop("schema_version", None)
    payload["mass"] = mass
    payload["resolution"] = list(mesh.spec.resolution)
    _write_json(out / "certificate.json", payload)
    _write_json(out / "refinement.json", {"levels": table})
    keys = list(table[0])
    with open(out / "refinement.csv", "w", newline="") as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION}\n")
        w = csv.writer(fh)
        w.writerow(keys)
        for row in table:
            w.writerow([json.dumps(row[k]) if isinstance(row[k], list) else repr(row[k]) for k in keys])
    print(json.dumps({"lambda": first.lam, "model": first.model_kind}, sort_keys=True))
    return 0


def cmd_network_gap(args) -> int:
    if not args.network:
        raise ValidationError("network-gap needs --network FILE")
    net = ReactionNetwork.from_json(args.network)
    if args.weights:
        try:
            weights = np.array([float(x) for x in args.weights.split(",")])
        except ValueError as exc:
            raise ValidationError(f"--weights: {exc}") from exc
    else:
        weights = np.ones(net.n_species)
    res = gap_constant_constructive(net, weights)
    payload = {
        "species": list(net.species),
        "weights": weights.tolist(),
        "eta_constructive": res.eta,
        "eta_optimal": gap_constant_optimal(net, weights),
        "provenance": res.to_json(),
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "network_gap.json", payload)
    print(json.dumps({"schema_version": SCHEMA_VERSION, **payload}, sort_keys=True))
    return 0


def cmd_mesh_export(args) -> int:
    cfg = load_config(args.config)
    out = _outdir(args, cfg)
    mesh = build_mesh(cfg.geometry.refined(args.mesh_level))
    _write_json(out / "mesh.json", mesh.to_json())
    print(str(out / "mesh.json"))
    return 0


COMMANDS = {
    "run": cmd_run,
    "equilibrium": cmd_equilibrium,
    "certify": cmd_certify,
    "network-gap": cmd_network_gap,
    "mesh-export": cmd_mesh_export,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help="output directory (overrides outputs.directory)")
    common.add_argument("--seed", type=int, default=None, help="seed for random_positive initial data")
    common.add_argument("--mesh-level", type=int, default=0, help="number of uniform refinements of the mesh")
    parser = argparse.ArgumentParser(prog="vsrd", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "network-gap":
            p.add_argument("--network", help="network JSON {species, rates}")
            p.add_argument("--weights", help="comma-separated positive weights")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("VSRD_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command != "network-gap" and not args.config:
        print(f"error: {args.command} needs --config", file=sys.stderr)
        return 2
    if args.mesh_level < 0:
        print("error: --mesh-level must be >= 0", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    except SoundnessViolation as exc:
        print(f"soundness violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
