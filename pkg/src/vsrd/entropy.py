"""Quadratic relative entropy and its dissipation.

For an equilibrium ``w`` of ``M u' = L u`` and ``x = u / w`` the entropy is
``E = sum_i m_i (u_i - w_i)^2 / w_i``. Along the flow

    -dE/dt = sum over directed transfers s -> d of  k * w_s * (x_s - x_d)^2

which for a symmetric diffusion edge reads ``2 k wbar (dx)^2`` with the
arithmetic-mean face weight. The dissipation is evaluated edge by edge,
grouped by the labels of the couplings; ``dissipation_form`` gives the
same number as the matrix quadratic form ``-x^T (L W + W L^T) x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .discretization import CoupledOperator
from .equilibrium import EquilibriumProfile
from .errors import InsufficientData, NonpositiveEquilibrium


@dataclass(frozen=True)
class EntropyReport:
    t: float
    entropy: float
    dissipation: float
    mass: float
    fitted_rate: float = float("nan")


def _weights(eq: EquilibriumProfile | np.ndarray) -> np.ndarray:
    w = eq.state if isinstance(eq, EquilibriumProfile) else np.asarray(eq, dtype=float)
    if not np.all(w > 0):
        raise NonpositiveEquilibrium(f"equilibrium has non-positive entries (min {w.min():.3e})")
    return w


def relative_entropy(op: CoupledOperator, u: np.ndarray, eq, shifted: bool = True) -> float:
    """``E(u - w | w)`` (shifted, default) or ``E(u | w) = sum m u^2 / w``."""
    w = _weights(eq)
    u = op.layout.check(u)
    if shifted:
        return float(op.mass @ ((u - w) ** 2 / w))
    return float(op.mass @ (u**2 / w))


def dissipation_terms(op: CoupledOperator, u: np.ndarray, eq) -> dict[str, float]:
    """Dissipation split by coupling label (gradient terms ``grad_*``, exchange terms ``a->b``)."""
    w = _weights(eq)
    x = op.layout.check(u) / w
    out: dict[str, float] = {}
    for c in op.couplings:
        src, dst, k = c.directed()
        out[c.label] = out.get(c.label, 0.0) + float(np.sum(k * w[src] * (x[src] - x[dst]) ** 2))
    return out


def entropy_dissipation(op: CoupledOperator, u: np.ndarray, eq) -> float:
    """``D(u - w | w)``; equal to ``D(u | w)`` since the form vanishes on multiples of ``w``."""
    return float(sum(dissipation_terms(op, u, eq).values()))


def dissipation_matrix(op: CoupledOperator, eq) -> sp.csr_matrix:
    """Symmetric ``Q`` with ``D = x^T Q x`` for ``x = u / w``."""
    w = _weights(eq)
    lw = op.matrix @ sp.diags(w)
    return (-(lw + lw.T)).tocsr()


def dissipation_form(op: CoupledOperator, u: np.ndarray, eq) -> float:
    w = _weights(eq)
    x = op.layout.check(u) / w
    return float(x @ (dissipation_matrix(op, eq) @ x))


def fit_decay_rate(times, entropies, window: float = 0.5) -> tuple[float, float]:
    """Exponential rate of ``E(t)`` from a log-linear fit over the trailing window.

    Returns ``(rate, r_squared)`` where ``rate = -slope``. Samples with
    ``E <= 1e-30`` are excluded; at least 10 must remain.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(entropies, dtype=float)
    keep = e > 1e-30
    t, e = t[keep], e[keep]
    if t.size < 10:
        raise InsufficientData(f"need >= 10 samples with E > 1e-30, got {t.size}")
    start = t[0] + (1 - window) * (t[-1] - t[0])
    sel = t >= start
    if np.count_nonzero(sel) < 2:
        sel = np.ones_like(t, dtype=bool)
    tt, y = t[sel], np.log(e[sel])
    slope, intercept = np.polyfit(tt, y, 1)
    resid = y - (slope * tt + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(-slope), r2


def entropy_reports(op: CoupledOperator, times, states, eq) -> list[EntropyReport]:
    return [
        EntropyReport(float(t), relative_entropy(op, u, eq), entropy_dissipation(op, u, eq), op.total_mass(u))
        for t, u in zip(times, states)
    ]
