"""Local operator propagation, ground-state expectations and entanglement.

Two operators are carried through the iterations: the impurity spin-flip
correlator O_x + O_x^dag (giving sx) and the impurity S_z (giving sz as the
thermodynamic average 2<S_z>).  Both conserve charge and total spin
projection, so their matrices stay sector-diagonal, and both contain an even
number of fermion operators, so no sign strings appear when a site is added.

Sign convention: with the Hamiltonian used here the raw ground-state
correlator <O_x + O_x^dag> is negative and, for a positive field, <2 S_z> is
negative.  Reported values carry a global sign flip so that sx -> +1 in the
weak-dissipation limit and sz -> +1 in the polarized limit; the entanglement
entropy depends only on the magnitude, so nothing physical changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .engine import ConvergenceReport, IterationState, NRGConfig, Sector, spin_flip_raw
from .params import DomainError


class ConvergenceError(RuntimeError):
    """Observable read-out requested from an unconverged run."""


@dataclass
class OperatorBlocks:
    """Sector-diagonal operator matrices in the eigenbasis of iteration n."""

    n: int
    ox: dict[Sector, np.ndarray]
    oz: dict[Sector, np.ndarray]


def init_operator_blocks(state: IterationState) -> OperatorBlocks:
    """Exact 8-dimensional matrices of O_x + O_x^dag and impurity S_z."""
    if state.raw_basis is None or state.n != 0:
        raise ValueError("operator blocks must be seeded from the impurity-site state")
    ox: dict[Sector, np.ndarray] = {}
    oz: dict[Sector, np.ndarray] = {}
    for s, states in state.raw_basis.items():
        v = state.blocks[s].vectors
        mx = spin_flip_raw(states)
        mz = np.diag([0.5 * imp for imp, _ in states])
        ox[s] = v.T @ mx @ v
        oz[s] = v.T @ mz @ v
    return OperatorBlocks(n=0, ox=ox, oz=oz)


def propagate(ops: OperatorBlocks, state: IterationState) -> OperatorBlocks:
    """Rotate the blocks into the eigenbasis of the next iteration.

    The new-site factor of both operators is the identity, so each block is
    assembled from the parent-sector blocks and projected to kept states.
    """
    if state.structure is None or state.n != ops.n + 1:
        raise ValueError(
            f"cannot propagate operators tagged n={ops.n} to iteration n={state.n}"
        )
    new_ox: dict[Sector, np.ndarray] = {}
    new_oz: dict[Sector, np.ndarray] = {}
    for t in sorted(state.blocks):
        u = state.blocks[t].vectors
        kept = u.shape[1]
        gx = np.zeros((kept, kept))
        gz = np.zeros((kept, kept))
        for g in state.structure[t]:
            ox_old = ops.ox.get(g.sector)
            oz_old = ops.oz.get(g.sector)
            if ox_old is None or ox_old.shape != (g.size, g.size):
                raise ValueError(
                    f"operator block mismatch in sector {g.sector}:"
                    f" expected {(g.size, g.size)},"
                    f" got {None if ox_old is None else ox_old.shape}"
                )
            us = u[g.offset : g.offset + g.size, :]
            gx += us.T @ ox_old @ us
            gz += us.T @ oz_old @ us
        new_ox[t] = gx
        new_oz[t] = gz
    return OperatorBlocks(n=state.n, ox=new_ox, oz=new_oz)


def ground_expectation_raw(
    state: IterationState, ops: OperatorBlocks, degeneracy_tol: float = 1e-10
) -> tuple[float, float]:
    """Raw (<O_x + O_x^dag>, 2<S_z>) averaged over the ground multiplet.

    Averaging the diagonal over all states within degeneracy_tol of the
    ground removes the eigensolver's arbitrary basis choice in a degenerate
    subspace.
    """
    sx_vals: list[float] = []
    sz_vals: list[float] = []
    for s in sorted(state.blocks):
        energies = state.blocks[s].energies
        for i in np.nonzero(energies <= degeneracy_tol)[0]:
            sx_vals.append(float(ops.ox[s][i, i]))
            sz_vals.append(2.0 * float(ops.oz[s][i, i]))
    if not sx_vals:
        raise ValueError("no ground state found below the degeneracy tolerance")
    return float(np.mean(sx_vals)), float(np.mean(sz_vals))


def expectation_values(
    state: IterationState,
    ops: OperatorBlocks,
    report: ConvergenceReport | None = None,
    override: bool = False,
) -> tuple[float, float]:
    """Reported (sx, sz) in the figures' sign convention.

    Refuses to read out an unconverged run unless override is set; pass the
    run's convergence report to enforce this.
    """
    if report is not None and not report.converged and not override:
        raise ConvergenceError(
            f"run not converged at N={report.n_m}"
            f" (scale_met={report.scale_met}, plateau_met={report.plateau_met},"
            f" drift_sx={report.drift_sx:.3g}, drift_sz={report.drift_sz:.3g});"
            " pass override=True to read out anyway"
        )
    if report is not None and report.even_odd_averaged:
        return report.sx, report.sz
    tol = state.config.degeneracy_tol if state.config else 1e-10
    sx_raw, sz_raw = ground_expectation_raw(state, ops, tol)
    return -sx_raw, -sz_raw


def entanglement_entropy(sx: float, sz: float) -> tuple[float, float, float]:
    """Density-matrix eigenvalues and the entropy of entanglement in bits.

    p_pm = (1 +- |<sigma>|)/2 with |<sigma>| = sqrt(sx^2 + sz^2) (sy vanishes
    by symmetry); E = -p+ log2 p+ - p- log2 p- with 0 log 0 = 0.
    """
    norm = math.hypot(sx, sz)
    if norm > 1.0 + 1e-6:
        raise DomainError(f"nonphysical density matrix: |<sigma>| = {norm}")
    norm = min(norm, 1.0)
    p_plus = 0.5 * (1.0 + norm)
    p_minus = 1.0 - p_plus
    entropy = 0.0
    for p in (p_plus, p_minus):
        if p > 0.0:
            entropy -= p * math.log2(p)
    return p_plus, p_minus, entropy


@dataclass
class AlphaMaxResult:
    alpha_m: float
    entropy_max: float
    n_evaluations: int
    evaluations: dict[float, float]


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def find_alpha_max(
    eps_over_delta: float,
    delta_ratio: float,
    cfg: NRGConfig,
    grid: tuple[float, ...] = tuple(round(0.1 * i, 2) for i in range(1, 10)),
    tol: float = 0.01,
    evaluate: Callable[[float], float] | None = None,
) -> AlphaMaxResult:
    """Locate the interior maximum of the entropy as a function of alpha.

    Coarse grid scan followed by golden-section refinement of the bracketing
    interval down to |delta alpha| <= tol.  Only meaningful for a finite level
    asymmetry; at eps = 0 the entropy grows monotonically and no interior
    maximum exists.
    """
    if eps_over_delta <= 0.0:
        raise DomainError("find_alpha_max requires eps_over_delta > 0")
    if len(grid) < 3:
        raise DomainError("alpha grid must contain at least 3 points")

    if evaluate is None:

        def evaluate(alpha: float) -> float:
            from .params import SpinBosonPoint
            from .sweep import run_point

            point = SpinBosonPoint(
                alpha=alpha, epsilon=eps_over_delta, delta_ratio=delta_ratio
            )
            return run_point(point, cfg).entropy

    cache: dict[float, float] = {}

    def f(alpha: float) -> float:
        key = round(alpha, 12)
        if key not in cache:
            cache[key] = evaluate(key)
        return cache[key]

    values = [f(a) for a in grid]
    i_max = int(np.argmax(values))
    if i_max == 0 or i_max == len(grid) - 1:
        raise DomainError(
            "no interior maximum found: entropy is monotone on the alpha grid"
        )

    a, b = grid[i_max - 1], grid[i_max + 1]
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    while b - a > 2.0 * tol:
        if f(c) >= f(d):
            b, d = d, c
            c = b - _GOLDEN * (b - a)
        else:
            a, c = c, d
            d = a + _GOLDEN * (b - a)

    alpha_m = round(0.5 * (a + b), 12)
    return AlphaMaxResult(
        alpha_m=alpha_m,
        entropy_max=f(alpha_m),
        n_evaluations=len(cache),
        evaluations=dict(sorted(cache.items())),
    )
