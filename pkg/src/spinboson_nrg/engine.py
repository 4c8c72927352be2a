"""Iterative block diagonalization of the impurity + chain Hamiltonian sequence.

The Hamiltonian of iteration N covers the impurity spin and chain sites
0 .. N.  Total charge relative to half filling (q) and twice the total spin
projection (two_sz) are conserved, so every iteration is diagonalized sector
by sector.

Rescaling convention: stored sector energies at iteration N >= 1 are
Lambda^((N-1)/2) * (E - E0), with the current ground state at zero; the
iteration-0 spectrum is stored unrescaled.  The subtracted ground shifts are
accumulated unrescaled in e0_accumulated, so the absolute chain ground energy
stays available for energy-derivative checks.

Fermionic signs: a creation operator of the newest site anticommutes past all
block fermions, contributing the electron-number parity of the block state.
Within a sector that parity is constant, so the sign is a per-block scalar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .chain import WilsonChain, build_chain, energy_scale
from .fock import (
    DELTA_DN,
    DELTA_UP,
    DN,
    DOUBLE,
    DQ,
    DTSZ,
    FDAG_DN,
    FDAG_UP,
    IMP_DN,
    IMP_UP,
    LOCAL_STATES,
    UP,
)
from .params import DomainError, KondoParams, kondo_renormalized_tunneling


class EngineError(RuntimeError):
    """Internal solver failure (eigensolver breakdown, dimension mismatch)."""


class Sector(NamedTuple):
    q: int
    two_sz: int


class Group(NamedTuple):
    """One (parent sector x local state) slice of a product-basis sector."""

    sector: Sector
    local: int
    offset: int
    size: int


@dataclass(frozen=True)
class NRGConfig:
    """Solver settings; the fast defaults favor turnaround over fidelity."""

    lam: float = 2.0
    n_keep: int = 300
    n_max: int = 300
    eta: float = 1e-2            # stop once omega_N < eta * Delta_r
    plateau_tol: float = 1e-6
    degeneracy_tol: float = 1e-10
    plateau_window: int = 4

    def __post_init__(self):
        if self.lam <= 1.0:
            raise DomainError("lam must exceed 1")
        if self.n_keep < 16:
            raise DomainError("n_keep must be >= 16")
        if self.n_max < 1:
            raise DomainError("n_max must be >= 1")
        if not 0.0 < self.eta < 1.0:
            raise DomainError("eta must lie in (0, 1)")
        if self.plateau_tol <= 0.0 or self.degeneracy_tol <= 0.0:
            raise DomainError("tolerances must be positive")
        if self.plateau_window < 2:
            raise DomainError("plateau_window must be >= 2")

    @classmethod
    def paper_fidelity(cls, **overrides) -> "NRGConfig":
        """Production settings: finer discretization, larger kept basis."""
        base = dict(lam=1.5, n_keep=1200)
        base.update(overrides)
        return cls(**base)


@dataclass
class SectorBlock:
    energies: np.ndarray      # ascending, iteration ground state at zero
    vectors: np.ndarray       # product basis -> eigenbasis, kept columns only
    kept: int


@dataclass
class IterationState:
    n: int
    blocks: dict[Sector, SectorBlock]
    e0_accumulated: float
    ground_sector: Sector
    config: NRGConfig | None = None
    lam: float | None = None
    # f^dag matrices of the newest site in the current eigenbasis, mapping a
    # sector to sector + delta_sigma
    fdag_up: dict[Sector, np.ndarray] = field(default_factory=dict)
    fdag_dn: dict[Sector, np.ndarray] = field(default_factory=dict)
    # product-basis composition of each sector (iterations >= 1)
    structure: dict[Sector, tuple[Group, ...]] | None = None
    # raw (impurity, occupation) basis per sector (iteration 0 only)
    raw_basis: dict[Sector, tuple[tuple[int, int], ...]] | None = None
    # at zero field the spectrum is exactly symmetric under two_sz -> -two_sz
    spin_symmetric: bool = False

    @property
    def n_sites(self) -> int:
        return self.n + 1

    def energy_unscale(self) -> float:
        """Factor converting stored energies back to absolute D0 units."""
        if self.n == 0 or self.lam is None:
            return 1.0
        return self.lam ** (-(self.n - 1) / 2.0)

    def total_kept(self) -> int:
        return sum(b.kept for b in self.blocks.values())


def _block_parity_sign(q: int, n_sites: int) -> float:
    """(-1)^(electron count) of a block state; q is relative to half filling."""
    return -1.0 if (q + n_sites) % 2 else 1.0


def _symmetrize_spin_reflection(eig: dict[Sector, tuple[np.ndarray, np.ndarray]]):
    """Pin mirrored (q, +-two_sz) spectra to their mean, in place.

    At zero field the reflection two_sz -> -two_sz is exact, but its roundoff
    violation is a relevant perturbation: the rescaling amplifies it by
    sqrt(Lambda) per iteration until truncation splits mirror multiplets and a
    spurious polarization appears.  Re-pinning every iteration keeps mirror
    partners bitwise degenerate, so the truncation cut can never separate
    them.
    """
    for t in sorted(eig):
        if t.two_sz <= 0:
            continue
        m = Sector(t.q, -t.two_sz)
        if m not in eig:
            continue
        w_t, v_t = eig[t]
        w_m, v_m = eig[m]
        if len(w_t) == len(w_m):
            w_avg = 0.5 * (w_t + w_m)
            eig[t] = (w_avg, v_t)
            eig[m] = (w_avg, v_m)


def _impurity_site_basis() -> dict[Sector, tuple[tuple[int, int], ...]]:
    basis: dict[Sector, list[tuple[int, int]]] = {}
    for imp in (IMP_UP, IMP_DN):
        for occ in LOCAL_STATES:
            s = Sector(DQ[occ], imp + DTSZ[occ])
            basis.setdefault(s, []).append((imp, occ))
    return {s: tuple(v) for s, v in sorted(basis.items())}


def spin_flip_raw(states: tuple[tuple[int, int], ...]) -> np.ndarray:
    """Matrix of O_x + O_x^dag on a raw (impurity, occupation) sector basis.

    O_x flips the impurity down while moving the site-0 electron from down to
    up; it annihilates states with site 0 empty or doubly occupied.
    """
    d = len(states)
    m = np.zeros((d, d))
    for j, (imp_j, occ_j) in enumerate(states):
        if imp_j != IMP_UP or occ_j != DN:
            continue
        for i, (imp_i, occ_i) in enumerate(states):
            if imp_i == IMP_DN and occ_i == UP:
                m[i, j] += 1.0
                m[j, i] += 1.0
    return m


def init_impurity_site(k: KondoParams, config: NRGConfig | None = None) -> IterationState:
    """Diagonalize the 8-state impurity + site-0 Hamiltonian in sectors.

    H0 carries the transverse spin-flip term, the longitudinal Ising term and
    the impurity Zeeman term; the chain kinetic energy starts at the next
    iteration.
    """
    basis = _impurity_site_basis()
    jperp, jpar, h = k.jperp, k.jpar, k.field

    eig: dict[Sector, tuple[np.ndarray, np.ndarray]] = {}
    for s, states in basis.items():
        ham = 0.5 * jperp * spin_flip_raw(states)
        for i, (imp, occ) in enumerate(states):
            n_up = 1.0 if occ in (UP, DOUBLE) else 0.0
            n_dn = 1.0 if occ in (DN, DOUBLE) else 0.0
            ham[i, i] += 0.25 * jpar * (n_up - n_dn) * imp + 0.5 * h * imp
        eig[s] = _diagonalize(ham, s)

    spin_symmetric = h == 0.0
    if spin_symmetric:
        _symmetrize_spin_reflection(eig)

    e0 = min(w[0] for w, _ in eig.values())
    ground = min(s for s, (w, _) in eig.items() if w[0] - e0 <= 0.0)
    blocks = {
        s: SectorBlock(energies=w - e0, vectors=v, kept=len(w))
        for s, (w, v) in eig.items()
    }

    fdag_up: dict[Sector, np.ndarray] = {}
    fdag_dn: dict[Sector, np.ndarray] = {}
    for (dq, dtsz), floc, out in (
        (DELTA_UP, FDAG_UP, fdag_up),
        (DELTA_DN, FDAG_DN, fdag_dn),
    ):
        for s, states in basis.items():
            t = Sector(s.q + dq, s.two_sz + dtsz)
            if t not in basis:
                continue
            raw = np.zeros((len(basis[t]), len(states)))
            for j, (imp_j, occ_j) in enumerate(states):
                for i, (imp_i, occ_i) in enumerate(basis[t]):
                    if imp_i == imp_j:
                        raw[i, j] = floc[occ_i, occ_j]
            out[s] = eig[t][1].T @ raw @ eig[s][1]

    return IterationState(
        n=0,
        blocks=blocks,
        e0_accumulated=e0,
        ground_sector=ground,
        config=config,
        fdag_up=fdag_up,
        fdag_dn=fdag_dn,
        raw_basis=basis,
        spin_symmetric=spin_symmetric,
    )


def _diagonalize(ham: np.ndarray, sector: Sector) -> tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eigh(ham)
    except np.linalg.LinAlgError as exc:
        raise EngineError(
            f"eigensolver failed in sector (q={sector.q}, 2Sz={sector.two_sz}),"
            f" dimension {ham.shape[0]}"
        ) from exc


_SPIN_CHANNELS = ((DELTA_UP, FDAG_UP, "fdag_up"), (DELTA_DN, FDAG_DN, "fdag_dn"))


def add_site(state: IterationState, chain: WilsonChain) -> IterationState:
    """Extend the chain by one site and rediagonalize every sector.

    Builds the rescaled Hamiltonian sqrt(Lambda) * H_N + xi_N * (hopping) on
    the kept-states x new-site product basis, with the per-sector parity sign
    on the new-site fermion operators.
    """
    if state.n + 1 > chain.length:
        raise EngineError(
            f"chain provides {chain.length} hoppings, cannot add site {state.n + 1}"
        )
    lam = chain.lam
    xi = chain.coupling(state.n)
    scale = 1.0 if state.n == 0 else math.sqrt(lam)
    n_sites_old = state.n_sites
    n_new = state.n + 1

    groups: dict[Sector, list[Group]] = {}
    for s in sorted(state.blocks):
        d = state.blocks[s].kept
        for loc in LOCAL_STATES:
            t = Sector(s.q + DQ[loc], s.two_sz + DTSZ[loc])
            lst = groups.setdefault(t, [])
            off = lst[-1].offset + lst[-1].size if lst else 0
            lst.append(Group(s, loc, off, d))
    index = {t: {(g.sector, g.local): g for g in lst} for t, lst in groups.items()}
    fdag_old = {"fdag_up": state.fdag_up, "fdag_dn": state.fdag_dn}

    eig: dict[Sector, tuple[np.ndarray, np.ndarray]] = {}
    for t in sorted(groups):
        lst = groups[t]
        dim = lst[-1].offset + lst[-1].size
        ham = np.zeros((dim, dim))
        for g in lst:
            sl = slice(g.offset, g.offset + g.size)
            np.fill_diagonal(ham[sl, sl], scale * state.blocks[g.sector].energies)
        for (dq, dtsz), floc, name in _SPIN_CHANNELS:
            for g_to in lst:
                fmat = fdag_old[name].get(g_to.sector)
                if fmat is None:
                    continue
                s_from = Sector(g_to.sector.q + dq, g_to.sector.two_sz + dtsz)
                sign = _block_parity_sign(g_to.sector.q, n_sites_old)
                for l_from in LOCAL_STATES:
                    elem = floc[g_to.local, l_from]
                    if elem == 0.0:
                        continue
                    g_from = index[t].get((s_from, l_from))
                    if g_from is None:
                        continue
                    # <to| f^dag_new f_old |from>; f_old block is fmat^T
                    blockm = (xi * elem * sign) * fmat.T
                    r = slice(g_to.offset, g_to.offset + g_to.size)
                    c = slice(g_from.offset, g_from.offset + g_from.size)
                    ham[r, c] += blockm
                    ham[c, r] += blockm.T
        eig[t] = _diagonalize(ham, t)

    if state.spin_symmetric:
        _symmetrize_spin_reflection(eig)

    shift = min(w[0] for w, _ in eig.values())
    ground = min(t for t, (w, _) in eig.items() if w[0] - shift <= 0.0)
    e0 = state.e0_accumulated + lam ** (-(n_new - 1) / 2.0) * shift

    blocks = {
        t: SectorBlock(energies=w - shift, vectors=v, kept=len(w))
        for t, (w, v) in eig.items()
    }

    fdag_up: dict[Sector, np.ndarray] = {}
    fdag_dn: dict[Sector, np.ndarray] = {}
    for (dq, dtsz), floc, out in (
        (DELTA_UP, FDAG_UP, fdag_up),
        (DELTA_DN, FDAG_DN, fdag_dn),
    ):
        for t in sorted(groups):
            t2 = Sector(t.q + dq, t.two_sz + dtsz)
            if t2 not in groups:
                continue
            u_from, u_to = eig[t][1], eig[t2][1]
            acc = np.zeros((u_to.shape[1], u_from.shape[1]))
            for g_from in groups[t]:
                sign = _block_parity_sign(g_from.sector.q, n_sites_old)
                for l_to in LOCAL_STATES:
                    elem = floc[l_to, g_from.local]
                    if elem == 0.0:
                        continue
                    g_to = index[t2].get((g_from.sector, l_to))
                    if g_to is None:
                        continue
                    rt = slice(g_to.offset, g_to.offset + g_to.size)
                    rf = slice(g_from.offset, g_from.offset + g_from.size)
                    acc += (elem * sign) * (u_to[rt, :].T @ u_from[rf, :])
            out[t] = acc

    return IterationState(
        n=n_new,
        blocks=blocks,
        e0_accumulated=e0,
        ground_sector=ground,
        config=state.config,
        lam=lam,
        fdag_up=fdag_up,
        fdag_dn=fdag_dn,
        structure={t: tuple(lst) for t, lst in groups.items()},
        spin_symmetric=state.spin_symmetric,
    )


def truncate(
    state: IterationState, n_keep: int, degeneracy_tol: float = 1e-10
) -> IterationState:
    """Retain the globally lowest n_keep states across all sectors.

    If the cutoff falls inside a near-degenerate multiplet (relative gap below
    degeneracy_tol) the whole multiplet is retained, so the kept count may
    exceed n_keep slightly.
    """
    if n_keep < 16:
        raise DomainError("n_keep must be >= 16")
    entries = sorted(
        (float(e), s, i)
        for s in state.blocks
        for i, e in enumerate(state.blocks[s].energies)
    )
    if len(entries) <= n_keep:
        return state

    cut = n_keep
    while cut < len(entries):
        e_prev, e_next = entries[cut - 1][0], entries[cut][0]
        if e_next - e_prev >= degeneracy_tol * max(1.0, abs(e_prev)):
            break
        cut += 1

    keep_count: dict[Sector, int] = {}
    for _, s, _ in entries[:cut]:
        keep_count[s] = keep_count.get(s, 0) + 1

    blocks: dict[Sector, SectorBlock] = {}
    for s in sorted(keep_count):
        c = keep_count[s]
        b = state.blocks[s]
        blocks[s] = SectorBlock(
            energies=b.energies[:c], vectors=b.vectors[:, :c], kept=c
        )

    def _slice_fdag(src: dict[Sector, np.ndarray], dq: int, dtsz: int):
        out = {}
        for s, m in src.items():
            t = Sector(s.q + dq, s.two_sz + dtsz)
            if s in keep_count and t in keep_count:
                out[s] = m[: keep_count[t], : keep_count[s]]
        return out

    return replace(
        state,
        blocks=blocks,
        fdag_up=_slice_fdag(state.fdag_up, *DELTA_UP),
        fdag_dn=_slice_fdag(state.fdag_dn, *DELTA_DN),
    )


@dataclass
class ConvergenceReport:
    n_m: int
    converged: bool
    scale_met: bool
    plateau_met: bool
    even_odd_averaged: bool
    delta_r: float
    omega_final: float
    drift_sx: float
    drift_sz: float
    sx_raw: float
    sz_raw: float
    sx: float
    sz: float
    history: tuple[tuple[int, float, float], ...]


def _drift(values: list[float]) -> float:
    return max(values) - min(values) if values else math.inf


def _plateau_status(
    history: list[tuple[int, float, float]], window: int, tol: float
) -> tuple[bool, bool]:
    if len(history) < window:
        return False, False
    recent = history[-window:]
    if _drift([h[1] for h in recent]) < tol and _drift([h[2] for h in recent]) < tol:
        return True, False
    # even/odd alternation: accept if each parity subsequence has settled
    if len(history) >= 2 * window:
        tail = history[-2 * window :]
        even = [h for h in tail if h[0] % 2 == 0]
        odd = [h for h in tail if h[0] % 2 == 1]
        if min(len(even), len(odd)) >= 2:
            settled = all(
                _drift([h[c] for h in part]) < tol
                for part in (even, odd)
                for c in (1, 2)
            )
            if settled:
                return True, True
    return False, False


def run(k: KondoParams, cfg: NRGConfig) -> tuple[IterationState, ConvergenceReport]:
    """Iterate until omega_N < eta * Delta_r and the observables plateau.

    Reaching n_max without satisfying both criteria is not an error; the
    report carries converged=False and the drift over the last window.
    """
    from .observables import ground_expectation_raw, init_operator_blocks, propagate

    chain = build_chain(cfg.lam, cfg.n_max)
    delta_r = kondo_renormalized_tunneling(k)

    state = init_impurity_site(k, config=cfg)
    ops = init_operator_blocks(state)
    sx0, sz0 = ground_expectation_raw(state, ops, cfg.degeneracy_tol)
    history: list[tuple[int, float, float]] = [(0, sx0, sz0)]

    scale_met = plateau_met = even_odd = False
    while state.n < cfg.n_max:
        state = add_site(state, chain)
        state = truncate(state, cfg.n_keep, cfg.degeneracy_tol)
        ops = propagate(ops, state)
        sx_raw, sz_raw = ground_expectation_raw(state, ops, cfg.degeneracy_tol)
        history.append((state.n, sx_raw, sz_raw))
        scale_met = energy_scale(cfg.lam, state.n) < cfg.eta * delta_r
        plateau_met, even_odd = _plateau_status(
            history, cfg.plateau_window, cfg.plateau_tol
        )
        if scale_met and plateau_met:
            break

    if even_odd and len(history) >= 2:
        sx_raw = 0.5 * (history[-1][1] + history[-2][1])
        sz_raw = 0.5 * (history[-1][2] + history[-2][2])
    else:
        sx_raw, sz_raw = history[-1][1], history[-1][2]

    window = history[-cfg.plateau_window :]
    report = ConvergenceReport(
        n_m=state.n,
        converged=scale_met and plateau_met,
        scale_met=scale_met,
        plateau_met=plateau_met,
        even_odd_averaged=even_odd,
        delta_r=delta_r,
        omega_final=energy_scale(cfg.lam, state.n),
        drift_sx=_drift([h[1] for h in window]),
        drift_sz=_drift([h[2] for h in window]),
        sx_raw=sx_raw,
        sz_raw=sz_raw,
        sx=-sx_raw,
        sz=-sz_raw,
        history=tuple(history),
    )
    return state, report
