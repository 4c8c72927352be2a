import math

import numpy as np
import pytest

from spinboson_nrg import (
    DomainError,
    KondoParams,
    NRGConfig,
    OperatorBlocks,
    SpinBosonPoint,
    add_site,
    build_chain,
    entanglement_entropy,
    exact_ground,
    expectation_values,
    find_alpha_max,
    ground_expectation_raw,
    init_impurity_site,
    init_operator_blocks,
    map_to_kondo,
    propagate,
    run,
    truncate,
)
from spinboson_nrg.engine import ConvergenceReport
from spinboson_nrg.observables import ConvergenceError
from spinboson_nrg.oracle import sector_hamiltonians, spin_flip_matrix

GENERIC = KondoParams(rho0_jperp=0.1, rho0_jpar=0.6, field=0.05)


def _trajectory(k, chain, sites, n_keep=None):
    st = init_impurity_site(k)
    ops = init_operator_blocks(st)
    for _ in range(sites - 1):
        st = add_site(st, chain)
        if n_keep is not None:
            st = truncate(st, n_keep)
        ops = propagate(ops, st)
    return st, ops


class TestInitOperatorBlocks:
    def test_spin_flip_structure(self):
        st = init_impurity_site(GENERIC)
        ops = init_operator_blocks(st)
        # only the two-dimensional (0, 0) sector hosts the spin flip
        for sec, m in ops.ox.items():
            if (sec.q, sec.two_sz) == (0, 0):
                assert np.allclose(np.abs(np.linalg.eigvalsh(m)), [1.0, 1.0])
            else:
                assert np.max(np.abs(m)) < 1e-14

    def test_impurity_sz_diagonal(self):
        st = init_impurity_site(GENERIC)
        ops = init_operator_blocks(st)
        for sec, m in ops.oz.items():
            w = np.linalg.eigvalsh(m)
            assert np.all(np.isin(np.round(2 * w), [-1, 1]))

    def test_blocks_symmetric(self):
        st = init_impurity_site(GENERIC)
        ops = init_operator_blocks(st)
        for m in list(ops.ox.values()) + list(ops.oz.values()):
            assert np.max(np.abs(m - m.T)) < 1e-14


class TestPropagate:
    def test_identity_stays_identity(self):
        chain = build_chain(2.0, 4)
        st = init_impurity_site(GENERIC)
        eye = {s: np.eye(b.kept) for s, b in st.blocks.items()}
        ops = OperatorBlocks(n=0, ox=dict(eye), oz=dict(eye))
        for _ in range(3):
            st = add_site(st, chain)
            st = truncate(st, 100)
            ops = propagate(ops, st)
            for s, b in st.blocks.items():
                assert np.max(np.abs(ops.ox[s] - np.eye(b.kept))) < 1e-12

    def test_hermiticity_preserved_long_run(self):
        p = SpinBosonPoint(alpha=0.4, epsilon=0.1, delta_ratio=0.04)
        k = map_to_kondo(p)
        chain = build_chain(2.0, 51)
        st = init_impurity_site(k)
        ops = init_operator_blocks(st)
        for _ in range(50):
            st = add_site(st, chain)
            st = truncate(st, 150)
            ops = propagate(ops, st)
        worst = max(
            float(np.max(np.abs(m - m.T)))
            for blocks in (ops.ox, ops.oz)
            for m in blocks.values()
        )
        assert worst < 1e-9

    def test_untruncated_blocks_match_direct_evaluation(self):
        # basis-independent data: the per-sector spectrum of the operator
        # restricted to the sector, computed directly in the oracle basis
        chain = build_chain(2.0, 3)
        st, ops = _trajectory(GENERIC, chain, 3)
        hams, basis = sector_hamiltonians(GENERIC, chain, 3)
        for sec, m in ops.ox.items():
            direct = spin_flip_matrix(basis, sec)
            w_prop = np.linalg.eigvalsh(m)
            w_direct = np.linalg.eigvalsh(direct)
            assert np.max(np.abs(w_prop - w_direct)) < 1e-10

    def test_wrong_iteration_rejected(self):
        chain = build_chain(2.0, 3)
        st = init_impurity_site(GENERIC)
        ops = init_operator_blocks(st)
        st = add_site(st, chain)
        st = add_site(st, chain)
        with pytest.raises(ValueError, match="propagate"):
            propagate(ops, st)


class TestExpectationValues:
    def test_matches_oracle_raw(self):
        chain = build_chain(2.0, 4)
        st, ops = _trajectory(GENERIC, chain, 4)
        exact = exact_ground(GENERIC, chain, 4)
        sx_raw, sz_raw = ground_expectation_raw(st, ops)
        assert sx_raw == pytest.approx(exact.sx_raw, abs=1e-10)
        assert sz_raw == pytest.approx(exact.sz_raw, abs=1e-10)

    def test_sign_convention(self):
        chain = build_chain(2.0, 4)
        st, ops = _trajectory(GENERIC, chain, 4)
        sx, sz = expectation_values(st, ops)
        raw = ground_expectation_raw(st, ops)
        assert sx == -raw[0] and sz == -raw[1]
        assert sx > 0.0 and sz > 0.0  # figure convention

    def test_unconverged_refusal(self):
        p = SpinBosonPoint(alpha=0.5, epsilon=0.0, delta_ratio=0.04)
        k = map_to_kondo(p)
        state, report = run(k, NRGConfig(n_max=8))
        assert not report.converged
        with pytest.raises(ConvergenceError, match="not converged"):
            expectation_values(state, None, report=report)
        assert math.isfinite(report.sx) and math.isfinite(report.sz)

    def test_energy_derivative_identity_alpha_02(self):
        # correlator vs central difference of the chain ground energy, on
        # identical chain lengths, within 1%
        from dataclasses import replace

        p = SpinBosonPoint(alpha=0.2, epsilon=0.0, delta_ratio=0.04)
        k = map_to_kondo(p)
        cfg = NRGConfig()
        _, report = run(k, cfg)

        def e0(kk):
            chain = build_chain(cfg.lam, report.n_m)
            st = init_impurity_site(kk, config=cfg)
            for _ in range(report.n_m):
                st = add_site(st, chain)
                st = truncate(st, cfg.n_keep, cfg.degeneracy_tol)
            return st.e0_accumulated

        r = 1e-4
        deriv = (
            e0(replace(k, rho0_jperp=k.rho0_jperp * (1 + r)))
            - e0(replace(k, rho0_jperp=k.rho0_jperp * (1 - r)))
        ) / (r * k.jperp)
        assert abs(report.sx - (-deriv)) / abs(report.sx) <= 0.01


class TestEntanglementEntropy:
    def test_pure_product_state(self):
        assert entanglement_entropy(1.0, 0.0) == (1.0, 0.0, 0.0)

    def test_maximally_mixed(self):
        p_plus, p_minus, e = entanglement_entropy(0.0, 0.0)
        assert (p_plus, p_minus) == (0.5, 0.5)
        assert e == 1.0

    def test_norm_0p6(self):
        p_plus, p_minus, e = entanglement_entropy(0.6, 0.0)
        assert p_plus == pytest.approx(0.8, abs=1e-15)
        assert p_minus == pytest.approx(0.2, abs=1e-15)
        assert e == pytest.approx(0.7219280948873623, abs=1e-12)

    def test_depends_only_on_norm(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            norm = rng.uniform(0, 1)
            theta = rng.uniform(0, 2 * math.pi)
            e1 = entanglement_entropy(norm * math.cos(theta), norm * math.sin(theta))[2]
            e2 = entanglement_entropy(norm, 0.0)[2]
            assert abs(e1 - e2) < 1e-12

    def test_binary_entropy_symmetry(self):
        for norm in np.linspace(0, 1, 21):
            p_plus, p_minus, e = entanglement_entropy(float(norm), 0.0)
            h = 0.0
            for p in (p_minus, p_plus):  # swapped arguments, same entropy
                if p > 0:
                    h -= p * math.log2(p)
            assert abs(e - h) < 1e-15

    def test_clamp_and_error(self):
        # slightly over one is clamped, far over one is nonphysical
        assert entanglement_entropy(1.0 + 5e-7, 0.0)[2] == 0.0
        with pytest.raises(DomainError, match="nonphysical"):
            entanglement_entropy(1.1, 0.0)


class TestFindAlphaMax:
    def test_zero_bias_rejected(self):
        with pytest.raises(DomainError, match="eps_over_delta"):
            find_alpha_max(0.0, 0.04, NRGConfig())

    def test_monotone_entropy_rejected(self):
        with pytest.raises(DomainError, match="no interior maximum"):
            find_alpha_max(0.1, 0.04, NRGConfig(), evaluate=lambda a: a)

    def test_quadratic_profile_located(self):
        result = find_alpha_max(
            0.1, 0.04, NRGConfig(), evaluate=lambda a: 1.0 - (a - 0.37) ** 2
        )
        assert abs(result.alpha_m - 0.37) <= 0.01
        assert result.entropy_max == pytest.approx(1.0, abs=1e-3)
        assert result.n_evaluations == len(result.evaluations)
