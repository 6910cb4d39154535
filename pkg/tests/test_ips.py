import itertools

import numpy as np
import pytest

from ipsteleport.errors import ConditioningError, DomainError
from ipsteleport.fock import TruncationConfig, validate_density, validate_povm_element
from ipsteleport.ips import (
    IpsParams,
    click_weight,
    effective_transmissivity,
    ips_state_direct,
    ips_state_simulated,
    ips_truncation,
    on_off_povm,
    p11_closed,
    p11_effective,
    p11_numerical,
    product_povm,
    product_povm_11,
    swap_modes,
    truncation_residual,
)


class TestParams:
    @pytest.mark.parametrize("x,tau,eta", [(0, 0.8, 1), (1, 0.8, 1), (0.5, 0, 1), (0.5, 1.1, 1), (0.5, 0.8, 0), (0.5, 0.8, 1.2)])
    def test_domain(self, x, tau, eta):
        with pytest.raises(DomainError):
            IpsParams(x, tau, eta)

    def test_tau_eff(self):
        assert IpsParams(0.5, 0.9, 0.5).tau_eff == pytest.approx(0.95)
        assert not IpsParams(0.5, 1.0, 0.5).can_condition


class TestPovm:
    def test_perfect_detector(self):
        p0, p1 = on_off_povm(1.0, 5)
        assert np.array_equal(p0.diagonal(), [1, 0, 0, 0, 0])

    def test_half_efficiency(self):
        p0, _ = on_off_povm(0.5, 5)
        assert p0.diagonal()[2] == 0.25

    @pytest.mark.parametrize("eta", [0.1, 0.5, 1.0])
    def test_vacuum_never_clicks(self, eta):
        _, p1 = on_off_povm(eta, 6)
        assert p1.diagonal()[0] == 0

    def test_complete_and_psd(self):
        p0, p1 = on_off_povm(0.3, 10)
        assert np.array_equal(p0.diagonal() + p1.diagonal(), np.ones(10))
        validate_povm_element(p0)
        validate_povm_element(p1)

    @pytest.mark.parametrize("eta", [0.0, -0.1, 1.5])
    def test_domain(self, eta):
        with pytest.raises(DomainError):
            on_off_povm(eta, 3)

    def test_product_11_entries(self):
        d = 4
        pi = product_povm_11(1.0, d).diagonal().reshape(d, d)
        assert pi[0, 0] == 0 and pi[1, 1] == 1
        pi = product_povm_11(0.5, d).diagonal().reshape(d, d)
        assert pi[1, 2] == pytest.approx(0.375, abs=1e-15)

    def test_product_completeness(self):
        # each single-detector pair sums to 1 exactly; the four products to round-off
        total = sum(product_povm(0.37, 7, o).diagonal().real for o in itertools.product((0, 1), repeat=2))
        assert np.abs(total - 1).max() <= 4 * np.finfo(float).eps


class TestEffectiveTransmissivity:
    def test_examples(self):
        assert effective_transmissivity(0.8, 1.0) == pytest.approx(0.8)
        assert effective_transmissivity(1.0, 0.3) == 1.0
        assert effective_transmissivity(0.9, 0.5) == pytest.approx(0.95)


class TestClickProbability:
    def test_reference(self):
        assert p11_closed(IpsParams(0.5, 0.8, 1.0)) == pytest.approx(1 / 56, abs=1e-15)

    def test_small_x(self):
        assert p11_closed(IpsParams(1e-6, 0.8)) < 1e-11

    def test_unit_tau_eff(self):
        assert p11_closed(IpsParams(0.5, 1.0, 0.7)) == 0
        assert p11_effective(0.5, 1.0) == 0

    @pytest.mark.parametrize("tau", [0.5, 0.7, 0.9, 0.99])
    @pytest.mark.parametrize("eta", [0.2, 0.6, 1.0])
    @pytest.mark.parametrize("x", [0.1, 0.5, 0.8])
    def test_effective_form_identity(self, x, tau, eta):
        p = IpsParams(x, tau, eta)
        assert abs(p11_closed(p) - p11_effective(x, p.tau_eff)) < 1e-14

    def test_numerical_reference(self):
        assert p11_numerical(IpsParams(0.5, 0.8, 1.0)) == pytest.approx(1 / 56, abs=1e-8)

    def test_numerical_lossy(self):
        p = IpsParams(0.3, 0.9, 0.8)
        assert abs(p11_numerical(p) - p11_closed(p)) < 1e-8

    def test_blind_detectors(self):
        assert p11_numerical(IpsParams(0.5, 0.8, 1e-6)) < 1e-10

    def test_monotone_in_x(self):
        for t in (0.5, 0.8, 0.9):
            vals = [p11_effective(x, t) for x in np.linspace(0.01, 0.99, 99)]
            assert np.all(np.diff(vals) > 0)

    def test_effective_domain(self):
        with pytest.raises(DomainError):
            p11_effective(1.5, 0.8)
        with pytest.raises(DomainError):
            p11_effective(0.5, 0.0)


class TestConditionalState:
    def test_click_weights(self):
        assert click_weight(1, 1, 0.8, 1.0) == pytest.approx(0.0625)
        assert np.all(click_weight(np.arange(6), 0, 0.7, 0.4) == 0)

    def test_vacuum_entry(self):
        # h = k = n removes every photon, so the vacuum survives conditioning
        p = IpsParams(0.5, 0.8, 1.0)
        direct = ips_state_direct(p).elems[0, 0].real
        assert direct == pytest.approx(ips_state_simulated(p).elems[0, 0].real, abs=1e-12)
        assert direct == pytest.approx(0.424242424242758, abs=1e-10)

    def test_normalized_and_valid(self):
        p = IpsParams(0.5, 0.8)
        for rho in (ips_state_direct(p), ips_state_simulated(p)):
            assert rho.trace() == pytest.approx(1, abs=1e-10)
            validate_density(rho)

    @pytest.mark.parametrize("x,tau,eta", [(0.3, 0.7, 0.5), (0.5, 0.9, 1.0), (0.6, 0.95, 0.8)])
    def test_routes_agree(self, x, tau, eta):
        p = IpsParams(x, tau, eta)
        assert np.abs(ips_state_direct(p).elems - ips_state_simulated(p).elems).max() < 1e-10

    def test_swap_symmetry(self):
        rho = ips_state_direct(IpsParams(0.4, 0.7, 0.6))
        assert np.abs(swap_modes(rho).elems - rho.elems).max() < 1e-12

    def test_unit_transmissivity_limit(self):
        # tau -> 1 leaves one photon taken from each arm: a b |twb>, normalized
        x = 0.5

        def distance(tau):
            rho = ips_state_simulated(IpsParams(x, tau))
            d = rho.trunc.dims[0]
            amps = np.zeros((d, d))
            n = np.arange(1, d)
            amps[n - 1, n - 1] = n * x**n
            v = amps.reshape(-1) / np.linalg.norm(amps)
            return 0.5 * np.abs(np.linalg.eigvalsh(rho.elems - np.outer(v, v))).sum()

        d1, d2, d3 = distance(0.99), distance(0.999), distance(0.9999)
        assert d3 < d2 < d1 and d3 < 1e-3

    def test_conditioning_undefined(self):
        with pytest.raises(ConditioningError):
            ips_state_direct(IpsParams(0.5, 1.0, 1.0))
        with pytest.raises(ConditioningError):
            ips_state_simulated(IpsParams(0.5, 1.0, 0.5))

    def test_truncation_relative_to_p11(self):
        p = IpsParams(0.5, 0.99)
        d = ips_truncation(p).dims[0]
        assert truncation_residual(IpsParams(0.5, 1.0), d) <= 1e-12 * p11_closed(p)

    def test_accepts_four_mode_trunc(self):
        p = IpsParams(0.3, 0.8)
        rho = ips_state_direct(p, TruncationConfig.uniform(20, 4))
        assert rho.trunc.dims == (20, 20)


# The efficiency/transmissivity equivalence holds for the click probability;
# whether it also holds for the heralded state is checked literally below.
EQUIV_GRID = list(itertools.product((0.7, 0.9, 0.99), (0.3, 0.8, 1.0)))


@pytest.mark.parametrize("tau,eta", EQUIV_GRID)
def test_p11_equivalence(tau, eta):
    p = IpsParams(0.5, tau, eta)
    assert abs(p11_closed(p) - p11_effective(0.5, p.tau_eff)) < 1e-14


@pytest.mark.parametrize("tau,eta", EQUIV_GRID)
def test_state_equivalence(tau, eta):
    p = IpsParams(0.5, tau, eta)
    eff = IpsParams.effective(0.5, p.tau_eff)
    trunc = ips_truncation(eff)
    diff = np.abs(ips_state_direct(p, trunc).elems - ips_state_direct(eff, trunc).elems).max()
    assert diff < 1e-12, f"state at (tau={tau}, eta={eta}) differs from tau_eff={p.tau_eff:.4g} by {diff:.3e}"
