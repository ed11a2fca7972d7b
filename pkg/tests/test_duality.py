"""SINR duality, dual power solves, and the covariance transformation."""

import numpy as np
import pytest

from politewf.duality import (
    DualScaling,
    InfeasibleTargetsError,
    covariance_transformation,
    dual_powers,
    forward_powers,
)
from politewf.linalg import random_psd, complex_gaussian
from politewf.network import all_link_rates, link_rate, reverse_network
from politewf.streams import (
    crosstalk,
    decompose_eigen,
    flatten,
    forward_sinrs,
    mmse_sic_receivers,
    reverse_sinrs,
    split_flat,
    stream_gains,
)
from politewf.waterfill import assemble_forward, polite_waterfill

from conftest import random_mixed_net, single_link


def build_strategy(net, sigmas):
    t, p = [], []
    for m in sigmas:
        tl, pl = decompose_eigen(m)
        t.append(tl)
        p.append(pl)
    r = mmse_sic_receivers(net, t, p)
    return t, r, p


class TestDualPowers:
    def test_single_stream_no_crosstalk(self):
        scaling = DualScaling(gamma0=np.array([2.0]), gains=np.array([0.5]))
        q = dual_powers(scaling, np.zeros((1, 1)))
        assert q == pytest.approx([4.0])

    def test_decoupled_streams_unchanged(self):
        scaling = DualScaling(gamma0=np.array([1.0, 3.0]), gains=np.array([1.0, 1.5]))
        q = dual_powers(scaling, np.zeros((2, 2)))
        p = forward_powers(scaling, np.zeros((2, 2)))
        assert np.allclose(q, p)
        assert q == pytest.approx([1.0, 2.0])

    def test_lemma_roundtrip_on_random_networks(self, rng):
        # Sum power equality plus matching reverse SINRs, then back again.
        for _ in range(30):
            net = random_mixed_net(rng, 2, max_ant=3)
            sigmas = [random_psd(rng, net.tx_antennas(l)) for l in range(2)]
            t, r, p = build_strategy(net, sigmas)
            counts = [m.shape[1] for m in t]
            gam = forward_sinrs(net, t, r, p)
            psi = crosstalk(net, t, r)
            gains = flatten(stream_gains(net, t, r))
            scaling = DualScaling(gamma0=flatten(gam), gains=gains)
            q_flat = dual_powers(scaling, psi)
            assert q_flat.sum() == pytest.approx(flatten(p).sum(), rel=1e-9)
            q = split_flat(q_flat, counts)
            ghat = reverse_sinrs(net, t, r, q)
            assert np.abs(flatten(ghat) - flatten(gam)).max() <= 1e-9 * (1 + flatten(gam).max())
            back = forward_powers(DualScaling(gamma0=flatten(ghat), gains=gains), psi)
            assert np.abs(back - flatten(p)).max() <= 1e-8 * (1 + flatten(p).max())

    def test_infeasible_targets_raise(self):
        # Two mutually interfering streams with targets beyond the
        # interference-limited region have no positive power solution.
        psi = np.array([[0.0, 1.0], [1.0, 0.0]])
        scaling = DualScaling(gamma0=np.array([2.0, 2.0]), gains=np.array([1.0, 1.0]))
        with pytest.raises(InfeasibleTargetsError):
            dual_powers(scaling, psi)

    def test_zero_gain_with_positive_target_rejected(self):
        with pytest.raises(InfeasibleTargetsError):
            DualScaling(gamma0=np.array([1.0]), gains=np.array([0.0]))

    def test_zero_target_streams_get_zero_power(self):
        psi = np.array([[0.0, 0.5], [0.5, 0.0]])
        scaling = DualScaling(gamma0=np.array([1.0, 0.0]), gains=np.array([1.0, 1.0]))
        q = dual_powers(scaling, psi)
        assert q[1] == 0.0
        assert q[0] == pytest.approx(1.0)


class TestCovarianceTransformation:
    def test_single_user_scalar_identity(self):
        net = single_link(np.array([[1.0]]))
        out = covariance_transformation(net, [np.array([[2.5 + 0j]])])
        assert out[0][0, 0] == pytest.approx(2.5)
        rev = reverse_network(net)
        assert link_rate(rev, out, 0) == pytest.approx(link_rate(net, [np.array([[2.5]])], 0))

    def test_single_user_waterfilling_is_rate_preserving(self, rng):
        # Equality case: a water-filling input is a Pareto point.
        h = complex_gaussian(rng, (3, 3))
        net = single_link(h)
        eye = np.eye(3, dtype=complex)
        dec = polite_waterfill(eye, h, eye, budget=5.0)
        sigma = assemble_forward(dec.channel.g, eye, dec.d)
        out = covariance_transformation(net, [sigma])
        rev = reverse_network(net)
        assert link_rate(rev, out, 0) == pytest.approx(link_rate(net, [sigma], 0), abs=1e-9)

    def test_reverse_rates_dominate_and_power_preserved(self, rng):
        for _ in range(100):
            net = random_mixed_net(rng, 3, max_ant=3)
            sigmas = [random_psd(rng, net.tx_antennas(l)) for l in range(3)]
            out = covariance_transformation(net, sigmas)
            fwd = all_link_rates(net, sigmas)
            rev = all_link_rates(reverse_network(net), out)
            assert np.all(rev >= fwd - 1e-9)
            power_fwd = sum(np.trace(m).real for m in sigmas)
            assert out.sum_power() == pytest.approx(power_fwd, rel=1e-9)

    def test_double_transformation_never_decreases_rates(self, rng):
        for _ in range(20):
            net = random_mixed_net(rng, 2, max_ant=3)
            sigmas = [random_psd(rng, net.tx_antennas(l)) for l in range(2)]
            rev_net = reverse_network(net)
            once = covariance_transformation(net, sigmas)
            twice = covariance_transformation(rev_net, once)
            assert np.all(all_link_rates(net, twice) >= all_link_rates(net, sigmas) - 1e-9)

    def test_requires_white_network(self, rng):
        from politewf.network import NetworkSpec

        net = random_mixed_net(rng, 1, max_ant=2)
        colored = NetworkSpec(h=net.h, coupling=net.coupling, tx_group=net.tx_group,
                              rx_group=net.rx_group,
                              noise_cov=(2 * np.eye(net.rx_antennas(0)),))
        with pytest.raises(ValueError):
            covariance_transformation(colored, [np.eye(net.tx_antennas(0))])


class TestWaterfillingDualStructure:
    def test_transformed_covariance_waterfills_reverse_channel(self, rng):
        # Replace link 0's covariance by a polite water-filling one (link 1
        # fixed) and iterate until the reverse interference seen by link 0
        # is consistent with the replacement; then the transformed
        # covariance must water-fill the reversed equivalent channel:
        # aligned basis and clipped-level profile.
        from politewf.network import interference_covariance
        from politewf.waterfill import equivalent_channel, structure_residual
        from politewf.linalg import sqrt_psd

        for _ in range(8):
            net = random_mixed_net(rng, 2, max_ant=3)
            sigmas = [random_psd(rng, net.tx_antennas(l)) for l in range(2)]
            rev_net = reverse_network(net)
            target = link_rate(net, sigmas, 0)
            omega0 = interference_covariance(net, sigmas, 0)
            residual = np.inf
            for _ in range(400):
                sigma_hat = covariance_transformation(net, sigmas)
                omega_hat0 = interference_covariance(rev_net, sigma_hat, 0)
                dec = polite_waterfill(omega0, net.h[0][0], omega_hat0, rate_target=target)
                sigmas[0] = assemble_forward(dec.channel.g, omega_hat0, dec.d)
                sigma_hat = covariance_transformation(net, sigmas)
                omega_hat0 = interference_covariance(rev_net, sigma_hat, 0)
                chan = equivalent_channel(omega0, net.h[0][0], omega_hat0)
                q_hat = sqrt_psd(omega0) @ sigma_hat[0] @ sqrt_psd(omega0)
                residual = structure_residual(q_hat, chan.f, chan.delta)
                if residual <= 1e-8:
                    break
            assert residual <= 1e-6
