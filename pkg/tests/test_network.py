"""Network model: coupling validation, rates, duals, trees, whitening, groups."""

import numpy as np
import pytest

from politewf.linalg import complex_gaussian, random_psd
from politewf.network import (
    CovarianceSet,
    EncodingOrder,
    NetworkSpec,
    all_link_rates,
    coupling_from_order,
    interference_covariance,
    is_itree,
    link_rate,
    pseudo_groups,
    reverse_network,
    sub_network,
    validate_coupling,
    whiten,
    with_coupling,
)

from conftest import fig2_network, random_mixed_net, scalar_mac, single_link


def scalar_net(hmat, phi):
    n = len(hmat)
    h = [[np.array([[hmat[l][k]]], dtype=complex) for k in range(n)] for l in range(n)]
    return NetworkSpec(h=h, coupling=np.array(phi, dtype=float),
                       tx_group=tuple(range(n)), rx_group=tuple(range(n, 2 * n)))


class TestValidateCoupling:
    def test_valid(self):
        net = scalar_net([[1, 1], [1, 1]], [[0, 1], [1, 0]])
        assert validate_coupling(net) == []

    def test_nonzero_diagonal(self):
        net = scalar_net([[1, 1], [1, 1]], [[1, 0], [0, 0]])
        issues = validate_coupling(net)
        assert any("diagonal" in msg for msg in issues)

    def test_non_binary(self):
        net = scalar_net([[1, 1], [1, 1]], [[0, 0.5], [1, 0]])
        issues = validate_coupling(net)
        assert any("non-binary" in msg for msg in issues)


class TestInterferenceCovariance:
    def test_scalar_substitution(self):
        net = scalar_net([[1, 1], [1, 1]], [[0, 1], [1, 0]])
        sigma = [np.array([[2.0 + 0j]]), np.array([[3.0 + 0j]])]
        assert interference_covariance(net, sigma, 0) == pytest.approx(4.0)
        assert interference_covariance(net, sigma, 1) == pytest.approx(3.0)

    def test_no_interference(self, rng):
        net = random_mixed_net(rng, 2)
        net = with_coupling(net, np.zeros((2, 2)))
        sigma = [random_psd(rng, net.tx_antennas(l)) for l in range(2)]
        for l in range(2):
            assert np.allclose(interference_covariance(net, sigma, l), np.eye(net.rx_antennas(l)))

    def test_matches_term_by_term_sum(self, rng):
        # Independent brute-force accumulation of the defining sum.
        net = random_mixed_net(rng, 2)
        sigma = [random_psd(rng, net.tx_antennas(l)) for l in range(2)]
        for l in range(2):
            expected = np.eye(net.rx_antennas(l), dtype=complex)
            for k in range(2):
                if net.coupling[l, k]:
                    hk = net.h[l][k]
                    expected = expected + hk @ sigma[k] @ hk.conj().T
            assert np.allclose(interference_covariance(net, sigma, l), expected, atol=1e-12)

    def test_positive_definite_when_noise_pd(self, rng):
        for _ in range(20):
            net = random_mixed_net(rng, 3)
            sigma = [random_psd(rng, net.tx_antennas(l)) for l in range(3)]
            for l in range(3):
                w = np.linalg.eigvalsh(interference_covariance(net, sigma, l))
                assert w.min() > 0


class TestLinkRate:
    def test_scalar_formula(self):
        net = scalar_net([[1, 1], [1, 1]], [[0, 1], [1, 0]])
        sigma = [np.array([[2.0 + 0j]]), np.array([[3.0 + 0j]])]
        assert link_rate(net, sigma, 0) == pytest.approx(np.log(1.5), abs=1e-12)

    def test_zero_input(self, rng):
        net = random_mixed_net(rng, 2)
        sigma = [np.zeros((net.tx_antennas(l),) * 2, dtype=complex) for l in range(2)]
        assert link_rate(net, sigma, 0) == pytest.approx(0.0, abs=1e-14)

    def test_monotone_in_own_covariance(self, rng):
        for _ in range(20):
            net = random_mixed_net(rng, 2)
            sigma = [random_psd(rng, net.tx_antennas(l)) for l in range(2)]
            bumped = [m.copy() for m in sigma]
            bumped[0] = bumped[0] + random_psd(rng, net.tx_antennas(0))
            assert link_rate(net, bumped, 0) >= link_rate(net, sigma, 0) - 1e-12


class TestReverseNetwork:
    def test_scalar_conjugate(self):
        net = single_link(np.array([[1 + 2j]]))
        rev = reverse_network(net)
        assert rev.h[0][0][0, 0] == (1 - 2j)

    def test_involution(self, rng):
        net = random_mixed_net(rng, 3)
        back = reverse_network(reverse_network(net))
        for l in range(3):
            for k in range(3):
                assert np.array_equal(back.h[l][k], net.h[l][k])
        assert np.array_equal(back.coupling, net.coupling)
        assert back.tx_group == net.tx_group and back.rx_group == net.rx_group

    def test_coupling_transposed(self, rng):
        net = random_mixed_net(rng, 3)
        assert np.array_equal(reverse_network(net).coupling, net.coupling.T)


class TestIsItree:
    def test_strictly_upper_gives_identity(self):
        phi = np.array([[0, 1, 1], [0, 0, 1], [0, 0, 0]])
        assert is_itree(phi) == (0, 1, 2)

    def test_mutual_interference_pair_has_no_order(self):
        phi = np.array([[0, 0, 1], [1, 0, 0], [1, 1, 0]])
        assert is_itree(phi) is None

    def test_matches_exhaustive_search(self, rng):
        # Oracle: try all permutations and check the defining property.
        from itertools import permutations

        def exhaustive(phi):
            n = phi.shape[0]
            for perm in permutations(range(n)):
                ok = all(phi[perm[i], perm[j]] == 0 for i in range(n) for j in range(i))
                if ok:
                    return perm
            return None

        for _ in range(100):
            n = int(rng.integers(2, 6))
            phi = (rng.random((n, n)) < 0.4).astype(float)
            np.fill_diagonal(phi, 0.0)
            got = is_itree(phi)
            want = exhaustive(phi)
            assert (got is None) == (want is None)
            if got is not None:
                n = phi.shape[0]
                assert sorted(got) == list(range(n))
                assert all(phi[got[i], got[j]] == 0 for i in range(n) for j in range(i))


class TestSubNetwork:
    def test_full_size_recovers_network(self, rng):
        net = fig2_network(rng)
        sigma = [random_psd(rng, 2) for _ in range(4)]
        sub, budget = sub_network(net, sigma, 4)
        for l in range(4):
            assert np.allclose(sub.noise(l), np.eye(2))
        assert budget == pytest.approx(sum(np.trace(m).real for m in sigma))

    def test_two_link_chain_prefix(self, rng):
        # Link 0 is interfered by link 1 only; freezing link 1 colors the noise.
        h01 = complex_gaussian(rng, (2, 2))
        h = [[complex_gaussian(rng, (2, 2)), h01],
             [np.zeros((2, 2), dtype=complex), complex_gaussian(rng, (2, 2))]]
        net = NetworkSpec(h=h, coupling=np.array([[0.0, 1.0], [0.0, 0.0]]),
                          tx_group=(0, 1), rx_group=(2, 3))
        sigma = [random_psd(rng, 2), random_psd(rng, 2)]
        sub, _ = sub_network(net, sigma, 1)
        assert np.allclose(sub.noise(0), np.eye(2) + h01 @ sigma[1] @ h01.conj().T)

    def test_prefix_rates_equal_full_network_rates(self, rng):
        net = fig2_network(rng)
        sigma = [random_psd(rng, 2) for _ in range(4)]
        full = all_link_rates(net, sigma)
        for i in (1, 2, 3, 4):
            sub, _ = sub_network(net, sigma, i)
            prefix = all_link_rates(sub, sigma[:i])
            assert np.allclose(prefix, full[:i], atol=1e-10)


class TestWhiten:
    def _colored(self, rng, n_links=2, n_ant=2):
        net = random_mixed_net(rng, n_links, max_ant=n_ant)
        noise = tuple(random_psd(rng, net.rx_antennas(l)) + 0.5 * np.eye(net.rx_antennas(l))
                      for l in range(n_links))
        weight = tuple(random_psd(rng, net.tx_antennas(l)) + 0.5 * np.eye(net.tx_antennas(l))
                       for l in range(n_links))
        return NetworkSpec(h=net.h, coupling=net.coupling, tx_group=net.tx_group,
                           rx_group=net.rx_group, noise_cov=noise, weight=weight)

    def test_identity_passthrough(self, rng):
        net = random_mixed_net(rng, 2)
        w = whiten(net)
        for l in range(2):
            assert np.allclose(w.network.h[l][l], net.h[l][l])

    def test_scalar_weight_scales_covariance(self):
        h = [[np.array([[1.0 + 0j]])]]
        net = NetworkSpec(h=h, coupling=np.zeros((1, 1)), tx_group=(0,), rx_group=(1,),
                          noise_cov=(np.array([[4.0 + 0j]]),), weight=(np.array([[2.0 + 0j]]),))
        w = whiten(net)
        sigma = [np.array([[3.0 + 0j]])]
        white_sigma = w.to_whitened(sigma)
        assert white_sigma[0][0, 0] == pytest.approx(6.0)
        assert link_rate(net, sigma, 0) == pytest.approx(link_rate(w.network, white_sigma, 0))

    def test_rates_and_constraint_invariant(self, rng):
        for _ in range(10):
            net = self._colored(rng)
            sigma = [random_psd(rng, net.tx_antennas(l)) for l in range(2)]
            w = whiten(net)
            ws = w.to_whitened(sigma)
            assert np.allclose(all_link_rates(net, sigma), all_link_rates(w.network, ws), atol=1e-10)
            colored_value = sum(np.trace(m @ net.weight_matrix(l)).real for l, m in enumerate(sigma))
            white_value = sum(np.trace(m).real for m in ws)
            assert white_value == pytest.approx(colored_value, rel=1e-10)
            back = w.from_whitened(ws)
            for a, b in zip(back, sigma):
                assert np.allclose(a, b, atol=1e-10)

    def test_rejects_singular_weight(self, rng):
        net = random_mixed_net(rng, 1, max_ant=2)
        bad = NetworkSpec(h=net.h, coupling=net.coupling, tx_group=net.tx_group,
                          rx_group=net.rx_group,
                          noise_cov=(np.zeros((net.rx_antennas(0),) * 2),),
                          weight=(None,))
        with pytest.raises(ValueError):
            whiten(bad)


class TestPseudoGroups:
    def test_single_receiver_mac_is_one_group(self, rng):
        net, _ = scalar_mac([1.0, 0.8, 1.2], decode_order=(0, 1, 2))
        groups = pseudo_groups(net)
        assert groups.mac == ((0, 1, 2),)
        assert groups.bc == ()

    def test_nonuniform_outside_coupling_excluded(self):
        # Three links; links 0 and 1 share a transmitter but link 2 is
        # interfered by link 0 only, breaking the all-or-none condition.
        h = [[np.ones((1, 1), dtype=complex)] * 3 for _ in range(3)]
        phi = np.array([[0, 0, 1], [0, 0, 1], [1, 0, 0]], dtype=float)
        net = NetworkSpec(h=h, coupling=phi, tx_group=("a", "a", "b"), rx_group=(0, 1, 2))
        groups = pseudo_groups(net)
        assert groups.bc == ()


class TestEncodingOrder:
    def test_coupling_from_order_mac(self):
        net, order = scalar_mac([1.0, 1.0], decode_order=(0, 1))
        assert np.array_equal(net.coupling, [[0, 1], [0, 0]])
        net2, _ = scalar_mac([1.0, 1.0], decode_order=(1, 0))
        assert np.array_equal(net2.coupling, [[0, 0], [1, 0]])

    def test_validate_rejects_bad_permutation(self, rng):
        net = fig2_network(rng)
        order = EncodingOrder(encode={"t1": (0,), "t23": (1,), "t4": (3,)},
                              decode={"r12": (0, 1), "r3": (2,), "r4": (3,)})
        with pytest.raises(ValueError):
            coupling_from_order(net, order)

    def test_zero_channel_pairs_never_couple(self, rng):
        net = fig2_network(rng)
        order = EncodingOrder(
            encode={"t1": (0,), "t23": (1, 2), "t4": (3,)},
            decode={"r12": (0, 1), "r3": (2,), "r4": (3,)},
        )
        phi = coupling_from_order(net, order)
        # t1 does not reach r3/r4 and t23 does not reach r4.
        assert phi[2, 0] == 0 and phi[3, 0] == 0 and phi[3, 1] == 0 and phi[3, 2] == 0
        # SIC at r12 and DPC at t23 with this order reproduce the tree coupling.
        assert np.array_equal(phi, np.array([[0, 1, 1, 1], [0, 0, 1, 1],
                                             [0, 0, 0, 1], [0, 0, 0, 0]], dtype=float))


class TestCovarianceSet:
    def test_clamps_small_negatives(self, rng):
        m = random_psd(rng, 3)
        w, v = np.linalg.eigh(m)
        w[0] = -5e-11
        dirty = (v * w) @ v.conj().T
        cleaned = CovarianceSet.clamped([dirty])
        assert cleaned.violations() == []
        assert np.linalg.eigvalsh(cleaned[0]).min() >= 0

    def test_flags_non_hermitian(self, rng):
        m = complex_gaussian(rng, (3, 3))
        assert CovarianceSet((m,)).violations()
