import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pamkit import (BoxGeometry, OccupationMeasure, PotentialSample,
                    build_hamiltonian, classify_measure, dirichlet_form,
                    faber_krahn_check, full_spectrum, laplacian_ground_energy,
                    laplacian_ground_state, smallest_eigenvalues)
from conftest import random_measure

GAMMA_1D = 2.0 / (12.0 * math.pi) ** 2


def separable_spectrum(d, n):
    axis = 4.0 * np.sin(np.pi * np.arange(1, n + 1) / (2 * (n + 1))) ** 2
    sums = axis
    for _ in range(d - 1):
        sums = np.add.outer(sums, axis)
    return np.sort(np.ravel(sums))


class TestGeometry:
    def test_site_count_and_roundtrip(self):
        g = BoxGeometry(3, 4)
        assert g.n_sites == 64
        for idx in (0, 17, 63):
            assert g.site_index(g.site_coords(idx)) == idx

    def test_interior_neighbor_count(self):
        # every site of an n >= 2 box has between d and 2d interior neighbors
        for d, n in ((1, 2), (2, 3), (3, 2)):
            g = BoxGeometry(d, n)
            deficit = g.boundary_deficit()
            interior_deg = 2 * d - deficit
            assert interior_deg.min() >= d
            assert interior_deg.max() <= 2 * d

    def test_centered_roundtrip(self):
        g = BoxGeometry.centered(2, 5)
        assert g.n == 11
        assert g.halfwidth == 5

    def test_invalid(self):
        with pytest.raises(ValueError):
            BoxGeometry(0, 3)
        with pytest.raises(ValueError):
            BoxGeometry(1, 0)


class TestBuildHamiltonian:
    def test_single_site(self):
        H = build_hamiltonian(BoxGeometry(1, 1))
        assert H.apply(np.array([1.0]))[0] == pytest.approx(2.0, abs=1e-15)

    def test_boundary_deficit_on_constants(self):
        # interior rows of the pure Laplacian sum to zero
        g = BoxGeometry(2, 3)
        H = build_hamiltonian(g)
        out = H.apply(np.ones(9)).reshape(3, 3)
        expected = np.array([[2, 1, 2], [1, 0, 1], [2, 1, 2]], dtype=float)
        np.testing.assert_allclose(out, expected, atol=1e-14)

    def test_matrix_with_potential(self):
        g = BoxGeometry(1, 3)
        pot = PotentialSample(np.array([5.0, 0.0, 0.0]), 0, "test")
        H = build_hamiltonian(g, pot)
        expected = np.array([[7.0, -1, 0], [-1, 2, -1], [0, -1, 2]])
        np.testing.assert_allclose(H.dense(), expected)
        # smallest eigenvalue against a dense oracle
        oracle = np.linalg.eigvalsh(expected)[0]
        got = smallest_eigenvalues(H, 1).eigenvalues[0]
        assert got == pytest.approx(oracle, abs=1e-12)
        assert got == pytest.approx(0.914468, abs=1e-6)

    def test_size_mismatch(self):
        pot = PotentialSample(np.zeros(4), 0, "test")
        with pytest.raises(ValueError):
            build_hamiltonian(BoxGeometry(1, 3), pot)

    def test_nonfinite_potential_rejected(self):
        with pytest.raises(ValueError):
            PotentialSample(np.array([1.0, np.inf]), 0, "test")


class TestGroundData:
    def test_ground_energy_values(self):
        assert laplacian_ground_energy(1, 1) == pytest.approx(2.0, abs=1e-14)
        assert laplacian_ground_energy(2, 2) == pytest.approx(2.0, abs=1e-14)
        assert laplacian_ground_energy(1, 3) == pytest.approx(2.0 - math.sqrt(2.0), abs=1e-14)

    def test_ground_energy_matches_dense(self):
        for d, n in ((1, 7), (2, 5), (3, 3)):
            H = build_hamiltonian(BoxGeometry(d, n))
            e1 = np.linalg.eigvalsh(H.dense())[0]
            assert laplacian_ground_energy(d, n) == pytest.approx(e1, abs=1e-12)

    def test_ground_state_values(self):
        np.testing.assert_allclose(laplacian_ground_state(1, 1), [1.0])
        np.testing.assert_allclose(laplacian_ground_state(1, 3),
                                   [0.5, 1 / math.sqrt(2), 0.5], atol=1e-15)

    def test_ground_state_eigenpair(self):
        for d, n in ((1, 9), (2, 6), (3, 4)):
            g = BoxGeometry(d, n)
            H = build_hamiltonian(g)
            phi = laplacian_ground_state(d, n)
            assert abs(np.linalg.norm(phi) - 1.0) <= 1e-12
            assert np.all(phi > 0)
            resid = np.linalg.norm(H.apply(phi) - laplacian_ground_energy(d, n) * phi)
            assert resid <= 1e-10


class TestSpectra:
    def test_smallest_matches_closed_form(self):
        H = build_hamiltonian(BoxGeometry(1, 50))
        got = smallest_eigenvalues(H, 1).eigenvalues[0]
        assert got == pytest.approx(laplacian_ground_energy(1, 50), abs=1e-8)

    def test_separable_sums_d2(self):
        H = build_hamiltonian(BoxGeometry(2, 8))
        got = smallest_eigenvalues(H, 3, method="lanczos").eigenvalues
        np.testing.assert_allclose(got, separable_spectrum(2, 8)[:3], atol=1e-8)

    def test_constant_shift(self, rng):
        g = BoxGeometry(2, 4)
        c = 0.7321
        base = smallest_eigenvalues(build_hamiltonian(g), 4).eigenvalues
        pot = PotentialSample(np.full(g.n_sites, c), 0, "const")
        shifted = smallest_eigenvalues(build_hamiltonian(g, pot), 4).eigenvalues
        np.testing.assert_allclose(shifted, base + c, atol=1e-10)

    def test_full_spectrum_path3(self):
        vals = full_spectrum(build_hamiltonian(BoxGeometry(1, 3))).eigenvalues
        np.testing.assert_allclose(
            vals, [2 - math.sqrt(2), 2.0, 2 + math.sqrt(2)], atol=1e-12)

    def test_full_spectrum_path2(self):
        vals = full_spectrum(build_hamiltonian(BoxGeometry(1, 2))).eigenvalues
        np.testing.assert_allclose(vals, [1.0, 3.0], atol=1e-12)

    def test_trace_identity(self, rng):
        g = BoxGeometry(2, 5)
        pot = PotentialSample(rng.random(g.n_sites), 0, "rnd")
        H = build_hamiltonian(g, pot)
        vals = full_spectrum(H).eigenvalues
        expected = 2 * 2 * g.n_sites + pot.values.sum()
        assert vals.sum() == pytest.approx(expected, rel=1e-8)

    def test_full_vs_smallest_agree(self, rng):
        g = BoxGeometry(1, 40)
        pot = PotentialSample(rng.random(g.n_sites), 0, "rnd")
        H = build_hamiltonian(g, pot)
        k = 6
        a = full_spectrum(H).eigenvalues[:k]
        b = smallest_eigenvalues(H, k, method="lanczos").eigenvalues
        np.testing.assert_allclose(a, b, atol=1e-7)

    def test_dense_cap(self):
        H = build_hamiltonian(BoxGeometry(1, 10))
        with pytest.raises(ValueError):
            full_spectrum(H, cap=5)

    def test_monotone_in_potential(self, rng):
        g = BoxGeometry(1, 20)
        for _ in range(5):
            v = rng.random(g.n_sites)
            bump = rng.random(g.n_sites) * 0.5
            e1 = smallest_eigenvalues(
                build_hamiltonian(g, PotentialSample(v, 0, "a")), 1).eigenvalues[0]
            e2 = smallest_eigenvalues(
                build_hamiltonian(g, PotentialSample(v + bump, 0, "b")), 1).eigenvalues[0]
            assert e2 >= e1 - 1e-12


@settings(max_examples=25, deadline=None)
@given(d=st.integers(1, 3), n=st.integers(1, 5), seed=st.integers(0, 2**31))
def test_symmetry(d, n, seed):
    rng = np.random.default_rng(seed)
    g = BoxGeometry(d, n)
    pot = PotentialSample(rng.random(g.n_sites), 0, "h")
    H = build_hamiltonian(g, pot)
    u = rng.standard_normal(g.n_sites)
    v = rng.standard_normal(g.n_sites)
    lhs = u @ H.apply(v)
    rhs = H.apply(u) @ v
    assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(u) * np.linalg.norm(v)


class TestDirichletForm:
    def test_delta_center(self):
        for d, n in ((1, 9), (2, 7)):
            g = BoxGeometry(d, n)
            assert dirichlet_form(OccupationMeasure.delta(g)) == pytest.approx(2 * d, abs=1e-14)

    def test_ground_state_rayleigh(self):
        for d, n in ((1, 11), (2, 6)):
            g = BoxGeometry(d, n)
            p = OccupationMeasure.ground_state_square(g)
            assert dirichlet_form(p) == pytest.approx(
                laplacian_ground_energy(d, n), abs=1e-12)

    def test_uniform_1d_boundary_dominated(self):
        g = BoxGeometry(1, 100)
        p = OccupationMeasure(np.full(100, 0.01), g)
        # interior differences vanish; only the two boundary faces contribute
        assert dirichlet_form(p) == pytest.approx(2 / 100, abs=1e-15)

    def test_against_loop_oracle(self, rng):
        g = BoxGeometry(2, 4)
        p = random_measure(g, rng)
        q = np.sqrt(p.weights)
        total = 0.0
        for i in range(g.n_sites):
            xi = np.array(g.site_coords(i))
            for axis in range(g.d):
                for step in (-1, 1):
                    y = xi.copy()
                    y[axis] += step
                    if np.all((y >= 1) & (y <= g.n)):
                        total += 0.5 * (q[i] - q[g.site_index(y)]) ** 2
                    else:
                        total += p.weights[i]
        assert dirichlet_form(p) == pytest.approx(total, abs=1e-12)

    def test_rayleigh_lower_bound(self, rng):
        g = BoxGeometry(1, 30)
        e1 = laplacian_ground_energy(1, 30)
        for _ in range(20):
            assert dirichlet_form(random_measure(g, rng)) >= e1 - 1e-10

    def test_measure_validation(self):
        g = BoxGeometry(1, 4)
        with pytest.raises(ValueError):
            OccupationMeasure(np.array([0.5, 0.5, 0.25, 0.0]), g)
        with pytest.raises(ValueError):
            OccupationMeasure(np.array([1.5, -0.5, 0.0, 0.0]), g)


class TestClassifyMeasure:
    def test_delta_is_bin_one(self):
        g = BoxGeometry(1, 21)
        assert classify_measure(OccupationMeasure.delta(g), GAMMA_1D) == 1

    def test_exact_edge_goes_up(self):
        # a form value exactly at the gamma sin^2(pi/4) = gamma/2 edge
        # belongs to bin 2 (lower-open, upper-closed intervals)
        g = BoxGeometry(1, 3)
        p = OccupationMeasure.delta(g)
        gamma = 2.0 * dirichlet_form(p)
        assert classify_measure(p, gamma) == 2

    def test_wide_ground_state_bins_grow(self):
        gamma = GAMMA_1D
        bins = []
        for n in (240, 480, 960):
            g = BoxGeometry(1, n)
            bins.append(classify_measure(OccupationMeasure.ground_state_square(g), gamma))
        assert bins == sorted(bins)
        assert bins[0] >= 2 and bins[-1] >= 10

    def test_bins_partition(self, rng):
        # rough and smooth measures together sweep bin 1 and the deep bins;
        # each form value must land in exactly the interval its bin names
        gamma = GAMMA_1D
        big = BoxGeometry(1, 400)
        rough = BoxGeometry(1, 25)
        for trial in range(10_000):
            if trial % 2 == 0:
                p = random_measure(rough, rng)
            else:
                ell = int(rng.integers(1, 380))
                offset = int(rng.integers(0, 400 - ell))
                w = np.zeros(400)
                from pamkit import laplacian_ground_state
                w[offset:offset + ell] = laplacian_ground_state(1, ell) ** 2
                p = OccupationMeasure(w / w.sum(), big)
            f = dirichlet_form(p)
            ell_bin = classify_measure(p, gamma)
            assert ell_bin is not None and ell_bin >= 1
            if ell_bin == 1:
                assert gamma * 0.5 < f <= 2.0 + 1e-12
            else:
                lo = gamma * math.sin(math.pi / (2 * (ell_bin + 1))) ** 2
                hi = gamma * math.sin(math.pi / (2 * ell_bin)) ** 2
                assert lo < f <= hi


class TestFaberKrahn:
    def test_single_site_margin_zero(self):
        res = faber_krahn_check([(0,)], 2.0)
        assert res.satisfied
        assert res.margin == pytest.approx(0.0, abs=1e-12)
        assert res.ground_energy == pytest.approx(2.0, abs=1e-12)

    def test_path_scaling_increases(self):
        prev = 0.0
        for n in range(1, 51):
            e1 = laplacian_ground_energy(1, n)
            val = e1 * n**2
            assert val > prev
            prev = val
        assert prev < math.pi**2

    def test_exhaustive_1d_subsets(self):
        # intervals minimize the ground energy at fixed size, so checking all
        # subsets of a 10-site segment exercises the worst cases
        for mask in range(1, 2**10):
            sites = [(i,) for i in range(10) if mask >> i & 1]
            assert faber_krahn_check(sites, 2.0).satisfied

    def test_matches_box_solver(self):
        sites = [(i,) for i in range(7)]
        res = faber_krahn_check(sites, 2.0)
        assert res.ground_energy == pytest.approx(laplacian_ground_energy(1, 7), abs=1e-12)

    def test_2d_square(self):
        sites = [(i, j) for i in range(3) for j in range(3)]
        res = faber_krahn_check(sites, 1.0)
        assert res.ground_energy == pytest.approx(laplacian_ground_energy(2, 3), abs=1e-12)
        assert res.satisfied
