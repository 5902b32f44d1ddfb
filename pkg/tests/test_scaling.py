import math

import numpy as np
import pytest

from pseudospec import numkernel as nk
from pseudospec.errors import InsufficientData, InvalidArgument, NoCrossing
from pseudospec.operators import fd_sparse
from pseudospec.pseudospectrum import compute_grid, Region
from pseudospec.scaling import (
    DEFAULT_EPS,
    LineScan,
    contrast_werner_bound,
    counterexample_scan,
    crossings_from_scan,
    cubic_potential,
    fit_exponent,
    line_scan,
    semiclassical_boundary,
    semiclassical_transform,
    shifted_intersection,
)


class TestFit:
    def test_exact_power_law(self):
        eps = np.array(DEFAULT_EPS)
        fit = fit_exponent(list(zip(eps, np.log(1 / eps) ** (2 / 3))))
        assert fit.exponent_p == pytest.approx(2 / 3, abs=1e-10)
        assert fit.prefactor == pytest.approx(1.0, rel=1e-10)
        assert fit.r_squared == pytest.approx(1.0)

    def test_noisy(self):
        rng = np.random.default_rng(7)
        eps = np.array(DEFAULT_EPS)
        ps = []
        for _ in range(20):
            b = 1.7 * np.log(1 / eps) ** (2 / 3) * (1 + 0.01 * rng.standard_normal(eps.size))
            ps.append(fit_exponent(list(zip(eps, b))).exponent_p)
        assert all(0.65 <= p <= 0.69 for p in ps)

    def test_insufficient(self):
        with pytest.raises(InsufficientData):
            fit_exponent([(1e-2, 1), (1e-3, 2), (1e-4, 3)])
        with pytest.raises(InsufficientData):
            fit_exponent([(1e-2, 1), (3e-3, 2), (1e-3, 3), (5e-4, 4)])

    def test_report(self):
        eps = np.array(DEFAULT_EPS)
        rep = fit_exponent(list(zip(eps, np.log(1 / eps)))).report()
        assert set(rep) == {"pairs", "p", "prefactor", "r2", "eps_floor"}
        assert rep["eps_floor"] == 1e-8


class TestCrossings:
    def test_scalar_zero(self):
        scan = line_scan(np.zeros((1, 1)), -1, 1, 201)
        cr = crossings_from_scan(scan, [0.1, 0.3, 0.5], delta=0.05)
        assert np.allclose(cr, [-0.1, -0.3, -0.5], atol=1e-12)

    def test_scalar_zero_disk_covers_both_sides(self):
        scan = line_scan(np.zeros((1, 1)), -1, 1, 201)
        with pytest.raises(NoCrossing):
            crossings_from_scan(scan, [0.1], delta=0.5)

    def test_untrusted_segments_skipped(self):
        x = np.linspace(0, 4, 5)
        s = np.array([2.0, 0.5, 2.0, 0.5, 0.1])
        trusted = np.array([True, True, True, False, True])
        scan = LineScan(x, 0.0, s, trusted, np.array([]))
        assert crossings_from_scan(scan, [1.0], delta=0.1) == [pytest.approx(2 / 3)]

    def test_airy_increasing(self, airy_fd):
        scan = line_scan(airy_fd, 0, 8, 161)
        cr = crossings_from_scan(scan, DEFAULT_EPS)
        assert np.all(np.diff(cr) > 0)


class TestTransform:
    def test_unit(self):
        sc = semiclassical_transform(1.0, 1.0)
        assert sc.h == 1.0 and sc.kinetic == 1.0
        assert sc.potential.coefficients == (0, 0, -1, 1j)

    def test_tau4(self):
        sc = semiclassical_transform(2.0, 4.0)
        assert sc.h == pytest.approx(1 / 32, rel=1e-15)
        assert sc.potential.coefficients[2] == pytest.approx(-2.0 * (1 / 32) ** 0.4)
        with pytest.raises(InvalidArgument):
            semiclassical_transform(1.0, 0.0)

    @pytest.mark.parametrize("tau", [1.0, 1.5, 2.0])
    def test_resolvent_identity(self, tau):
        # two independent discretizations: the original operator on a wide box,
        # the scaled one on a different box and grid with diffusion h^2
        c = 1.0
        N1, L1 = 20000, 25.0
        A = fd_sparse(cubic_potential(c), N1, L1)
        lhs = 1 / nk.sparse_smallest_singular_value(1j * tau**3 * _eye(N1) - A)
        sc = semiclassical_transform(c, tau)
        N2, L2 = 12000, 7.0
        B = fd_sparse(sc.potential, N2, L2, kinetic=sc.kinetic)
        rhs = sc.unscaled_norm(1 / nk.sparse_smallest_singular_value(1j * _eye(N2) - B))
        assert abs(lhs - rhs) <= 0.01 * rhs


def _eye(n):
    import scipy.sparse as sp

    return sp.identity(n, format="csc", dtype=np.complex128)


class TestBoundary:
    def test_imaginary_axis(self):
        b = semiclassical_boundary(1.0, 0.0, (-1, 1), 11)
        assert np.all(b.real == 0)
        assert np.allclose(b.imag, np.linspace(-1, 1, 11) ** 3)

    def test_shifted_root(self):
        h, c, alpha = 0.05, 1.0, 2.0
        x = shifted_intersection(h, c, alpha)
        assert x == pytest.approx(h**0.4 * math.sqrt(alpha / c))
        b = semiclassical_boundary(h, c, (x, x), 2, alpha=alpha)
        assert abs(b[0].real) <= 1e-15

    def test_flattens(self):
        maxre = [np.max(np.abs(semiclassical_boundary(h, 1.0, (-1, 1), 201).real)) for h in (1, 1e-2, 1e-4, 1e-6)]
        assert np.all(np.diff(maxre) < 0) and maxre[-1] <= 1e-2

    def test_bad_args(self):
        with pytest.raises(InvalidArgument):
            semiclassical_boundary(1.0, 1.0, (0, 1), 1)
        with pytest.raises(InvalidArgument):
            shifted_intersection(1.0, 0.0, 1.0)


class TestCounterexample:
    def test_scan_structure(self):
        scan = counterexample_scan(1.0, [1.0, 1.5, 20.0], N=4000, L=25.0)
        assert scan.trusted.tolist() == [True, True, False]
        assert np.isnan(scan.resnorm[2])
        rows = list(scan.rows())
        assert rows[1][1] == pytest.approx(1.5**3)
        assert scan.meta["potential"] == "1i*x^3 - 1*x^2"

    def test_grid_converged(self):
        a = counterexample_scan(1.0, [1.0, 2.0], N=20000).resnorm
        b = counterexample_scan(1.0, [1.0, 2.0], N=40000).resnorm
        assert np.allclose(a, b, rtol=1e-3)

    def test_grows_at_large_tau(self):
        # the non-admissible operator's resolvent along i tau^3 eventually
        # grows; the admissible contrast decays on the same points
        tau = [4.0, 6.0, 8.0, 10.0, 12.0]
        bad = counterexample_scan(1.0, tau)
        assert bad.strictly_increasing() and bad.log_growth() > 1.5
        good = counterexample_scan(1.0, tau, sign=1.0)
        assert np.all(np.diff(good.resnorm) < 0)

    def test_contrast_below_werner(self):
        bound = contrast_werner_bound(1.0)
        good = counterexample_scan(1.0, np.linspace(1.0, 2.0, 6), sign=1.0)
        assert np.all(good.resnorm <= bound)
