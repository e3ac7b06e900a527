import math

import numpy as np
import pytest

from cavity_stability.disk import (
    G_threshold,
    adjoint_energy_bound_check,
    beta,
    bound_prefactor,
    disk_config,
    disk_energy_density,
    lower_bound_form,
    r0_threshold,
    stability_window,
)
from cavity_stability.elasticity import LameParams, boundary_traces, elastic_energy
from cavity_stability.exceptions import DomainError
from cavity_stability.geometry import RadialProfile
from cavity_stability.numerics import PeriodicGrid
from cavity_stability.variation import assemble, second_variation_terms, stability_spectrum
from conftest import solved
from oracles import G_defining, disk_energy, r0_defining
from test_oracles import G_ALPHA_1, G_ALPHA_HALF, R0_THRESHOLD, R0_THRESHOLD_R0_2

P = LameParams(1.0, 0.0)
THETA = PeriodicGrid(64).nodes


class TestConfig:
    def test_half_radius(self):
        cfg = disk_config(0.5, 1.0, 1.0, P)
        assert cfg.beta_r == pytest.approx(1.25, abs=1e-15)
        assert cfg.b == pytest.approx(0.8, abs=1e-15)
        assert cfg.a == pytest.approx(0.2, abs=1e-15)

    def test_negative_lambda(self):
        cfg = disk_config(0.5, 1.0, 1.0, LameParams(1.0, -0.5))
        assert cfg.beta_r == pytest.approx(1.125, abs=1e-15)
        assert cfg.b == pytest.approx(8 / 9, abs=1e-15)

    def test_zero_data(self):
        cfg = disk_config(0.5, 1.0, 0.0, P)
        assert cfg.a == 0 and cfg.b == 0 and cfg.energy() == 0

    @pytest.mark.parametrize("r,R0,alpha", [(0.5, 1.0, 1.0), (0.3, 2.0, -0.7), (0.99, 1.0, 3.0)])
    def test_outer_data(self, r, R0, alpha):
        cfg = disk_config(r, R0, alpha, LameParams(1.3, 0.4))
        assert cfg.radial(R0) == pytest.approx(alpha * R0, abs=1e-14)

    def test_energy_oracle(self):
        for r, lam in ((0.5, 0.0), (0.9, -0.5), (0.2, 2.0)):
            cfg = disk_config(r, 1.0, 1.0, LameParams(1.0, lam))
            assert cfg.energy() == pytest.approx(disk_energy(r, 1.0, 1.0, 1.0, lam), rel=1e-14)

    def test_bad_radius(self):
        with pytest.raises(DomainError):
            disk_config(1.0, 1.0, 1.0, P)

    def test_beta_vectorized(self):
        np.testing.assert_allclose(beta([0.0, 1.0], P, 1.0), [1.0, 2.0])


class TestDensity:
    def test_values(self):
        cfg = disk_config(0.5, 1.0, 1.0, P)
        assert disk_energy_density(cfg, 0.5) == pytest.approx(2.56, abs=1e-14)
        assert disk_energy_density(cfg, 1.0) == pytest.approx(1.36, abs=1e-14)

    def test_decreasing(self):
        cfg = disk_config(0.5, 1.0, 1.0, P)
        assert np.all(np.diff(disk_energy_density(cfg, np.linspace(0.5, 1.0, 50))) < 0)

    def test_outside_annulus(self):
        with pytest.raises(DomainError):
            disk_energy_density(disk_config(0.5, 1.0, 1.0, P), 0.4)

    def test_numerical_traces(self, disk_half):
        cfg = disk_config(0.5, 1.0, 1.0, P)
        rep = boundary_traces(disk_half[1])
        np.testing.assert_allclose(rep.boundary_Q, cfg.boundary_Q, atol=1e-8)
        np.testing.assert_allclose(rep.boundary_dQ_dnu, cfg.boundary_dQ_dnu, atol=1e-6)
        assert elastic_energy(disk_half[1]) == pytest.approx(cfg.energy(), rel=1e-8)


class TestThresholds:
    def test_r0(self):
        r0 = r0_threshold(P)
        assert r0 == pytest.approx(R0_THRESHOLD, abs=1e-8)
        assert r0_defining(r0 - 5e-3) > 0 > r0_defining(r0 + 5e-3)

    def test_r0_outer_radius(self):
        assert r0_threshold(P, R0=2.0) == pytest.approx(R0_THRESHOLD_R0_2, abs=1e-8)

    @pytest.mark.parametrize("alpha,expected", [(1.0, G_ALPHA_1), (0.5, G_ALPHA_HALF), (-1.0, G_ALPHA_1)])
    def test_G(self, alpha, expected):
        g = G_threshold(alpha, P)
        assert g == pytest.approx(expected, abs=1e-8)
        assert G_defining(g - 5e-3, alpha) > 0 > G_defining(g + 5e-3, alpha)

    def test_G_zero_alpha(self):
        assert G_threshold(0.0, P) == -math.inf

    def test_degenerate_eta(self):
        p = LameParams(1.0, -1.0 + 1e-14)
        assert r0_threshold(p) == 1.0
        rep = stability_window(1.0, p, 1.0, 0.99)
        assert rep.degenerate and rep.window is None and not rep.condition_met

    def test_r0_grows_as_eta_shrinks(self):
        lams = np.linspace(0.0, -0.9, 10)
        r0s = [r0_threshold(LameParams(1.0, lam)) for lam in lams]
        assert np.all(np.diff(r0s) > 0)

    def test_G_grows_with_alpha(self):
        gs = [G_threshold(a, P) for a in np.linspace(0.2, 3.0, 10)]
        assert np.all(np.diff(gs) > 0)

    def test_G_empty_for_tiny_alpha(self):
        # max of t log(1/t) beta^2 on (0, 1) is finite; tiny alpha exceeds it
        assert G_threshold(1e-3, P) == -math.inf


class TestWindow:
    def test_inside(self):
        rep = stability_window(1.0, P, 1.0, 0.995)
        assert rep.condition_met
        assert rep.window == pytest.approx((G_ALPHA_1, 1.0), abs=1e-8)

    def test_below(self):
        rep = stability_window(1.0, P, 1.0, 0.9)
        assert not rep.condition_met and rep.window is not None

    def test_zero_data(self):
        rep = stability_window(0.0, P, 1.0, 0.9)
        assert rep.unconditional_in_alpha and rep.condition_met
        assert rep.lower == pytest.approx(R0_THRESHOLD, abs=1e-8)

    def test_dict(self):
        d = stability_window(0.0, P, 1.0, 0.9).to_dict()
        assert d["G_alpha"] == "-inf" and d["margin_details"]["r_minus_G_alpha"] is None
        d = stability_window(1.0, P, 1.0, 0.995).to_dict()
        assert d["condition_met"] is True
        assert d["margin_details"]["r_minus_G_alpha"] == pytest.approx(0.995 - G_ALPHA_1, abs=1e-8)

    @pytest.mark.parametrize("alpha,r", [(1.0, 0.9930), (1.0, 0.9990), (0.0, 0.88), (0.5, 0.97)])
    def test_condition_implies_positive_spectrum(self, alpha, r):
        rep = stability_window(alpha, P, 1.0, r)
        assert rep.condition_met
        h = RadialProfile.circle(r, 64, 1.0)
        spec = stability_spectrum(assemble(h, solved(h, alpha), 8).restrict(range(2, 9)))
        assert spec.c0 > 0


class TestBound:
    def test_zero_data_form(self):
        cfg = disk_config(0.5, 1.0, 0.0, P)
        for n in range(1, 6):
            assert lower_bound_form(cfg, np.cos(n * THETA)) == pytest.approx(np.pi * (n * n - 1) / 0.5, abs=1e-12)

    def test_translation_mode(self):
        cfg = disk_config(0.995, 1.0, 1.0, P)
        assert lower_bound_form(cfg, np.sin(THETA)) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_prefactor_below_one_in_window(self, alpha):
        lo = G_threshold(alpha, P)
        for r in np.linspace(lo + 1e-6, 1 - 1e-6, 10):
            assert bound_prefactor(disk_config(r, 1.0, alpha, P)) < 1
        assert bound_prefactor(disk_config(0.7, 1.0, 1.0, P)) > 1

    def test_zero_data_check(self):
        chk = adjoint_energy_bound_check(disk_config(0.5, 1.0, 0.0, P), np.cos(2 * THETA), 0.0)
        assert chk.margin == 0 and chk

    def test_zero_direction(self):
        assert adjoint_energy_bound_check(disk_config(0.995, 1.0, 1.0, P), np.zeros(64), 0.0)

    @pytest.mark.parametrize("n", range(1, 9))
    def test_numeric_adjoint_energy_within_bound(self, disk_window, n):
        h, u = disk_window
        cfg = disk_config(0.995, 1.0, 1.0, P)
        psi = np.cos(n * h.theta)
        energy = -second_variation_terms(h, u, psi)["elastic"]
        chk = adjoint_energy_bound_check(cfg, psi, energy)
        assert chk.holds and chk.margin > 0
