import numpy as np
import pytest

from claritk.errors import InsufficientPoints, OutOfRange
from claritk.rheology import (
    Rheogram,
    RheologyKind,
    RheologyModel,
    apparent_viscosity,
    export_transport_properties,
    fit_rheology,
    newtonian_defaults,
    shear_stress,
)


def rheogram_from_model(model, gammas):
    return Rheogram(np.asarray(gammas, float), shear_stress(model, gammas))


class TestApparentViscosity:
    def test_power_law_n1_is_newtonian(self):
        m = RheologyModel(RheologyKind.POWER_LAW, K=0.37, n=1.0)
        for g in (0.01, 1.0, 250.0):
            assert apparent_viscosity(m, g) == pytest.approx(0.37, rel=1e-15)

    def test_bingham_zero_yield_is_plastic_viscosity(self):
        m = RheologyModel(RheologyKind.BINGHAM, tau_y=0.0, mu_p=0.02)
        for g in (0.0, 1e-3, 5.0, 1e4):
            assert apparent_viscosity(m, g) == 0.02

    def test_herschel_bulkley_direct_evaluation(self):
        m = RheologyModel(RheologyKind.HERSCHEL_BULKLEY, tau_y=2.0, K=0.5, n=0.6)
        expected = (2.0 + 0.5 * 10.0 ** 0.6) / 10.0
        assert apparent_viscosity(m, 10.0) == pytest.approx(expected, rel=1e-15)

    def test_regularization_caps_low_shear(self):
        m = RheologyModel(RheologyKind.BINGHAM, tau_y=1.5, mu_p=0.02, gamma_reg=1e-3)
        assert apparent_viscosity(m, 0.0) == apparent_viscosity(m, 1e-3)
        assert np.isfinite(apparent_viscosity(m, 0.0))

    def test_continuity_and_monotonicity_shear_thinning(self):
        models = [
            RheologyModel(RheologyKind.BINGHAM, tau_y=1.5, mu_p=0.02),
            RheologyModel(RheologyKind.POWER_LAW, K=0.8, n=0.5),
            RheologyModel(RheologyKind.HERSCHEL_BULKLEY, tau_y=2.0, K=0.5, n=0.6),
        ]
        gammas = np.logspace(-6, 4, 400)
        for m in models:
            mu = apparent_viscosity(m, gammas)
            assert np.all(np.isfinite(mu))
            assert np.all(np.diff(mu) <= 1e-15 * mu[:-1] + 1e-30)

    def test_stress_reconstruction(self):
        models = [
            RheologyModel(RheologyKind.NEWTONIAN, mu=1e-3),
            RheologyModel(RheologyKind.BINGHAM, tau_y=1.5, mu_p=0.02),
            RheologyModel(RheologyKind.POWER_LAW, K=0.8, n=0.5),
            RheologyModel(RheologyKind.HERSCHEL_BULKLEY, tau_y=2.0, K=0.5, n=0.6),
        ]
        gammas = np.logspace(-3, 4, 200)  # >= gamma_reg
        for m in models:
            tau = apparent_viscosity(m, gammas) * gammas
            assert tau == pytest.approx(shear_stress(m, gammas), rel=1e-12)


class TestFits:
    def test_bingham_exact_recovery(self):
        truth = RheologyModel(RheologyKind.BINGHAM, tau_y=1.5, mu_p=0.02)
        data = rheogram_from_model(truth, np.linspace(1.0, 100.0, 12))
        m = fit_rheology(RheologyKind.BINGHAM, data)
        assert m.tau_y == pytest.approx(1.5, rel=1e-12)
        assert m.mu_p == pytest.approx(0.02, rel=1e-12)
        assert m.residual <= 1e-10

    def test_power_law_exact_recovery(self):
        truth = RheologyModel(RheologyKind.POWER_LAW, K=0.8, n=0.5)
        data = rheogram_from_model(truth, np.logspace(-1, 2, 15))
        m = fit_rheology(RheologyKind.POWER_LAW, data)
        assert m.K == pytest.approx(0.8, rel=1e-9)
        assert m.n == pytest.approx(0.5, rel=1e-9)
        assert m.residual <= 1e-10

    def test_herschel_bulkley_exact_recovery(self):
        truth = RheologyModel(RheologyKind.HERSCHEL_BULKLEY, tau_y=2.0, K=0.5, n=0.6)
        data = rheogram_from_model(truth, np.logspace(-1, 2, 15))
        m = fit_rheology(RheologyKind.HERSCHEL_BULKLEY, data)
        assert m.tau_y == pytest.approx(2.0, rel=1e-6)
        assert m.K == pytest.approx(0.5, rel=1e-6)
        assert m.n == pytest.approx(0.6, rel=1e-6)
        assert m.residual <= 1e-10

    def test_insufficient_points(self):
        g = np.array([1.0, 2.0])
        data = Rheogram(g, np.array([1.0, 1.5]))
        with pytest.raises(InsufficientPoints):
            fit_rheology(RheologyKind.HERSCHEL_BULKLEY, data)
        with pytest.raises(InsufficientPoints):
            fit_rheology(RheologyKind.BINGHAM, Rheogram(g[:1], np.array([1.0])))

    def test_negative_yield_clamped_with_flag(self):
        # data lying on a line with a negative intercept: OLS would give
        # tau_y < 0, which must be clamped and flagged
        g = np.linspace(1.0, 10.0, 8)
        tau = np.maximum(0.05 * g - 0.1, 0.0) + 1e-4
        m = fit_rheology(RheologyKind.BINGHAM, Rheogram(g, tau))
        assert m.tau_y == 0.0
        assert m.tau_y_clamped

    def test_fit_in_stress_space(self):
        # noise applied in stress space keeps the stress-space residual small
        rng = np.random.default_rng(21)
        truth = RheologyModel(RheologyKind.BINGHAM, tau_y=1.5, mu_p=0.02)
        g = np.linspace(1.0, 100.0, 30)
        tau = shear_stress(truth, g) + rng.normal(0.0, 1e-3, g.size)
        m = fit_rheology(RheologyKind.BINGHAM, Rheogram(g, tau))
        assert m.tau_y == pytest.approx(1.5, rel=0.02)
        assert m.mu_p == pytest.approx(0.02, rel=0.02)


class TestWaterDefaults:
    def test_table_value_at_20C(self):
        m = newtonian_defaults(20.0)
        assert m.kind is RheologyKind.NEWTONIAN
        assert m.mu == pytest.approx(1.002e-3, rel=1e-6)

    def test_midpoint_interpolation(self):
        mu20 = newtonian_defaults(20.0).mu
        mu21 = newtonian_defaults(21.0).mu
        assert newtonian_defaults(20.5).mu == pytest.approx((mu20 + mu21) / 2.0, rel=1e-12)

    def test_monotonic_decreasing_over_table(self):
        temps = np.arange(1.0, 100.0)
        mus = [newtonian_defaults(t).mu for t in temps]
        assert all(a > b for a, b in zip(mus, mus[1:]))

    def test_out_of_range(self):
        for t in (0.0, -5.0, 100.0, 140.0):
            with pytest.raises(OutOfRange):
                newtonian_defaults(t)


def test_model_validation():
    with pytest.raises(ValueError):
        RheologyModel(RheologyKind.BINGHAM, tau_y=-1.0, mu_p=0.02)
    with pytest.raises(ValueError):
        RheologyModel(RheologyKind.POWER_LAW, K=0.5, n=0.0)
    with pytest.raises(ValueError):
        RheologyModel(RheologyKind.NEWTONIAN, mu=1e-3, gamma_reg=0.0)


def test_export_mirrors_transport_vocabulary():
    m = RheologyModel(RheologyKind.HERSCHEL_BULKLEY, tau_y=2.0, K=0.5, n=0.6)
    text = export_transport_properties(m)
    assert "transportModel herschelbulkley;" in text
    assert "tau_y 2.0;" in text and "K 0.5;" in text and "n 0.6;" in text
    newton = export_transport_properties(newtonian_defaults(20.0))
    assert "mu " in newton and "tau_y" not in newton
