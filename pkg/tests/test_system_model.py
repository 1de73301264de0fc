import numpy as np
import pytest

from ehcr.system_model import (
    ConfigurationError,
    LinkParams,
    derive,
    params_from_dict,
    params_to_dict,
    validate,
    with_overrides,
)


class TestDerive:
    def test_table1_transmission_packets(self, table1_params):
        # ceil(0.5 / 0.06)
        assert table1_params.n_t == 9
        assert derive(table1_params, 1e-4).n_t == 9

    def test_table1_pu_spectral_efficiency(self, table1_params):
        q = derive(table1_params, 1e-4)
        assert q.r_p == pytest.approx(1.6, abs=1e-12)
        assert q.r_s_blind == pytest.approx(0.8, abs=1e-12)

    def test_table1_sensing_cost(self, table1_params):
        # f_s = W: two samples in 1e-4 s, 0.02 J, one packet
        q = derive(table1_params, 1e-4)
        assert q.n_s == 1
        assert q.m == 2

    def test_average_sensing_snr(self, table1_params):
        q = derive(table1_params, 1e-4)
        assert q.gamma_bar == pytest.approx(4.0 * (0.8 / 9) / 0.02, rel=1e-12)

    def test_sensing_rate_exceeds_blind_rate(self, testbench_params):
        q = derive(testbench_params, 2e-3)
        assert q.r_s_sense > q.r_s_blind

    def test_tau_out_of_slot_rejected(self, table1_params):
        with pytest.raises(ValueError):
            derive(table1_params, table1_params.T)
        with pytest.raises(ValueError):
            derive(table1_params, 0.0)

    def test_non_integral_time_bandwidth_rejected(self, table1_params):
        with pytest.raises(ValueError):
            derive(table1_params, 1.3e-4 / 2)

    def test_unreachable_sensing_branch(self, make_params):
        # n_t = 10 and n_s large: sensing can never be funded
        params = make_params(e_proc=0.001)
        with pytest.raises(ConfigurationError):
            derive(params, 5e-3)
        q = derive(params, 5e-3, require_sensing_capacity=False)
        assert q.n_t + q.n_s > params.N_max

    def test_scale_consistency(self, make_params):
        rng = np.random.default_rng(5)
        base = make_params()
        reference = base.n_t
        for _ in range(50):
            c = float(rng.uniform(0.1, 50.0))
            scaled = with_overrides(base, E_t=base.E_t * c, E_u=base.E_u * c)
            assert scaled.n_t == reference

    def test_time_bandwidth_product_exactly_integer(self, testbench_params):
        w = testbench_params.W
        for k in range(1, 40):
            q = derive(testbench_params, k / w, require_sensing_capacity=False)
            assert q.m == k


class TestValidate:
    def test_presets_are_admissible(self, table1_params, testbench_params):
        assert validate(table1_params) == []
        assert validate(testbench_params) == []

    def test_rho_out_of_range(self, testbench_params):
        bad = with_overrides(testbench_params, rho=1.3)
        assert any("rho" in v for v in validate(bad))

    def test_battery_smaller_than_one_transmission(self, make_params):
        bad = make_params(N_max=5)  # n_t = 10
        assert any("battery" in v for v in validate(bad))


class TestConfigIO:
    def test_round_trip_identity(self, table1_params, testbench_params):
        for params in (table1_params, testbench_params):
            assert params_from_dict(params_to_dict(params)) == params

    def test_missing_key_rejected(self, testbench_params):
        doc = params_to_dict(testbench_params)
        del doc["mu_th"]
        with pytest.raises(ConfigurationError):
            params_from_dict(doc)

    def test_missing_link_rejected(self, testbench_params):
        doc = params_to_dict(testbench_params)
        del doc["links"]["sp"]
        with pytest.raises(ConfigurationError):
            params_from_dict(doc)

    def test_extra_sections_tolerated(self, testbench_params):
        doc = params_to_dict(testbench_params)
        doc["grid"] = {"tau_min": 1e-3}
        doc["sim"] = {"slots": 10}
        assert params_from_dict(doc) == testbench_params

    def test_link_mean_gain(self):
        link = LinkParams(fading_mean=0.8, distance=3.0)
        assert link.mean_gain == pytest.approx(0.8 / 9.0, rel=1e-12)
        with pytest.raises(ValueError):
            LinkParams(fading_mean=0.0, distance=1.0)
