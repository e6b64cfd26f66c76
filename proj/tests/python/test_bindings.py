import math

import numpy as np
import pytest

import mfrnn

SIG5_SQ = 0.986659092404924990  # logistic(5)^2, mpmath


def zero_variance_peephole(mu_f):
    gates = {k: {"sigma2": 0.0, "nu2": 0.0, "rho2": 0.0, "mu": 0.0} for k in "ifro"}
    gates["f"]["mu"] = mu_f
    return {"arch": "peepholeLSTM", "gates": gates}


def test_registry():
    assert mfrnn.architectures() == ["vanillaRNN", "minimalRNN", "GRU", "peepholeLSTM", "LSTM"]
    assert mfrnn.gate_labels("GRU") == ["f", "r", "r2"]
    assert "peephole_critical" in mfrnn.preset_names()


def test_preset_round_trips_through_fixed_point():
    theta, meta = mfrnn.preset("peephole_critical", with_meta=True)
    assert theta["arch"] == "peepholeLSTM" and meta["preset"] == "peephole_critical"
    fp = mfrnn.fixed_point(theta, order=128)
    assert fp["chi"] == pytest.approx(SIG5_SQ, rel=1e-3)
    assert fp["xi"] == pytest.approx(-1 / math.log(SIG5_SQ), rel=1e-3)


def test_zero_variance_timescale_is_closed_form():
    fp = mfrnn.fixed_point(zero_variance_peephole(0.0))
    assert fp["chi"] == pytest.approx(0.25, abs=1e-12)
    assert fp["xi"] == pytest.approx(0.721347520444481704, rel=1e-12)


def test_jacobian_first_moment_equals_chi_at_unit_correlation():
    theta = {"gates": {k: {"sigma2": 0.7, "nu2": 0.4, "rho2": 0.2, "mu": 0.5} for k in ("f", "r", "r2")}}
    jac = mfrnn.jacobian(theta, "GRU")
    chi = mfrnn.fixed_point(theta, "GRU", c0=1.0, sigma_z=1.0)["chi"]
    assert jac["m1"] == pytest.approx(chi, abs=1e-6)
    assert set(jac["residuals"]) == {"chi", "m1", "sigma", "norm"}


def test_errors_carry_codes():
    bad = zero_variance_peephole(0.0)
    bad["gates"]["i"]["sigma2"] = -1.0
    with pytest.raises(mfrnn.MfrnnError) as e:
        mfrnn.fixed_point(bad)
    assert e.value.code == "NegativeVariance"
    with pytest.raises(mfrnn.MfrnnError) as e:
        mfrnn.fixed_point({"gates": {}}, "nope")
    assert e.value.code == "UnknownArchitecture"
    with pytest.raises(mfrnn.MfrnnError) as e:
        mfrnn.fixed_point({"gates": {}, "extra": 1}, "GRU")
    assert e.value.code == "ParseError"


def test_search_targets_timescale():
    theta, report = mfrnn.search("peepholeLSTM", target_xi=74.6)
    assert theta["gates"]["f"]["mu"] == pytest.approx(5.0, abs=1e-2)
    assert report["objective"] <= 1e-3 * 74.6


def test_sweep_rows_sorted_and_closed_form():
    rows = mfrnn.sweep(zero_variance_peephole(0.0), [1.0, -1.0, 0.0])
    assert [r["alpha"] for r in rows] == [-1.0, 0.0, 1.0]
    for r in rows:
        g = 1 / (1 + math.exp(-r["alpha"]))
        assert r["xi"] == pytest.approx(-1 / math.log(g * g), rel=1e-9)


def test_zero_variance_simulation_matches_mean_field():
    theta = {"arch": "GRU", "gates": {k: {"sigma2": 0.0, "nu2": 0.0, "rho2": 0.0, "mu": 0.3} for k in ("f", "r", "r2")}}
    sim = mfrnn.simulate(theta, N=16, T=30, sigma_z=0.5, seed=1, init_mean=0.3)
    mf = mfrnn.mean_field(theta, T=30, sigma_z=0.5, init_mean=0.3)
    assert sim["q"].shape == (31,)
    np.testing.assert_allclose(sim["q"], mf["q"], atol=1e-12)
    np.testing.assert_allclose(sim["c"], mf["c"], atol=1e-12)


def test_simulation_is_seeded():
    theta = mfrnn.preset("standard", "GRU", N=64)
    a = mfrnn.simulate(theta, N=64, T=5, seed=3)
    b = mfrnn.simulate(theta, N=64, T=5, seed=3, workers=2)
    np.testing.assert_array_equal(a["q"], b["q"])


def test_spectrum_is_descending():
    vals = mfrnn.spectrum(mfrnn.preset("peephole_critical"), N=64, seed=2, burn_in=10)
    assert vals.shape == (64,)
    assert np.all(np.diff(vals) <= 0)


def test_cell_ensemble_against_simulation():
    theta = mfrnn.preset("standard", "LSTM", N=100)
    ens = mfrnn.cell_ensemble(theta, n_s=100, n_iters=100, seed=4)
    cells = mfrnn.simulate_cells(theta, N=100, T=100, seed=5)
    assert ens.shape == (100,) and cells.shape == (100,)
    assert 0.0 <= mfrnn.ks_distance(ens, cells) < 0.3


def test_ks_distance():
    assert mfrnn.ks_distance([1, 2, 3, 4], [3, 4, 5, 6]) == pytest.approx(0.5)


def test_theta_from_file(tmp_path):
    import json

    path = tmp_path / "theta.json"
    path.write_text(json.dumps(zero_variance_peephole(1.0)))
    assert mfrnn.fixed_point(str(path))["chi"] == pytest.approx((1 / (1 + math.exp(-1))) ** 2, rel=1e-12)
