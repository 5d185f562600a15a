import math

import numpy as np
import pytest

from ..analysis import (
    ESTIMATE_COLUMNS,
    REWEIGHT_COLUMNS,
    HistogramOverlapError,
    autocorrelation_curve,
    estimate,
    estimates_frame,
    histogram_overlap,
    jackknife,
    multi_histogram_reweight,
    solve_density_of_states,
)
from ..enumeration import exact_observables
from ..graph_state import largest_component_fraction, states
from ..hamiltonian import Ensemble, ModelParams, energy
from ..mc_engine import ChainConfig, Measurement, RunRecord

N = 4
PARAMS = ModelParams(kind="free", n=N)


def _record(beta, rows, params=PARAMS, ensemble=Ensemble.LABELED, converged=True, tau=1.0):
    cfg = ChainConfig(n=params.n, beta=beta, params=params, ensemble=ensemble)
    return RunRecord(rows=tuple(rows), tau=tau, acceptance_rate=0.5, converged=converged, config=cfg)


def _exact_samples(beta, size, seed, params=PARAMS):
    """Independent draws from the labeled Boltzmann distribution, as chain rows."""
    pool = list(states(params.n))
    energies = np.array([energy(s, params) for s in pool])
    weights = np.exp(-beta * (energies - energies.min()))
    picks = np.random.default_rng(seed).choice(len(pool), size=size, p=weights / weights.sum())
    return [
        Measurement(k + 1, float(energies[i]), pool[i].n1, largest_component_fraction(pool[i]), None)
        for k, i in enumerate(picks.tolist())
    ]


# ---------------------------------------------------------------------------
# Jackknife estimates
# ---------------------------------------------------------------------------


def test_jackknife_of_the_mean_is_the_standard_error():
    x = np.random.default_rng(5).standard_normal(500)
    value, error = jackknife([x], lambda a: a)
    assert value == pytest.approx(x.mean())
    assert error == pytest.approx(x.std(ddof=1) / math.sqrt(x.size), rel=1e-10)


def test_jackknife_needs_two_samples():
    with pytest.raises(ValueError):
        jackknife([np.array([1.0])], lambda a: a)


def test_estimate_values():
    rows = [Measurement(k, e, n1, s1, None) for k, (e, n1, s1) in
            enumerate([(0.0, 0, 0.25), (2.0, 3, 1.0), (0.0, 0, 0.25), (2.0, 3, 1.0)])]
    record = _record(1.5, rows)
    found = {est.name: est for est in estimate(record, PARAMS)}
    assert set(found) == {"u", "c", "m", "s1", "chi_m", "chi_s1"}
    assert found["u"].value == pytest.approx(1.0 / N)
    assert found["c"].value == pytest.approx(1.5**2 * 1.0 / N)
    assert found["m"].value == pytest.approx(1.5 / 6)
    assert found["s1"].value == pytest.approx(0.625)
    assert found["chi_m"].value == pytest.approx(1.5 * 2.25 / 6)
    assert found["chi_s1"].value == pytest.approx(1.5 * N * 0.375**2)
    assert all(est.std_error >= 0 and est.n_samples == 4 for est in found.values())


def test_constant_run_has_zero_fluctuations():
    rows = [Measurement(k, 0.0, 0, 0.25, 24) for k in range(10)]
    found = {est.name: est for est in estimate(_record(2.0, rows, ensemble=Ensemble.UNLABELED), PARAMS)}
    for name in ("c", "chi_m", "chi_s1"):
        assert found[name].value == 0.0
        assert found[name].std_error == 0.0


def test_estimates_frame_layout():
    frame = estimates_frame(estimate(_record(1.0, _exact_samples(1.0, 50, seed=1)), PARAMS))
    assert list(frame.columns) == ESTIMATE_COLUMNS
    assert len(frame) == 6
    assert set(frame["ensemble"]) == {"labeled"}


def test_estimate_needs_two_rows():
    with pytest.raises(ValueError):
        estimate(_record(1.0, [Measurement(1, 0.0, 0, 0.25, None)]), PARAMS)


# ---------------------------------------------------------------------------
# Multiple-histogram reweighting
# ---------------------------------------------------------------------------


def test_single_run_reweights_to_its_own_sample_means():
    rows = _exact_samples(1.0, 400, seed=2)
    record = _record(1.0, rows)
    frame = multi_histogram_reweight([record], [1.0])
    e = record.column("E")
    row = frame.iloc[0]
    assert row["u"] == pytest.approx(e.mean() / N, rel=1e-9)
    assert row["c"] == pytest.approx(e.var() / N, rel=1e-9)
    assert row["m"] == pytest.approx(record.column("n1").mean() / 6, rel=1e-9)
    assert row["s1"] == pytest.approx(record.column("s1").mean(), rel=1e-9)


def test_reweighting_between_runs_matches_exact_sums():
    betas = [0.5, 1.0, 1.5, 2.0]
    records = [_record(b, _exact_samples(b, 20_000, seed=10 + k)) for k, b in enumerate(betas)]
    frame = multi_histogram_reweight(records, [0.75, 1.25, 1.75])
    assert list(frame.columns) == REWEIGHT_COLUMNS
    for _, row in frame.iterrows():
        exact = exact_observables(row["beta"], PARAMS, Ensemble.LABELED)
        assert row["u"] == pytest.approx(exact.point.u, abs=0.01)
        assert row["m"] == pytest.approx(exact.m, abs=0.01)
        assert row["s1"] == pytest.approx(exact.s1, abs=0.01)


def test_density_of_states_lives_on_the_lattice():
    records = [_record(b, _exact_samples(b, 2000, seed=k)) for k, b in enumerate([0.5, 1.0])]
    dos = solve_density_of_states(records)
    steps = np.diff(dos.energies) / PARAMS.energy_quantum()
    assert np.allclose(steps, np.rint(steps))
    assert dos.log_z[0] == 0.0
    assert dos.iterations >= 1


def test_disjoint_histograms_raise_overlap_error():
    empty = [Measurement(k, 0.0, 0, 0.25, None) for k in range(20)]
    full = [Measurement(k, 4.0, 6, 1.0, None) for k in range(20)]
    with pytest.raises(HistogramOverlapError) as excinfo:
        solve_density_of_states([_record(3.0, empty), _record(0.1, full)])
    assert excinfo.value.betas == (0.1, 3.0)


def test_histogram_overlap():
    assert histogram_overlap(np.array([1.0, 1.0]), np.array([2.0, 2.0])) == pytest.approx(1.0)
    assert histogram_overlap(np.array([1.0, 0.0]), np.array([0.0, 3.0])) == 0.0


def test_reweighting_rejects_mixed_runs_and_extrapolation():
    rows = _exact_samples(1.0, 100, seed=3)
    other = ModelParams(kind="free", n=N, E0=-0.5)
    with pytest.raises(ValueError):
        solve_density_of_states([_record(1.0, rows), _record(1.2, rows, params=other)])
    with pytest.raises(ValueError):
        solve_density_of_states([])
    with pytest.raises(ValueError):
        multi_histogram_reweight([_record(1.0, rows)], [2.0])


def test_autocorrelation_curve_skips_unconverged_runs():
    rows = [Measurement(1, 0.0, 0, 0.25, None)]
    records = [
        _record(2.0, rows, tau=3.0),
        _record(0.5, rows, tau=1.5),
        _record(1.0, rows, tau=9.0, converged=False),
    ]
    frame = autocorrelation_curve(records)
    assert frame["beta"].tolist() == [0.5, 2.0]
    assert frame["tau"].tolist() == [1.5, 3.0]


if __name__ == "__main__":
    test_jackknife_of_the_mean_is_the_standard_error()
    test_single_run_reweights_to_its_own_sample_means()
    print("All tests passed!")
