"""Tests for the Monte Carlo experiments."""

from dataclasses import replace

import pytest

from src.config import Config
from src.model import NoiseModel
from src.montecarlo import (
    ExperimentSpec,
    TimingReport,
    clopper_pearson,
    dump_constellation,
    power_variants,
    run_experiment,
    run_trials,
    run_trials_async,
)
from src.solution import SchemeTag

BASE = ExperimentSpec(
    kind="ser",
    scheme=SchemeTag.P2,
    num_antennas=4,
    num_users=2,
    order=4,
    snr_grid=(10.0,),
    gamma_grid=(5.0,),
    gamma_e_grid=(0.0,),
    trials=4,
    seed=3,
    noise=NoiseModel(),
)


def test_clopper_pearson_edges():
    """Zero errors pin the lower end, all errors the upper end."""
    assert clopper_pearson(0, 0) == (0.0, 1.0)
    low, high = clopper_pearson(0, 10)
    assert low == 0.0
    assert high == pytest.approx(0.3085, abs=1e-4)
    low, high = clopper_pearson(10, 10)
    assert low == pytest.approx(0.6915, abs=1e-4)
    assert high == 1.0


def test_clopper_pearson_brackets_estimate():
    """The interval contains the point estimate."""
    low, high = clopper_pearson(30, 100)
    assert low < 0.3 < high


def test_run_trials_keeps_order():
    """Results come back in index order whatever the job count."""
    assert run_trials(lambda i: i * i, 10, 3) == [i * i for i in range(10)]


@pytest.mark.asyncio
async def test_run_trials_async():
    """Async runner gathers every trial."""
    results = await run_trials_async(lambda i: i + 1, 5, 2)
    assert results == [1, 2, 3, 4, 5]


def test_spec_from_config():
    """Config fields map onto the experiment spec."""
    spec = ExperimentSpec.from_config(Config(experiment="power", scheme="p1", n=8, trials=5, jobs=2, sigma_e=0.5))
    assert spec.kind == "power"
    assert spec.scheme is SchemeTag.P1
    assert spec.num_antennas == 8
    assert spec.noise.sigma_eve == 0.5
    assert spec.to_dict()["scheme"] == "p1"


def test_spec_statistical_needs_correlation():
    """p3 without a correlation coefficient is rejected."""
    with pytest.raises(ValueError, match="needs a correlation coefficient"):
        ExperimentSpec.from_config(Config(scheme="p3"))


def test_spec_budget_splits_ratio():
    """Budgets use rho for both P_n and P_0."""
    budget = replace(BASE, rho=0.25).budget(8.0)
    assert budget.jamming == 2.0
    assert budget.floor == 2.0


def test_ser_experiment_independent_of_jobs():
    """Counter-based seeding makes the rows identical across job counts."""
    serial = run_experiment(replace(BASE, jobs=1))
    parallel = run_experiment(replace(BASE, jobs=3))
    assert serial.curves[0].rows == parallel.curves[0].rows

    row = serial.curves[0].rows[0]
    assert row["trials"] == 4
    assert row["infeasible"] == 0
    assert row["audit_failures"] == 0
    assert 0.0 <= row["user_ser"] <= 1.0
    assert row["user_ci_low"] <= row["user_ser"] <= row["user_ci_high"]
    assert row["mean_power"] <= 10.0 * (1 + 1e-6)


def test_ser_experiment_fixed_channel():
    """Fixed geometry runs complete and label the curve by scheme and Eve."""
    result = run_experiment(replace(BASE, channel_mode="fixed", trials=2))
    assert result.curves[0].label == "p2-common"
    assert result.curves[0].rows[0]["trials"] == 2


def test_ser_experiment_smart_eve():
    """The smart eavesdropper runs its hypothesis search for deterministic schemes."""
    result = run_experiment(replace(BASE, eve="smart", trials=1, num_users=1, num_antennas=3))
    row = result.curves[0].rows[0]
    assert row["infeasible"] == 0
    assert row["eve_ser"] in (0.0, 1.0)


def test_power_variants_labels():
    """Complete, zero-leakage and one ab-only curve per Eve target."""
    spec = replace(BASE, kind="power", scheme=SchemeTag.P1, gamma_e_grid=(0.0, 10.0))
    labels = [label for label, _ in power_variants(spec)]
    assert labels == ["complete", "zero-leakage", "ab-only@0dB", "ab-only@10dB"]
    configs = dict(power_variants(spec))
    assert configs["zero-leakage"].gamma_e_fixed == 0.0
    assert configs["ab-only@10dB"].gamma_e_fixed == pytest.approx(10.0)


def test_power_variants_skip_ab_for_bpsk():
    """Subregions A and B do not exist for BPSK."""
    spec = replace(BASE, kind="power", scheme=SchemeTag.P1, order=2)
    assert [label for label, _ in power_variants(spec)] == ["complete", "zero-leakage"]


def test_power_experiment_curves():
    """The complete region never needs more power than ab-only."""
    spec = replace(BASE, kind="power", scheme=SchemeTag.P1, num_antennas=6, trials=2)
    result = run_experiment(spec)
    curves = {curve.label: curve for curve in result.curves}

    assert set(curves) == {"complete", "zero-leakage", "ab-only@0dB", "gain:ab-only@0dB"}
    complete = curves["complete"].rows[0]
    ab_only = curves["ab-only@0dB"].rows[0]
    assert complete["feasible"] == ab_only["feasible"] == 2
    assert complete["mean_power"] <= ab_only["mean_power"] * (1 + 1e-5)
    assert curves["gain:ab-only@0dB"].rows[0]["gain_db"] >= -1e-4


def test_timing_benchmark():
    """Both paths reach the same threshold on every instance."""
    spec = replace(BASE, kind="timing", num_antennas=6, trials=2)
    timing = run_experiment(spec).timing
    assert timing.instances == 2
    assert len(timing.repeat_times) == 5
    assert max(timing.relative_gaps) < 1e-3
    assert timing.summary()["instances"] == 2


def test_timing_summary_without_instances():
    """An empty report still summarizes."""
    report = TimingReport(instances=0, fast_times=[], reference_times=[], relative_gaps=[], fallbacks=0)
    assert report.summary() == {"instances": 0, "fallbacks": 0}


def test_constellation_dump_rows():
    """One row per channel-use with clean and noisy points."""
    result = dump_constellation(replace(BASE, kind="constellation"), 3)
    assert len(result.constellation_rows) + result.infeasible == 3
    row = result.constellation_rows[0]
    assert set(row) >= {"use", "user_symbol", "target_symbol", "eve_re", "eve_noisy_im"}
    assert 0 <= row["user_symbol"] < 4


def test_run_experiment_rejects_unknown_kind():
    """Only the four experiment kinds dispatch."""
    with pytest.raises(ValueError, match="Unknown experiment kind"):
        run_experiment(replace(BASE, kind="bode"))
