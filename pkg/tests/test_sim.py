import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleetprint.errors import InvalidConfig
from fleetprint.sim import (
    SimConfig,
    generate_corpus,
    load_sim_config,
    signature_for,
    signature_series,
    simulate_run,
    train_validation_corpora,
)
from fleetprint.telemetry import METERS, AppLabel, MeterId, Role, featurize, featurize_corpus

CPU = METERS.index(MeterId.CPU_UTIL)
MEM = METERS.index(MeterId.MEMORY_USAGE)


def series(run, node, meter):
    return np.array([s.value for s in run.samples if s.node == node and s.meter is meter])


def test_cado_slave_idle_signature():
    assert signature_for(AppLabel.CADO_NFS).process(Role.SLAVE, MeterId.CPU_UTIL).baseline <= 5.0


def test_mcnp_memory_trend_signature():
    sig = signature_for(AppLabel.MCNP6)
    master = sig.process(Role.MASTER, MeterId.MEMORY_USAGE).slope
    slave = sig.process(Role.SLAVE, MeterId.MEMORY_USAGE).slope
    assert master > 0
    assert 0 < slave < master


def test_openfoam_network_peak():
    sig = signature_for(AppLabel.OPENFOAM)
    for meter in (MeterId.NET_IN_BYTES, MeterId.NET_OUT_BYTES):
        assert sig.process(Role.MASTER, meter).burst_peak == 2.5e6


def test_openfoam_writes_on_master():
    sig = signature_for(AppLabel.OPENFOAM)
    master = sig.process(Role.MASTER, MeterId.DISK_WRITE_BYTES)
    slave = sig.process(Role.SLAVE, MeterId.DISK_WRITE_BYTES)
    assert master.baseline > 10 * slave.baseline
    assert sig.process(Role.MASTER, MeterId.CPU_UTIL).baseline > sig.process(Role.SLAVE, MeterId.CPU_UTIL).baseline


def test_mcnp_cpu_plateau_and_disk_reads():
    clean = signature_series(SimConfig(app=AppLabel.MCNP6))
    assert np.all((clean[:, :, CPU] >= 90) & (clean[:, :, CPU] <= 100))
    reads = clean[:, :, METERS.index(MeterId.DISK_READ_BYTES)]
    assert np.all(reads[0] > 0)
    assert np.all(reads[1:] == 0)


def test_cado_spike_near_sixth_minute():
    clean = signature_series(SimConfig(app=AppLabel.CADO_NFS))
    cpu = clean[:, 0, CPU]
    t = np.arange(len(cpu)) * 5.0
    assert t[np.argmax(cpu)] == pytest.approx(360.0, abs=30.0)


def test_spike_scales_with_duration():
    cpu = signature_series(SimConfig(app=AppLabel.CADO_NFS, duration=1200.0))[:, 0, CPU]
    t = np.arange(len(cpu)) * 5.0
    assert t[np.argmax(cpu)] == pytest.approx(720.0, abs=60.0)


def test_cado_no_internode_traffic():
    clean = signature_series(SimConfig(app=AppLabel.CADO_NFS))
    net = clean[:, :, METERS.index(MeterId.NET_OUT_BYTES)]
    assert net.max() < 1e4


def test_simulate_is_deterministic():
    cfg = SimConfig(app=AppLabel.OPENFOAM, seed=99)
    assert simulate_run(cfg) == simulate_run(cfg)


def test_simulate_sample_count():
    run = simulate_run(SimConfig(app=AppLabel.MCNP6, duration=600, sample_period=5))
    assert len(run.samples) == 120 * 2 * 10
    assert len(featurize(run)) == 120


def test_cado_asymmetry():
    run = simulate_run(SimConfig(app=AppLabel.CADO_NFS, seed=3))
    assert series(run, "digi-b", MeterId.CPU_UTIL).mean() < 10
    assert series(run, "digi-a", MeterId.CPU_UTIL).mean() > 50


def test_mcnp_memory_regression():
    run = simulate_run(SimConfig(app=AppLabel.MCNP6, seed=3))
    mem = series(run, "digi-a", MeterId.MEMORY_USAGE)
    t = np.arange(len(mem)) * 5.0
    slope = np.polyfit(t, mem, 1)[0]
    r = np.corrcoef(t, mem)[0, 1]
    assert slope > 0
    assert r > 0.9


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(duration=5.0),
        dict(noise_std_fraction=1.0),
        dict(noise_std_fraction=-0.1),
        dict(sample_period=0.0),
        dict(seed=-1),
    ],
)
def test_invalid_configs(kwargs):
    with pytest.raises(InvalidConfig):
        SimConfig(app=AppLabel.MCNP6, **kwargs)


@settings(max_examples=25, deadline=None)
@given(
    app=st.sampled_from(list(AppLabel)),
    seed=st.integers(0, 2**32),
    noise=st.floats(0.0, 0.9),
    duration=st.floats(10.0, 300.0),
)
def test_values_respect_meter_bounds(app, seed, noise, duration):
    run = simulate_run(SimConfig(app=app, seed=seed, noise_std_fraction=noise, duration=duration))
    for s in run.samples:
        assert s.value >= 0
        if s.meter is MeterId.CPU_UTIL:
            assert s.value <= 100


def test_corpus_counts_and_labels():
    runs = generate_corpus(1, 0, duration=60.0)
    assert len(runs) == 3
    assert {r.label for r in runs} == set(AppLabel)


def test_corpus_runs_have_distinct_seeds():
    runs = generate_corpus(4, 1, duration=60.0)
    assert len({r.seed for r in runs}) == 12


def test_disjoint_base_seeds_give_no_identical_runs():
    a = generate_corpus(3, 100, duration=60.0)
    b = generate_corpus(3, 101, duration=60.0)
    assert not {r.seed for r in a} & {r.seed for r in b}
    assert not any(x.samples == y.samples for x in a for y in b)


def test_default_corpus_row_count(default_corpora):
    train, val = default_corpora
    assert len(featurize_corpus(train)) == 3 * 10 * 120
    assert not {r.seed for r in train} & {r.seed for r in val}


def test_config_file(tmp_path):
    path = tmp_path / "sim.cfg"
    path.write_text("# cluster\napp = OPENFOAM\nduration=120\nnoise_std_fraction = 0.1\nnodes = n0, n1, n2\nseed=4\n")
    cfg = load_sim_config(path)
    assert cfg.app is AppLabel.OPENFOAM
    assert cfg.duration == 120.0
    assert [n.name for n in cfg.nodes] == ["n0", "n1", "n2"]
    assert cfg.nodes[0].role is Role.MASTER
    run = simulate_run(cfg)
    assert featurize(run).width == 30


def test_config_file_rejects_unknown_key(tmp_path):
    path = tmp_path / "sim.cfg"
    path.write_text("app=MCNP6\ncolour=blue\n")
    with pytest.raises(InvalidConfig):
        load_sim_config(path)


def test_train_validation_split_defaults():
    train, val = train_validation_corpora(1, seed=5, duration=30.0)
    assert [r.run_id for r in train] == ["train-CADO_NFS-000", "train-MCNP6-000", "train-OPENFOAM-000"]
    assert all(r.run_id.startswith("val-") for r in val)
