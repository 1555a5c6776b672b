"""Seeded generative stand-ins for the three application telemetry signatures.

Each (node role, meter) pair is driven by a small additive process: a
baseline, a linear trend, a square-wave burst train, phase events placed at
fractions of the run duration, and a one-bucket startup spike. Noise is
multiplicative so meters that sit at zero stay at zero.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import InvalidConfig
from .telemetry import (
    CLASS_ORDER,
    DEFAULT_NODES,
    DEFAULT_SAMPLE_PERIOD,
    METERS,
    AppLabel,
    MeterId,
    MeterSample,
    NodeId,
    Role,
    TelemetryRun,
)

M = MeterId


@dataclass(frozen=True)
class PhaseEvent:
    """Adds ``magnitude`` over ``[start, start + width)``, both as fractions of the run duration."""

    start: float
    width: float
    magnitude: float

    def __post_init__(self):
        if self.magnitude < 0 or self.width < 0:
            raise InvalidConfig("phase events need non-negative magnitude and width")
        if not (0.0 <= self.start <= 1.0 and self.start + self.width <= 1.0 + 1e-12):
            raise InvalidConfig("phase events must lie within the run")

    def active(self, t: np.ndarray, duration: float) -> np.ndarray:
        lo = self.start * duration
        return (t >= lo) & (t < lo + self.width * duration)


@dataclass(frozen=True)
class MeterProcess:
    baseline: float = 0.0
    slope: float = 0.0  # units per second
    burst_amplitude: float = 0.0
    burst_period: float = 0.0  # seconds; 0 disables bursts
    burst_width: float = 0.0  # seconds the burst stays on within each period
    events: tuple[PhaseEvent, ...] = ()
    startup_spike: float = 0.0

    def __post_init__(self):
        mags = (self.baseline, self.slope, self.burst_amplitude, self.burst_period, self.burst_width, self.startup_spike)
        if any(v < 0 for v in mags):
            raise InvalidConfig("signature magnitudes must be non-negative")

    @property
    def burst_peak(self) -> float:
        return self.baseline + self.burst_amplitude

    def evaluate(self, t: np.ndarray, duration: float, sample_period: float) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        v = self.baseline + self.slope * t
        if self.burst_period > 0 and self.burst_amplitude > 0:
            v = v + self.burst_amplitude * (np.mod(t, self.burst_period) < self.burst_width)
        for ev in self.events:
            v = v + ev.magnitude * ev.active(t, duration)
        if self.startup_spike:
            v = v + self.startup_spike * (t < sample_period)
        return v


@dataclass(frozen=True)
class SignatureSpec:
    app: AppLabel
    master: Mapping[MeterId, MeterProcess]
    slave: Mapping[MeterId, MeterProcess]

    def process(self, role: Role, meter: MeterId) -> MeterProcess:
        table = self.master if role is Role.MASTER else self.slave
        return table.get(meter, MeterProcess())


def _cado_nfs() -> SignatureSpec:
    third = 1.0 / 3.0
    # polynomial selection, sieving, square root; linear algebra spike at 60% of the run
    poly, sieve, sqrt_ = (0.0, third), (third, third), (2 * third, 1.0 - 2 * third)
    la = PhaseEvent(0.6, 0.05, 28.0)

    def phased(p, s, q, spike=None):
        evs = (PhaseEvent(poly[0], poly[1], p), PhaseEvent(sieve[0], sieve[1], s), PhaseEvent(sqrt_[0], sqrt_[1], q))
        return evs + ((spike,) if spike else ())

    master = {
        M.CPU_UTIL: MeterProcess(events=phased(55.0, 70.0, 40.0, la)),
        M.MEMORY_USAGE: MeterProcess(baseline=300.0, events=phased(100.0, 1500.0, 600.0, PhaseEvent(0.6, 0.05, 1500.0))),
        M.DISK_READ_BYTES: MeterProcess(startup_spike=2.0e6, events=phased(0.0, 0.0, 2.0e5)),
        M.DISK_READ_REQUESTS: MeterProcess(startup_spike=80.0, events=phased(0.0, 0.0, 12.0)),
        M.DISK_WRITE_BYTES: MeterProcess(baseline=5.0e4, events=phased(0.0, 4.0e5, 0.0)),
        M.DISK_WRITE_REQUESTS: MeterProcess(baseline=5.0, events=phased(0.0, 30.0, 0.0)),
        M.NET_IN_BYTES: MeterProcess(baseline=2.0e3),
        M.NET_IN_PACKETS: MeterProcess(baseline=10.0),
        M.NET_OUT_BYTES: MeterProcess(baseline=2.0e3),
        M.NET_OUT_PACKETS: MeterProcess(baseline=10.0),
    }
    slave = {
        M.CPU_UTIL: MeterProcess(baseline=1.5),
        M.MEMORY_USAGE: MeterProcess(baseline=350.0),
        M.DISK_WRITE_BYTES: MeterProcess(baseline=1.0e3),
        M.DISK_WRITE_REQUESTS: MeterProcess(baseline=0.2),
        M.NET_IN_BYTES: MeterProcess(baseline=1.5e3),
        M.NET_IN_PACKETS: MeterProcess(baseline=8.0),
        M.NET_OUT_BYTES: MeterProcess(baseline=1.5e3),
        M.NET_OUT_PACKETS: MeterProcess(baseline=8.0),
    }
    return SignatureSpec(AppLabel.CADO_NFS, master, slave)


def _mcnp6() -> SignatureSpec:
    def node(cpu, mem0, mem_slope, write_scale):
        return {
            M.CPU_UTIL: MeterProcess(baseline=cpu),
            M.MEMORY_USAGE: MeterProcess(baseline=mem0, slope=mem_slope),
            M.DISK_READ_BYTES: MeterProcess(startup_spike=4.0e6),
            M.DISK_READ_REQUESTS: MeterProcess(startup_spike=120.0),
            M.DISK_WRITE_BYTES: MeterProcess(
                baseline=2.0e4 * write_scale, burst_amplitude=6.0e5 * write_scale, burst_period=60.0, burst_width=5.0
            ),
            M.DISK_WRITE_REQUESTS: MeterProcess(
                baseline=2.0 * write_scale, burst_amplitude=40.0 * write_scale, burst_period=60.0, burst_width=5.0
            ),
            M.NET_IN_BYTES: MeterProcess(baseline=9.0e5),
            M.NET_IN_PACKETS: MeterProcess(baseline=700.0),
            M.NET_OUT_BYTES: MeterProcess(baseline=9.0e5),
            M.NET_OUT_PACKETS: MeterProcess(baseline=700.0),
        }

    return SignatureSpec(AppLabel.MCNP6, node(96.0, 1200.0, 5.0, 1.0), node(95.0, 900.0, 2.0, 0.5))


def _openfoam() -> SignatureSpec:
    def node(cpu, mem, write_bytes, write_burst, write_reqs, write_req_burst):
        return {
            M.CPU_UTIL: MeterProcess(baseline=cpu),
            M.MEMORY_USAGE: MeterProcess(baseline=mem),
            M.DISK_READ_BYTES: MeterProcess(startup_spike=1.0e6),
            M.DISK_READ_REQUESTS: MeterProcess(startup_spike=40.0),
            M.DISK_WRITE_BYTES: MeterProcess(
                baseline=write_bytes, burst_amplitude=write_burst, burst_period=50.0, burst_width=10.0
            ),
            M.DISK_WRITE_REQUESTS: MeterProcess(
                baseline=write_reqs, burst_amplitude=write_req_burst, burst_period=50.0, burst_width=10.0
            ),
            # per-iteration boundary exchange, peaking at 2.5 MB/s
            M.NET_IN_BYTES: MeterProcess(baseline=3.0e5, burst_amplitude=2.2e6, burst_period=20.0, burst_width=10.0),
            M.NET_IN_PACKETS: MeterProcess(baseline=250.0, burst_amplitude=1800.0, burst_period=20.0, burst_width=10.0),
            M.NET_OUT_BYTES: MeterProcess(baseline=3.0e5, burst_amplitude=2.2e6, burst_period=20.0, burst_width=10.0),
            M.NET_OUT_PACKETS: MeterProcess(baseline=250.0, burst_amplitude=1800.0, burst_period=20.0, burst_width=10.0),
        }

    master = node(94.0, 2600.0, 1.5e5, 1.2e6, 15.0, 90.0)
    slave = node(72.0, 2400.0, 2.0e3, 0.0, 0.5, 0.0)
    return SignatureSpec(AppLabel.OPENFOAM, master, slave)


_BUILDERS = {AppLabel.CADO_NFS: _cado_nfs, AppLabel.MCNP6: _mcnp6, AppLabel.OPENFOAM: _openfoam}


def signature_for(app: AppLabel) -> SignatureSpec:
    return _BUILDERS[AppLabel(app)]()


@dataclass(frozen=True)
class SimConfig:
    app: AppLabel
    duration: float = 600.0
    sample_period: float = DEFAULT_SAMPLE_PERIOD
    nodes: tuple[NodeId, ...] = DEFAULT_NODES
    noise_std_fraction: float = 0.05
    seed: int = 0
    run_id: str = field(default="", compare=False)

    def __post_init__(self):
        try:
            object.__setattr__(self, "app", AppLabel(self.app))
        except ValueError as exc:
            raise InvalidConfig(str(exc)) from None
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if not (self.sample_period > 0) or math.isinf(self.sample_period):
            raise InvalidConfig(f"sample_period must be positive, got {self.sample_period!r}")
        if not (self.duration >= 2 * self.sample_period) or math.isinf(self.duration):
            raise InvalidConfig("duration must be at least two sample periods")
        if not (0.0 <= self.noise_std_fraction < 1.0):
            raise InvalidConfig("noise_std_fraction must lie in [0, 1)")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidConfig("seed must be an unsigned integer")
        if sum(n.role is Role.MASTER for n in self.nodes) != 1:
            raise InvalidConfig("exactly one master node required")
        if len({n.name for n in self.nodes}) != len(self.nodes):
            raise InvalidConfig("node names must be unique")

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.duration / self.sample_period + 1e-9))


def parse_nodes(text: str) -> tuple[NodeId, ...]:
    """``"digi-a,digi-b"`` -> first name is the master, the rest slaves."""
    names = [n.strip() for n in text.split(",") if n.strip()]
    if not names:
        raise InvalidConfig("empty node list")
    return tuple(NodeId(name, Role.MASTER if i == 0 else Role.SLAVE) for i, name in enumerate(names))


_CONFIG_KEYS = {f.name for f in fields(SimConfig)}


def config_overrides_from_text(text: str) -> dict:
    """Parse ``key=value`` lines into SimConfig keyword arguments. ``#`` starts a comment."""
    out: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"config line {line_no}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise InvalidConfig(f"config line {line_no}: unknown key {key!r}")
        try:
            if key in ("duration", "sample_period", "noise_std_fraction"):
                out[key] = float(value)
            elif key == "seed":
                out[key] = int(value)
            elif key == "nodes":
                out[key] = parse_nodes(value)
            else:
                out[key] = value
        except ValueError:
            raise InvalidConfig(f"config line {line_no}: bad value for {key}: {value!r}") from None
    return out


def load_sim_config(path: str | Path, **overrides) -> SimConfig:
    values = config_overrides_from_text(Path(path).read_text(encoding="utf-8"))
    values.update(overrides)
    if "app" not in values:
        raise InvalidConfig("config needs an app")
    return SimConfig(**values)


def signature_series(config: SimConfig) -> np.ndarray:
    """Noise-free signal, shape (n_samples, n_nodes, 10)."""
    sig = signature_for(config.app)
    t = np.arange(config.n_samples, dtype=np.float64) * config.sample_period
    out = np.empty((t.size, len(config.nodes), len(METERS)))
    for j, node in enumerate(config.nodes):
        for k, meter in enumerate(METERS):
            out[:, j, k] = sig.process(node.role, meter).evaluate(t, config.duration, config.sample_period)
    return out


def simulate_run(config: SimConfig) -> TelemetryRun:
    rng = np.random.default_rng(config.seed)
    clean = signature_series(config)
    noise = rng.standard_normal(clean.shape)
    values = clean * (1.0 + config.noise_std_fraction * noise)
    caps = np.array([m.max_value for m in METERS])
    values = np.clip(values, 0.0, caps)
    period = config.sample_period
    samples = []
    for i in range(values.shape[0]):
        t = i * period
        for j, node in enumerate(config.nodes):
            row = values[i, j].tolist()
            for k, meter in enumerate(METERS):
                samples.append(MeterSample(t, node.name, meter, row[k]))
    run_id = config.run_id or f"{config.app.value}-{config.seed}"
    return TelemetryRun(config.app, config.nodes, tuple(samples), period, run_id, config.seed)


def run_seed(base_seed: int, app: AppLabel, i: int) -> int:
    digest = hashlib.blake2b(f"{AppLabel(app).value}:{i}".encode(), digest_size=8).digest()
    return base_seed ^ int.from_bytes(digest, "big")


def generate_corpus(
    n_runs_per_app: int,
    base_seed: int,
    prefix: str = "run",
    apps=CLASS_ORDER,
    **overrides,
) -> list[TelemetryRun]:
    """``n_runs_per_app`` runs of every app, ordered by run id.

    ``overrides`` are SimConfig fields other than ``app``/``seed``.
    """
    if n_runs_per_app < 1:
        raise InvalidConfig("n_runs_per_app must be at least 1")
    if base_seed < 0:
        raise InvalidConfig("base_seed must be unsigned")
    runs = []
    for app in apps:
        for i in range(n_runs_per_app):
            cfg = SimConfig(app=app, seed=run_seed(base_seed, app, i), run_id=f"{prefix}-{AppLabel(app).value}-{i:03d}", **overrides)
            runs.append(simulate_run(cfg))
    runs.sort(key=lambda r: r.run_id)
    return runs


def train_validation_corpora(
    n_runs_per_app: int = 10, seed: int = 0, **overrides
) -> tuple[list[TelemetryRun], list[TelemetryRun]]:
    """Independent training and validation corpora with disjoint per-run seeds."""
    train = generate_corpus(n_runs_per_app, seed, prefix="train", **overrides)
    val = generate_corpus(n_runs_per_app, seed + 1, prefix="val", **overrides)
    if {r.seed for r in train} & {r.seed for r in val}:
        raise InvalidConfig(f"seed {seed} yields overlapping train/validation seeds")
    return train, val

