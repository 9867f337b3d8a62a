"""Synthetic chamber experiments: a desk-scale stand-in for hardware
captures and the ground-truth oracle for the de-noising tests.

The channel state, per frame t and subcarrier s:

    clean[t, s] = B[s] * M[k(t), s] * G[k(t)]
                  * (1 - c * h(t)^2) * (1 + fadeA[t, s] + fadeB[t, s])

and the received amplitude adds the receiver-side effects:

    amp[t, s] = clean[t, s] * (1 + agc(t)) + pr(t) + white noise

* ``B`` is a per-subcarrier baseline profile, fixed per seed; ``M`` and
  ``G`` are a per-trial subcarrier fingerprint and scalar gain, the way
  multipath and receiver seating re-randomize between sessions on
  different days.
* ``1 - c*h^2`` is the humidity attenuation envelope: amplitude falls as
  humidity rises, quadratically in h.
* Each fade group is the interference pattern of two multipath taps at a
  common coarse delay (one spatial frequency across the band). The taps'
  relative phase moves with humidity, so the group's *depth* oscillates
  as ``|z|^2 = 2 + 2cos(dk*h + p)`` (a tap beat), while the fade
  *positions* wander slowly (``delta(t)``) as the geometry drifts. Depth
  is the fine-grained humidity channel; position carries none.
* ``agc`` is a slow bounded receiver-gain wander. Together with the
  wandering fade positions it removes every static linear threshold:
  absolute levels drift, and any fixed quadrature projection of a fade
  group has its sign randomized by ``delta(t)``. Fade depth stays
  readable through quadrature power ratios (quadratic in the features)
  and through local neighbourhoods (time-adjacent samples share the
  nuisance state), which is what separates the quadratic-kernel and
  nearest-neighbour classifiers from a linear one on this data.

Periodic probe-request (PR) disturbances add a common offset on all
subcarriers that decays exponentially over the event; labels are the true
humidity plus Gaussian sensor noise.

The clean series is the channel state itself; the AGC wander is counted
with the receiver noise (the de-noising stages cannot and need not remove
it, and it is small next to the PR and thermal terms).

Long humidity timescales (step dwell, depletion) are wall-clock values
compressed by ``time_compression``; radio timescales (frame rate, PR
period/duration) are generated-timeline seconds and are not compressed,
since compressing them would change the disturbance geometry that the
de-noising stage is sized for.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, fields

import numpy as np

from .denoise import CsiSeries
from .ingest import (
    CSI_UDP_PORT,
    KEPT_BIN_INDICES,
    LINKTYPE_ETHERNET,
    LINKTYPE_RAW_IP,
    PCAP_MAGIC,
    RAW_BIN_COUNT,
    RECORD_MAGIC,
    SUBCARRIER_COUNT,
)

# Fade groups: (spatial cycles across the band, tap phase rates kappa1 and
# kappa2 in rad per %RH). Beat rates kappa1-kappa2 give 0.73 and 1.42 beat
# periods over a 30% ramp; their folds land at different humidities, so the
# two depths jointly identify h.
FADE_GROUPS = (
    (5.3, 2 * math.pi / 17.0, 2 * math.pi / 29.0),
    (11.7, 2 * math.pi / 11.0, 2 * math.pi / 23.0),
)

# PR offset decays as exp(-PR_DECAY_RATE * elapsed/duration).
PR_DECAY_RATE = 1.2

# Slow wander processes (AGC gain, fade positions): a smooth bounded
# multi-sinusoid with this many random-phase components, periods between
# the capture length and 1/WANDER_FASTEST of it, normalized to unit
# standard deviation and clipped at +/-WANDER_CLIP sigma. Slow enough that
# a Hampel window sees it as locally smooth, but it covers its range
# instead of hugging two extremes.
WANDER_COMPONENTS = 8
WANDER_FASTEST = 12.0
WANDER_CLIP = 2.5

_GOLDEN = 0.6180339887498949


@dataclass
class ScenarioConfig:
    """Chamber scenario parameters.

    Humidity ramps from ``ramp_start`` to ``ramp_end`` in ``ramp_step``
    plateaus of ``dwell_per_step`` wall-clock seconds, then depletes back
    towards the start over ``depletion_duration`` wall-clock seconds; both
    are divided by ``time_compression`` in the generated timeline.
    ``tx_interval`` is the ping interval that, with handshake replies,
    yields ``frame_rate`` frames per second; only ``frame_rate`` shapes the
    output. ``pr_magnitude`` is in robust-sigma units of ``noise_std``, and
    ``label_noise_std`` models the +/-2% RH sensor precision as Gaussian
    noise with sigma 1.
    """

    frame_rate: float = 8.0
    tx_interval: float = 0.25
    ramp_start: float = 40.0
    ramp_end: float = 70.0
    ramp_step: float = 1.0
    dwell_per_step: float = 480.0
    depletion_duration: float = 28800.0
    time_compression: float = 60.0
    pr_period: float = 60.0
    pr_duration_min: float = 5.0
    pr_duration_max: float = 10.0
    pr_magnitude: float = 8.0
    noise_std: float = 300.0
    label_noise_std: float = 1.0
    attenuation_coeff: float = 1.1e-4
    baseline_level: float = 3000.0
    baseline_spread: float = 0.2
    fade_depth: float = 0.25
    fade_drift: float = 2.0
    gain_drift: float = 0.06
    trials: int = 4
    trial_fingerprint: float = 0.35
    trial_gain: float = 0.03
    seed: int = 7

    def validate(self) -> None:
        if self.frame_rate <= 0 or self.tx_interval <= 0:
            raise ValueError("frame_rate and tx_interval must be positive")
        if not 0 < self.ramp_start < self.ramp_end:
            raise ValueError("need 0 < ramp_start < ramp_end")
        if self.ramp_step <= 0:
            raise ValueError("ramp_step must be positive")
        steps = (self.ramp_end - self.ramp_start) / self.ramp_step
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError("ramp range must be a whole number of steps")
        for name in ("dwell_per_step", "depletion_duration", "time_compression",
                     "pr_period"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.pr_duration_min <= self.pr_duration_max:
            raise ValueError("need 0 < pr_duration_min <= pr_duration_max")
        for name in ("pr_magnitude", "noise_std", "label_noise_std",
                     "attenuation_coeff", "baseline_spread", "fade_depth",
                     "fade_drift", "gain_drift"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.fade_depth > 0.45:
            raise ValueError("fade_depth above 0.45 can drive amplitudes negative")
        if self.attenuation_coeff * self.ramp_end ** 2 >= 1.0:
            raise ValueError("attenuation would drive amplitudes negative")
        if self.baseline_level <= 0:
            raise ValueError("baseline_level must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.trial_fingerprint < 1:
            raise ValueError("trial_fingerprint must be in [0, 1)")
        if not 0 <= self.trial_gain < 1:
            raise ValueError("trial_gain must be in [0, 1)")


@dataclass(frozen=True)
class DisturbanceEvent:
    start_time: float
    end_time: float
    frame_indices: np.ndarray

    def to_dict(self) -> dict:
        return {"start_time": self.start_time, "end_time": self.end_time,
                "frame_indices": [int(i) for i in self.frame_indices]}


@dataclass
class DisturbanceLog:
    events: list[DisturbanceEvent] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)

    def all_frame_indices(self) -> np.ndarray:
        if not self.events:
            return np.empty(0, dtype=int)
        return np.concatenate([e.frame_indices for e in self.events])

    def to_dict(self) -> dict:
        return {"events": [e.to_dict() for e in self.events]}


def _plateau_levels(cfg: ScenarioConfig) -> np.ndarray:
    n = int(round((cfg.ramp_end - cfg.ramp_start) / cfg.ramp_step)) + 1
    return cfg.ramp_start + cfg.ramp_step * np.arange(n)


def scenario_duration(cfg: ScenarioConfig) -> tuple[float, float]:
    """(ramp duration, one-trial duration) in generated-timeline seconds."""
    dwell = cfg.dwell_per_step / cfg.time_compression
    ramp_t = _plateau_levels(cfg).size * dwell
    return ramp_t, ramp_t + cfg.depletion_duration / cfg.time_compression


def capture_duration(cfg: ScenarioConfig) -> float:
    """Total capture duration across all trials."""
    return cfg.trials * scenario_duration(cfg)[1]


def humidity_trajectory(cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame times and true humidity for the full capture: each trial
    is a staircase ramp followed by an exponential depletion back to
    within 1% of the start level."""
    cfg.validate()
    levels = _plateau_levels(cfg)
    dwell = cfg.dwell_per_step / cfg.time_compression
    ramp_t, trial_t = scenario_duration(cfg)
    dep_t = trial_t - ramp_t

    n_trial = int(trial_t * cfg.frame_rate)
    t = np.arange(n_trial) / cfg.frame_rate
    h = np.empty(n_trial)

    in_ramp = t < ramp_t
    idx = np.minimum((t[in_ramp] / dwell).astype(int), levels.size - 1)
    h[in_ramp] = levels[idx]

    # Time constant such that the closed-form endpoint lands at
    # start + 1% of start after exactly dep_t seconds.
    span = cfg.ramp_end - cfg.ramp_start
    tau = dep_t / math.log(span / (0.01 * cfg.ramp_start))
    h[~in_ramp] = cfg.ramp_start + span * np.exp(-(t[~in_ramp] - ramp_t) / tau)

    times = (np.tile(t, cfg.trials)
             + np.repeat(np.arange(cfg.trials) * trial_t, n_trial))
    return times, np.tile(h, cfg.trials)


def _wander(times: np.ndarray, total_t: float, phases: np.ndarray) -> np.ndarray:
    """Smooth bounded wander: unit-variance multi-sinusoid, clipped."""
    periods = total_t / np.logspace(0.0, math.log10(WANDER_FASTEST), WANDER_COMPONENTS)
    weights = 1.0 / np.sqrt(np.arange(1, WANDER_COMPONENTS + 1))
    out = np.zeros_like(times)
    for period, weight, phase in zip(periods, weights, phases):
        out += weight * np.sin(2.0 * math.pi * times / period + phase)
    out /= math.sqrt(float(np.sum(weights ** 2)) / 2.0)
    return np.clip(out, -WANDER_CLIP, WANDER_CLIP)


def generate_series(cfg: ScenarioConfig) -> tuple[CsiSeries, DisturbanceLog, CsiSeries]:
    """Generate (noisy series with noisy labels, disturbance log, clean series).

    The clean series carries the channel state (baseline, fingerprints,
    trial gains, envelope, fades) and the true humidity; the noisy series
    adds the receiver-side AGC wander, PR offsets and white noise, and its
    labels carry the sensor noise.

    Draw order from the seeded generator is fixed: baseline profile,
    per-trial fingerprints, per-trial tap phases, per-trial gains, AGC
    wander phases, fade position-wander phases, PR durations, amplitude
    noise, label noise.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    times, h = humidity_trajectory(cfg)
    n = times.size
    total_t = capture_duration(cfg)
    trial_idx = np.repeat(np.arange(cfg.trials), n // cfg.trials)

    baseline = cfg.baseline_level * (
        1.0 + cfg.baseline_spread * (2.0 * rng.random(SUBCARRIER_COUNT) - 1.0))
    fingerprints = 1.0 + cfg.trial_fingerprint * (
        2.0 * rng.random((cfg.trials, SUBCARRIER_COUNT)) - 1.0)
    tap_phases = rng.uniform(0.0, 2.0 * math.pi,
                             size=(cfg.trials, len(FADE_GROUPS), 2))
    trial_gains = 1.0 + cfg.trial_gain * (2.0 * rng.random(cfg.trials) - 1.0)
    agc_phases = rng.uniform(0.0, 2.0 * math.pi, size=WANDER_COMPONENTS)
    fade_phases = rng.uniform(0.0, 2.0 * math.pi,
                              size=(len(FADE_GROUPS), WANDER_COMPONENTS))

    envelope = 1.0 - cfg.attenuation_coeff * h ** 2

    s = np.arange(SUBCARRIER_COUNT)
    fades = np.zeros((n, SUBCARRIER_COUNT))
    for g, (cycles, kappa1, kappa2) in enumerate(FADE_GROUPS):
        # Two unit taps at one spatial frequency; their sum's magnitude is
        # the (humidity-dependent) fade depth, its angle the fade position.
        z = (np.exp(1j * (kappa1 * h + tap_phases[trial_idx, g, 0]))
             + np.exp(1j * (kappa2 * h + tap_phases[trial_idx, g, 1])))
        z = z * np.exp(1j * cfg.fade_drift * _wander(times, total_t, fade_phases[g]))
        spectral = 2.0 * math.pi * cycles * s / SUBCARRIER_COUNT
        fades += (cfg.fade_depth / 2.0) * (
            z.real[:, None] * np.cos(spectral)[None, :]
            - z.imag[:, None] * np.sin(spectral)[None, :])

    clean = (baseline[None, :] * fingerprints[trial_idx]
             * trial_gains[trial_idx, None] * envelope[:, None] * (1.0 + fades))

    agc = 1.0 + cfg.gain_drift * _wander(times, total_t, agc_phases)

    # PR events start on the period grid; the drawn duration may be clipped
    # by the end of the capture but the event still counts.
    log = DisturbanceLog()
    offsets = np.zeros(n)
    n_events = int(total_t / cfg.pr_period)
    durations = rng.uniform(cfg.pr_duration_min, cfg.pr_duration_max, size=n_events)
    for k in range(n_events):
        start = (k + 1) * cfg.pr_period
        if start >= total_t:
            break
        end = min(start + durations[k], total_t)
        idx = np.nonzero((times >= start) & (times < end))[0]
        peak = cfg.pr_magnitude * cfg.noise_std
        decay = np.exp(-PR_DECAY_RATE * (times[idx] - start) / durations[k])
        offsets[idx] += peak * decay
        log.events.append(DisturbanceEvent(start, end, idx))

    amps = clean * agc[:, None] + offsets[:, None]
    if cfg.noise_std > 0:
        amps = amps + rng.normal(0.0, cfg.noise_std, size=amps.shape)
    amps = np.maximum(amps, 0.0)  # amplitudes are magnitudes

    labels = h.copy()
    if cfg.label_noise_std > 0:
        labels = labels + rng.normal(0.0, cfg.label_noise_std, size=n)

    noisy = CsiSeries(times, amps, labels)
    clean_series = CsiSeries(times.copy(), clean, h.copy())
    return noisy, log, clean_series


# --- capture writing ---------------------------------------------------

_RECORD_HEADER = struct.Struct("<HbB6sHHHH")
_PCAP_GLOBAL = struct.Struct("<IHHiIII")
_PCAP_PACKET = struct.Struct("<IIII")

SOURCE_MAC = bytes.fromhex("025c510a0001")
_CHANSPEC = 0xE02A  # raw descriptor used for the 5.18 GHz / 80 MHz channel
_RSSI = -42
_FRAME_CTL = 0x88
_SRC_IP = bytes([10, 10, 10, 10])
_DST_IP = bytes([10, 10, 10, 255])


def quantize_iq(amp: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic int16 I/Q pair whose modulus approximates each
    amplitude. Phases are a fixed per-subcarrier low-discrepancy sequence,
    so writing is reproducible without a seed."""
    amp = np.asarray(amp, dtype=float)
    phases = 2.0 * math.pi * ((np.arange(amp.size) * _GOLDEN) % 1.0)
    re = np.clip(np.rint(amp * np.cos(phases)), -32768, 32767).astype(np.int16)
    im = np.clip(np.rint(amp * np.sin(phases)), -32768, 32767).astype(np.int16)
    return re, im


def _ip_checksum(header: bytes) -> int:
    total = sum(int.from_bytes(header[i:i + 2], "big") for i in range(0, len(header), 2))
    while total > 0xFFFF:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def _wrap_udp(payload: bytes, linktype: int) -> bytes:
    udp = struct.pack(">HHHH", CSI_UDP_PORT, CSI_UDP_PORT, 8 + len(payload), 0) + payload
    total_len = 20 + len(udp)
    head = struct.pack(">BBHHHBBH", 0x45, 0, total_len, 0, 0, 64, 17, 0) + _SRC_IP + _DST_IP
    checksum = _ip_checksum(head)
    ip = head[:10] + struct.pack(">H", checksum) + head[12:] + udp
    if linktype == LINKTYPE_RAW_IP:
        return ip
    return b"\xff" * 6 + SOURCE_MAC + b"\x08\x00" + ip


def write_capture(series: CsiSeries, path, linktype: str = "ethernet") -> None:
    """Write a series as a pcap capture in the ingest record layout.

    Amplitudes are embedded at the 242 non-null bin positions (nulls zero)
    and quantized to int16 I/Q; ``parse_capture`` round-trips the result.
    """
    lt = {"ethernet": LINKTYPE_ETHERNET, "rawip": LINKTYPE_RAW_IP}.get(linktype)
    if lt is None:
        raise ValueError(f"linktype must be 'ethernet' or 'rawip', got {linktype!r}")
    if series.n_subcarriers != SUBCARRIER_COUNT and len(series) > 0:
        raise ValueError(f"series must have {SUBCARRIER_COUNT} subcarrier columns")

    chunks = [_PCAP_GLOBAL.pack(PCAP_MAGIC, 2, 4, 0, 0, 65535, lt)]
    for i in range(len(series)):
        re, im = quantize_iq(series.amps[i])
        bins = np.zeros(2 * RAW_BIN_COUNT, dtype=np.int16)
        bins[2 * KEPT_BIN_INDICES] = re
        bins[2 * KEPT_BIN_INDICES + 1] = im
        record = _RECORD_HEADER.pack(
            RECORD_MAGIC, _RSSI, _FRAME_CTL, SOURCE_MAC, i & 0xFFFF, 0,
            _CHANSPEC, 0) + bins.tobytes()
        packet = _wrap_udp(record, lt)
        t = float(series.times[i])
        sec = int(t)
        usec = int(round((t - sec) * 1e6))
        if usec == 1_000_000:
            sec, usec = sec + 1, 0
        chunks.append(_PCAP_PACKET.pack(sec, usec, len(packet), len(packet)))
        chunks.append(packet)
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


# --- scenario files ----------------------------------------------------

def load_scenario(path) -> ScenarioConfig:
    """Read a scenario from a flat ``key = value`` file.

    Lines are ``name = number`` (or ``# comment``); names are the
    ScenarioConfig field names. Unknown keys are rejected.
    """
    numeric = {f.name: f.type for f in fields(ScenarioConfig)}
    values: dict[str, float | int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, text = line.partition("=")
            key, text = key.strip(), text.strip()
            if key not in numeric:
                raise ValueError(f"{path}:{lineno}: unknown scenario key {key!r}")
            try:
                values[key] = int(text) if key == "seed" else float(text)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key}: {text!r}") from exc
    cfg = ScenarioConfig(**values)
    cfg.validate()
    return cfg
