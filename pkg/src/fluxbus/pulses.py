"""Complex drive envelopes, linear coherent response, and spectral notching.

Conventions (used consistently across the package)
---------------------------------------------------
* Envelope samples are the complex baseband amplitude in angular units of
  rad/ns on a uniform grid t = 0 .. duration; the physical drive is
  Re[env(t) exp(+i 2 pi f_d t)] on the bus quadrature (a^dag + a).
* Forward Fourier transform: F(f) = integral env(t) exp(-i 2 pi f t) dt,
  evaluated as a rectangle-rule DFT (units rad).
* With those two choices the causal linear response of a mode detuned by
  Delta = f_mode - f_drive is
      alpha(T) = -(i/2) * integral_0^T exp(-i 2 pi Delta (T - t)) conj(env(t)) dt,
  whose magnitude is |F(Delta)| / 2.  Notching F at the quartet detunings
  therefore empties the bus for every computational state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import windows


@dataclass
class PulseEnvelope:
    """Complex baseband envelope on a uniform time grid.

    samples: complex amplitude in rad/ns; dt: sample period (ns);
    duration: gate time (ns).  Support is exactly [0, duration].
    """

    samples: np.ndarray
    dt: float
    duration: float = 120.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        expected = int(round(self.duration / self.dt)) + 1
        if len(self.samples) != expected:
            raise ValueError(
                f"expected {expected} samples for duration {self.duration} ns "
                f"at dt {self.dt} ns, got {len(self.samples)}")

    @property
    def times(self):
        return np.arange(len(self.samples)) * self.dt

    def scaled(self, factor):
        return PulseEnvelope(self.samples * factor, self.dt, self.duration)

    def energy(self):
        """Time-domain energy sum |env|^2 dt (rad^2/ns)."""
        return float(np.sum(np.abs(self.samples) ** 2) * self.dt)


@dataclass(frozen=True)
class SpectralConstraint:
    """Target spectral zeros (MHz) with notch windows and a guard band."""

    zeros: tuple
    notch_halfwidth: float = 0.5     # MHz
    guard_band: float = 100.0        # suppress |f| > guard_band MHz; None disables

    def __post_init__(self):
        z = tuple(float(f) for f in self.zeros)
        if len(set(z)) != len(z):
            raise ValueError("notch zeros must be distinct")
        object.__setattr__(self, "zeros", z)


@dataclass(frozen=True)
class ISEConfig:
    """Iteration count and transform padding for the spectral notcher."""

    iterations: int = 100
    pad_length: int = 16384
    max_bin_mhz: float = 0.25

    def resolve_pad(self, n_samples, dt):
        """Padding that honors both the bin-width cap and pad >= 8x record."""
        need = max(self.pad_length,
                   8 * n_samples,
                   int(math.ceil(1.0 / (self.max_bin_mhz * 1e-3 * dt))))
        return 1 << (need - 1).bit_length()


def seed_cosine(duration=120.0, amplitude=1.0, dt=0.25):
    """Cosine (Hann) seed pulse A (1 - cos(2 pi t / T)) / 2, zero at both ends."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    t = np.arange(int(round(duration / dt)) + 1) * dt
    samples = amplitude * 0.5 * (1.0 - np.cos(2.0 * np.pi * t / duration))
    return PulseEnvelope(samples.astype(complex), dt, duration)


def seed_flat_top(duration=120.0, amplitude=1.0, dt=0.25, ramp_fraction=0.35):
    """Tukey flat-top seed; keeps the photon excursion closer to its mean."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    n = int(round(duration / dt)) + 1
    samples = amplitude * windows.tukey(n, alpha=ramp_fraction)
    return PulseEnvelope(samples.astype(complex), dt, duration)


# ---------------------------------------------------------------------------
# spectra and linear response
# ---------------------------------------------------------------------------

@dataclass
class PulseSpectrum:
    """Discrete spectrum of an envelope; frequencies in MHz, values in rad."""

    freqs_mhz: np.ndarray
    values: np.ndarray
    dt: float

    def at(self, f_mhz):
        """Spectrum value at the grid bin nearest to each requested frequency."""
        f_mhz = np.atleast_1d(np.asarray(f_mhz, dtype=float))
        idx = [int(np.argmin(np.abs(self.freqs_mhz - f))) for f in f_mhz]
        return self.values[idx]

    def energy(self):
        """Spectral energy sum |F|^2 df; equals the time-domain energy (Parseval)."""
        df = (self.freqs_mhz[1] - self.freqs_mhz[0]) * 1e-3
        return float(np.sum(np.abs(self.values) ** 2) * df)


def spectrum(envelope: PulseEnvelope, pad_length=None, config: ISEConfig = None):
    """Zero-padded DFT of the envelope under the package transform convention."""
    config = config or ISEConfig()
    pad = pad_length or config.resolve_pad(len(envelope.samples), envelope.dt)
    values = np.fft.fft(envelope.samples, pad) * envelope.dt
    freqs = np.fft.fftfreq(pad, envelope.dt) * 1e3   # MHz
    order = np.argsort(freqs)
    return PulseSpectrum(freqs[order], values[order], envelope.dt)


def linear_alpha(envelope: PulseEnvelope, delta_mhz):
    """Final coherent amplitude of a linear mode detuned by delta (MHz).

    Evaluates the causal response
        alpha(T) = -(i/2) sum_j exp(-i 2 pi delta (T - t_j)) conj(env_j) dt,
    the same rectangle-rule sum as :func:`spectrum`, so |alpha(T)| equals
    |F(delta)| / 2 exactly for every delta on the transform grid.
    """
    w = 2.0 * np.pi * float(delta_mhz) * 1e-3       # rad/ns
    t = envelope.times
    phase = np.exp(-1j * w * (envelope.duration - t))
    return complex(-0.5j * envelope.dt
                   * np.sum(phase * np.conj(envelope.samples)))


def alpha_trajectory(envelope: PulseEnvelope, delta_mhz):
    """Coherent-state trajectory alpha(t) on the envelope grid.

    Integrates alpha' = -i 2 pi delta alpha - (i/2) conj(env) with an exact
    per-step integrating factor and midpoint drive; the terminal value agrees
    with :func:`linear_alpha` to the quadrature error of the grid.
    """
    w = 2.0 * np.pi * float(delta_mhz) * 1e-3
    env = envelope.samples
    dt = envelope.dt
    drive = 0.5 * (env[1:] + env[:-1])
    step_phase = np.exp(-1j * w * dt)
    kick = -0.5j * dt * np.exp(-0.5j * w * dt) * np.conj(drive)
    alpha = np.zeros(len(env), dtype=complex)
    for k in range(len(kick)):
        alpha[k + 1] = step_phase * alpha[k] + kick[k]
    return alpha


# ---------------------------------------------------------------------------
# iterative spectrum engineering
# ---------------------------------------------------------------------------

@dataclass
class ISEReport:
    """Per-notch seed/final spectral amplitudes and achieved suppression."""

    notch_mhz: np.ndarray
    seed_abs: np.ndarray
    final_abs: np.ndarray

    @property
    def suppression_db(self):
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(self.final_abs / self.seed_abs)


def ise_iterate(envelope: PulseEnvelope, constraint: SpectralConstraint,
                config: ISEConfig = None):
    """Iterative spectrum engineering: carve spectral zeros into an envelope.

    Each iteration flips the sign of the spectrum inside every notch window
    [f_i - hw, f_i + hw] and the guard bands |f| > guard, inverse transforms,
    and truncates the pulse back to [0, duration].  Returns the optimized
    envelope and an :class:`ISEReport` with the achieved suppression.
    """
    config = config or ISEConfig()
    n = len(envelope.samples)
    pad = config.resolve_pad(n, envelope.dt)
    freqs = np.fft.fftfreq(pad, envelope.dt) * 1e3   # MHz
    flip = np.zeros(pad, dtype=bool)
    if constraint.guard_band is not None:
        flip |= np.abs(freqs) > constraint.guard_band
    for fc in constraint.zeros:
        flip |= np.abs(freqs - fc) <= constraint.notch_halfwidth

    current = envelope.samples.copy()
    for _ in range(config.iterations):
        spec = np.fft.fft(current, pad)
        spec[flip] = -spec[flip]
        current = np.fft.ifft(spec)[:n]

    out = PulseEnvelope(current, envelope.dt, envelope.duration)
    zeros = np.asarray(constraint.zeros, dtype=float)
    seed_abs = np.abs(spectrum(envelope, pad).at(zeros))
    final_abs = np.abs(spectrum(out, pad).at(zeros))
    return out, ISEReport(zeros, seed_abs, final_abs)


def notch_targets(shifts, f_drive_ghz) -> SpectralConstraint:
    """Quartet detunings Delta_ij = f_bus|ij - f_drive as notch centers (MHz).

    Coincident detunings (e.g. zero dispersive shift) are merged; a drive
    sitting exactly on a quartet line is rejected as degenerate.
    """
    deltas = []
    for (_, f_bus) in sorted(shifts.quartet.items()):
        d = (f_bus - f_drive_ghz) * 1e3
        if abs(d) < 1e-9:
            raise ValueError("drive frequency coincides with a quartet line")
        deltas.append(round(d, 9))
    unique = tuple(dict.fromkeys(deltas))
    return SpectralConstraint(zeros=unique)


# ---------------------------------------------------------------------------
# CSV exchange
# ---------------------------------------------------------------------------

def write_envelope_csv(envelope: PulseEnvelope, path):
    data = np.column_stack([envelope.times, envelope.samples.real,
                            envelope.samples.imag])
    np.savetxt(path, data, delimiter=",", header="t_ns,re,im", comments="")


def read_envelope_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    t = data[:, 0]
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt):
        raise ValueError("envelope CSV must be on a uniform time grid")
    return PulseEnvelope(data[:, 1] + 1j * data[:, 2], dt, t[-1])


def write_spectrum_csv(spec: PulseSpectrum, path, f_range_mhz=250.0):
    keep = np.abs(spec.freqs_mhz) <= f_range_mhz
    mag = np.abs(spec.values[keep])
    ref = mag.max() if mag.max() > 0 else 1.0
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / ref)
    data = np.column_stack([spec.freqs_mhz[keep], spec.values[keep].real,
                            spec.values[keep].imag, db])
    np.savetxt(path, data, delimiter=",", header="f_MHz,re,im,abs_dB",
               comments="")
