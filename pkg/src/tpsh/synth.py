"""Synthetic two-channel photocurrent traces from target quadrature spectra.

Current-unit convention: a channel with mean photocurrent dc has a flat
one-sided shot-noise PSD equal to dc (current^2/Hz).  Normalized spectra map
to PSDs as

    P_11 = dc_1 * s_x1,   P_22 = dc_2 * s_x2,   P_12 = sqrt(dc_1 dc_2) * c_x / 2

(the 1/2 undoes the symmetrized-cross-spectrum convention).  Traces are
synthesized in the frequency domain: per-bin Cholesky factorization of the
2x2 spectral matrix drives independent complex Gaussian draws (circulant
embedding), then the chain applies, in order, electronic noise, AC-coupling
bandpass, detector pole, spur injection, and quantization.  The sample
stream is the AC-coupled fluctuation; mean currents ride along as metadata
because the bandpass would remove any embedded DC anyway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal
from scipy.fft import irfft

from .noise import QuadSpectra, witness_pair

# Spur amplitudes are quoted relative to the shot-noise RMS in this bandwidth,
# so the default produces a fixed peak-over-baseline at the nominal 100 kHz RBW.
SPUR_REFERENCE_BANDWIDTH = 100e3

# Fixed grid size for the analytic RMS integral that sets the ADC full scale.
_RMS_GRID = 65537

# Full scale = this many analytic RMS; clipping beyond it is counted.
_FULL_SCALE_SIGMAS = 6.0


@dataclass
class DetectionChain:
    """Measurement-chain parameters shared by synthesis and analysis.

    sample_rate          Hz
    adc_bits             ADC resolution, 8..24 (binary trace files hold <= 16)
    dc_current_1/2       mean photocurrents, arbitrary current units
    electronic_noise_rel electronic noise PSD relative to the shot PSD at the
                         mean of the two configured DC currents
    ac_coupling_center   Hz, center of the second-order AC-coupling bandpass
    ac_coupling_q        bandpass quality factor
    detector_pole        Hz, single-pole detector roll-off
    spur_freq            Hz, residual rf modulation line
    spur_amplitude       sinusoid amplitude per channel in units of the shot
                         RMS in SPUR_REFERENCE_BANDWIDTH (scales with sqrt(dc))
    """

    sample_rate: float = 200e6
    adc_bits: int = 14
    dc_current_1: float = 1.0
    dc_current_2: float = 1.0
    electronic_noise_rel: float = 0.1
    ac_coupling_center: float = 3.5e6
    ac_coupling_q: float = 0.7
    detector_pole: float = 12e6
    spur_freq: float = 15.8e6
    spur_amplitude: float = 5.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.sample_rate <= 40e6:
            raise ValueError("sample_rate must exceed twice the 20 MHz analysis band")
        if not 8 <= int(self.adc_bits) <= 24:
            raise ValueError("adc_bits must lie in [8, 24]")
        self.adc_bits = int(self.adc_bits)
        if self.dc_current_1 < 0 or self.dc_current_2 < 0:
            raise ValueError("dc currents must be >= 0")
        if self.electronic_noise_rel < 0:
            raise ValueError("electronic_noise_rel must be >= 0")
        if self.spur_amplitude < 0:
            raise ValueError("spur_amplitude must be >= 0")
        if self.ac_coupling_center <= 0 or self.detector_pole <= 0:
            raise ValueError("filter corner frequencies must be > 0")
        if self.ac_coupling_q <= 0:
            raise ValueError("ac_coupling_q must be > 0")
        if not 0 < self.spur_freq < self.sample_rate / 2:
            raise ValueError("spur_freq must lie below Nyquist")

    @property
    def electronic_noise_psd(self) -> float:
        """White electronic noise PSD in current^2/Hz, a fixed chain property."""
        return self.electronic_noise_rel * 0.5 * (self.dc_current_1 + self.dc_current_2)

    def _digital_filters(self):
        key = ("coef", self.sample_rate)
        if key not in self._cache:
            w_ac = 2.0 * math.pi * self.ac_coupling_center
            bp = signal.bilinear([w_ac / self.ac_coupling_q, 0.0],
                                 [1.0, w_ac / self.ac_coupling_q, w_ac ** 2],
                                 fs=self.sample_rate)
            w_p = 2.0 * math.pi * self.detector_pole
            lp = signal.bilinear([1.0], [1.0 / w_p, 1.0], fs=self.sample_rate)
            self._cache[key] = (bp, lp)
        return self._cache[key]

    def response(self, freqs: np.ndarray) -> np.ndarray:
        """Complex chain transfer function (AC coupling times pole) at freqs (Hz)."""
        key = ("resp", len(freqs), float(freqs[0]), float(freqs[-1]))
        if key not in self._cache:
            (b_bp, a_bp), (b_lp, a_lp) = self._digital_filters()
            _, h_bp = signal.freqz(b_bp, a_bp, worN=freqs, fs=self.sample_rate)
            _, h_lp = signal.freqz(b_lp, a_lp, worN=freqs, fs=self.sample_rate)
            self._cache[key] = h_bp * h_lp
        return self._cache[key]

    def spur_current_amplitude(self, dc: float) -> float:
        return self.spur_amplitude * math.sqrt(dc * SPUR_REFERENCE_BANDWIDTH)

    def analytic_rms(self, dc: float) -> float:
        """RMS of a shot-limited channel at mean current dc after the chain.

        Uses the coherent (flat) PSD plus electronic noise and the spur, on a
        fixed frequency grid, so traces of every kind taken at the same DC
        share the same ADC scaling exactly.
        """
        key = ("rms", float(dc))
        if key not in self._cache:
            f = np.linspace(0.0, self.sample_rate / 2.0, _RMS_GRID)
            h2 = np.abs(self.response(f)) ** 2
            var = np.trapezoid(h2 * (dc + self.electronic_noise_psd), f)
            var += 0.5 * self.spur_current_amplitude(dc) ** 2
            self._cache[key] = math.sqrt(var)
        return self._cache[key]

    def lsb(self, dc: float) -> float:
        """ADC code size in current units for a channel at mean current dc."""
        return _FULL_SCALE_SIGMAS * self.analytic_rms(dc) / 2 ** (self.adc_bits - 1)


@dataclass
class TwoChannelTrace:
    """Quantized two-channel recording plus the metadata needed to undo it.

    samples are ADC codes; dc_1/dc_2 are the mean photocurrents of this
    particular trace (witness arms, for instance, run at the average of the
    two configured currents).  clipped_1/2 count full-scale violations.
    """

    samples_1: np.ndarray
    samples_2: np.ndarray
    chain: DetectionChain
    duration: float
    seed: int
    dc_1: float
    dc_2: float
    clipped_1: int = 0
    clipped_2: int = 0

    def __post_init__(self):
        if len(self.samples_1) != len(self.samples_2):
            raise ValueError("channels must have equal length")
        top = 2 ** (self.chain.adc_bits - 1)
        for s in (self.samples_1, self.samples_2):
            if len(s) and (s.min() < -top or s.max() > top - 1):
                raise ValueError("ADC codes exceed the declared bit depth")

    @property
    def n_samples(self) -> int:
        return len(self.samples_1)


def _interp(freqs, spec_freqs, values):
    return np.interp(freqs, spec_freqs, values)


def _synthesize_core(p11_fn, p22_fn, p12_fn, chain, duration, seed, dc_pair):
    """Shared frequency-domain synthesis; p*_fn map a frequency grid to PSDs."""
    fs = chain.sample_rate
    n = int(round(duration * fs))
    if n < 2:
        raise ValueError("duration too short for the sample rate")
    nfreq = n // 2 + 1
    freqs = np.fft.rfftfreq(n, 1.0 / fs)

    p11 = np.asarray(p11_fn(freqs), dtype=float) + chain.electronic_noise_psd
    p22 = np.asarray(p22_fn(freqs), dtype=float) + chain.electronic_noise_psd
    p12 = np.asarray(p12_fn(freqs), dtype=float)

    bad = (p11 < 0) | (p22 < 0)
    det = p11 * p22 - p12 * p12
    bad |= det < -1e-12 * np.maximum(p11 * p22, 1e-300)
    if np.any(bad):
        f_bad = float(freqs[np.argmax(bad)])
        raise ValueError(
            "spectral matrix is not positive semidefinite at %.6g Hz" % f_bad
        )

    l11 = np.sqrt(p11)
    with np.errstate(invalid="ignore", divide="ignore"):
        l21 = np.where(l11 > 0, p12 / np.where(l11 > 0, l11, 1.0), 0.0)
    l22 = np.sqrt(np.maximum(p22 - l21 * l21, 0.0))

    # single precision from here on: PSD estimates live at the percent level
    scale = math.sqrt(n * fs / 4.0)
    a11 = (scale * l11).astype(np.float32)
    a21 = (scale * l21).astype(np.float32)
    a22 = (scale * l22).astype(np.float32)
    del l11, l21, l22, p11, p22, p12

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    z1 = rng.standard_normal(nfreq, dtype=np.float32) + 1j * rng.standard_normal(
        nfreq, dtype=np.float32
    )
    z2 = rng.standard_normal(nfreq, dtype=np.float32) + 1j * rng.standard_normal(
        nfreq, dtype=np.float32
    )
    phases = rng.uniform(0.0, 2.0 * math.pi, 2)

    x2 = a21 * z1
    x2 += a22 * z2
    x1 = z1
    x1 *= a11
    del z2, a11, a21, a22

    for x in (x1, x2):
        x[0] = 0.0
        if n % 2 == 0:
            x[-1] = math.sqrt(2.0) * x[-1].real

    h = chain.response(freqs).astype(np.complex64)
    x1 *= h
    x2 *= h

    # spur rides in after the filters, at the nearest representable bin
    if chain.spur_amplitude > 0:
        k0 = int(round(chain.spur_freq * n / fs))
        if 0 < k0 < nfreq - 1:
            for x, dc, ph in ((x1, dc_pair[0], phases[0]), (x2, dc_pair[1], phases[1])):
                x[k0] += chain.spur_current_amplitude(dc) * (n / 2.0) * np.exp(1j * ph)

    top = 2 ** (chain.adc_bits - 1)
    out = []
    clips = []
    for x, dc in ((x1, dc_pair[0]), (x2, dc_pair[1])):
        lsb = chain.lsb(dc)
        if lsb == 0.0:
            # silent channel: no signal, no noise, nothing to resolve
            out.append(np.zeros(n, dtype=np.int32))
            clips.append(0)
            continue
        y = irfft(x, n=n)
        y /= np.float32(lsb)
        codes = np.rint(y, out=y)
        clipped = int(np.count_nonzero((codes < -top) | (codes > top - 1)))
        codes = np.clip(codes, -top, top - 1, out=codes)
        out.append(codes.astype(np.int32))
        clips.append(clipped)
    del x1, x2

    return TwoChannelTrace(
        samples_1=out[0],
        samples_2=out[1],
        chain=chain,
        duration=duration,
        seed=int(seed),
        dc_1=float(dc_pair[0]),
        dc_2=float(dc_pair[1]),
        clipped_1=clips[0],
        clipped_2=clips[1],
    )


def _check_coverage(spec: QuadSpectra):
    if spec.frequencies.min() > 0.5e6 + 1.0 or spec.frequencies.max() < 20e6 - 1.0:
        raise ValueError("input spectra must cover 0.5 to 20 MHz")


def synthesize(spec: QuadSpectra, chain: DetectionChain, duration: float, seed: int) -> TwoChannelTrace:
    """Direct-detection trace pair realizing the amplitude-sector spectra.

    duration >= 10 ms; the spectra grid must cover 0.5 to 20 MHz (values are
    interpolated onto the synthesis grid and clamped beyond the ends).
    """
    if duration < 10e-3:
        raise ValueError("duration must be >= 10 ms")
    _check_coverage(spec)
    dc1 = chain.dc_current_1
    dc2 = chain.dc_current_2
    cross = math.sqrt(dc1 * dc2) / 2.0
    return _synthesize_core(
        lambda f: dc1 * _interp(f, spec.frequencies, spec.s_x1),
        lambda f: dc2 * _interp(f, spec.frequencies, spec.s_x2),
        lambda f: cross * _interp(f, spec.frequencies, spec.c_x),
        chain, duration, seed, (dc1, dc2),
    )


def witness_arm_traces(spec: QuadSpectra, chain: DetectionChain, duration: float, seed: int) -> TwoChannelTrace:
    """Post-beamsplitter detector pair for the witness measurement.

    Combining symmetric beams with a pi/2 phase puts each arm at the average
    DC current; the arm sum carries 2 S_X + C_X and the arm difference
    2 S_Y - C_Y, which fixes the arm auto- and cross-spectra to
    (vp + vm)/4 and (vp - vm)/2 in normalized units.
    """
    if duration < 10e-3:
        raise ValueError("duration must be >= 10 ms")
    _check_coverage(spec)
    vp, vm = witness_pair(spec)
    s_arm = (vp + vm) / 4.0
    c_arm = (vp - vm) / 2.0
    dc_arm = 0.5 * (chain.dc_current_1 + chain.dc_current_2)
    return _synthesize_core(
        lambda f: dc_arm * _interp(f, spec.frequencies, s_arm),
        lambda f: dc_arm * _interp(f, spec.frequencies, s_arm),
        lambda f: (dc_arm / 2.0) * _interp(f, spec.frequencies, c_arm),
        chain, duration, seed, (dc_arm, dc_arm),
    )


def shot_noise_pair(dc_1: float, dc_2: float, chain: DetectionChain, duration: float, seed: int) -> TwoChannelTrace:
    """Two independent shot-noise-limited channels at the given DC currents.

    The electronic noise floor stays at the chain's configured level, so a
    channel at zero current records electronic noise only; dc_1 = dc_2 = 0
    yields a dark trace.
    """
    if duration < 10e-3:
        raise ValueError("duration must be >= 10 ms")
    if dc_1 < 0 or dc_2 < 0:
        raise ValueError("dc currents must be >= 0")
    zeros = lambda f: np.zeros_like(f)
    return _synthesize_core(
        lambda f: np.full_like(f, float(dc_1)),
        lambda f: np.full_like(f, float(dc_2)),
        zeros, chain, duration, seed, (float(dc_1), float(dc_2)),
    )


def dark_trace(chain: DetectionChain, duration: float, seed: int) -> TwoChannelTrace:
    """Electronic-noise-only recording (both channels unilluminated)."""
    return shot_noise_pair(0.0, 0.0, chain, duration, seed)
