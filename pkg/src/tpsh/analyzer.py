"""Noise power spectra and witness evaluation from recorded traces.

Estimation follows the averaged-periodogram route: root-Hann window, 50%
overlap, density scaling, RBW = sample_rate / segment_length.  The quoted
n_averages is the non-overlapping segment count and sigma = power /
sqrt(n_averages), which slightly overstates the error of the overlapped
estimate; headline numbers inherit that conservatism.

Shot-noise referencing follows the measurement convention: the difference
PSD of an uncorrelated reference pair is used directly as the pair quantum
noise limit.  A reference gain below 1 therefore lowers the QNL and can only
shrink, never inflate, any nonclassical effect.  Electronic noise is removed
by linear power subtraction, either from a recorded dark trace or from the
chain's analytic noise floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .noise import WitnessReport
from .synth import DetectionChain, TwoChannelTrace

GAIN_MODES = ("fixed", "optimal", "dc_balance")

# bins dropped on each side of the spur line in band averages
_SPUR_GUARD = 2


@dataclass
class NoiseSpectrum:
    """Averaged one-sided PSD with per-bin statistical error.

    power is in (current units)^2/Hz unless stated otherwise; rbw is the bin
    spacing sample_rate/nperseg; sigma = power/sqrt(n_averages).
    """

    frequencies: np.ndarray
    power: np.ndarray
    rbw: float
    n_averages: int
    sigma: np.ndarray


def _segment_length(sample_rate: float, rbw: float) -> int:
    if rbw <= 0:
        raise ValueError("rbw must be > 0")
    nperseg = int(round(sample_rate / rbw))
    if nperseg < 8:
        raise ValueError("rbw too coarse for the sample rate")
    return nperseg


def welch_psd(x: np.ndarray, sample_rate: float, rbw: float) -> NoiseSpectrum:
    """Averaged periodogram of one record; rbw snaps to sample_rate/nperseg."""
    nperseg = _segment_length(sample_rate, rbw)
    n_averages = len(x) // nperseg
    if n_averages < 10:
        raise ValueError(
            "trace too short for the requested rbw: %d averages < 10" % n_averages
        )
    window = np.sqrt(signal.windows.hann(nperseg, sym=False))
    freqs, power = signal.welch(
        x,
        fs=sample_rate,
        window=window,
        nperseg=nperseg,
        noverlap=nperseg // 2,
        detrend="constant",
        scaling="density",
    )
    power = np.asarray(power, dtype=float)
    return NoiseSpectrum(
        frequencies=freqs,
        power=power,
        rbw=sample_rate / nperseg,
        n_averages=n_averages,
        sigma=power / math.sqrt(n_averages),
    )


def _currents(trace: TwoChannelTrace):
    # single precision: percent-level estimates, and x2 halves the memory traffic
    lsb1 = np.float32(trace.chain.lsb(trace.dc_1))
    lsb2 = np.float32(trace.chain.lsb(trace.dc_2))
    return (
        trace.samples_1.astype(np.float32) * lsb1,
        trace.samples_2.astype(np.float32) * lsb2,
    )


def welch_spectrum(trace: TwoChannelTrace, channel: int, rbw: float) -> NoiseSpectrum:
    """PSD of one trace channel in current units."""
    if channel not in (1, 2):
        raise ValueError("channel must be 1 or 2")
    cur1, cur2 = _currents(trace)
    x = cur1 if channel == 1 else cur2
    return welch_psd(x - x.mean(), trace.chain.sample_rate, rbw)


def combined_spectrum(trace: TwoChannelTrace, gain: float, mode: str, rbw: float) -> NoiseSpectrum:
    """PSD of i1 -/+ gain*i2 after DC removal; mode is 'difference' or 'sum'."""
    if mode not in ("sum", "difference"):
        raise ValueError("mode must be 'sum' or 'difference'")
    if gain < 0:
        raise ValueError("gain must be >= 0")
    cur1, cur2 = _currents(trace)
    x = cur1 + gain * cur2 if mode == "sum" else cur1 - gain * cur2
    return welch_psd(x - x.mean(), trace.chain.sample_rate, rbw)


def shot_noise_reference(trace: TwoChannelTrace, gain: float = 0.95, rbw: float = 100e3) -> NoiseSpectrum:
    """Difference PSD of an uncorrelated pair, used directly as the pair QNL."""
    return combined_spectrum(trace, gain, "difference", rbw)


def correct_electronic_noise(spec: NoiseSpectrum, dark: NoiseSpectrum) -> NoiseSpectrum:
    """Linear power subtraction of the dark spectrum, floored at zero."""
    if len(spec.frequencies) != len(dark.frequencies) or not np.allclose(
        spec.frequencies, dark.frequencies
    ):
        raise ValueError("signal and dark spectra are on different frequency grids")
    if abs(spec.rbw - dark.rbw) > 1e-9 * spec.rbw:
        raise ValueError("signal and dark spectra have different rbw")
    return NoiseSpectrum(
        frequencies=spec.frequencies,
        power=np.maximum(spec.power - dark.power, 0.0),
        rbw=spec.rbw,
        n_averages=spec.n_averages,
        sigma=np.hypot(spec.sigma, dark.sigma),
    )


def chain_power_response(chain: DetectionChain, frequencies: np.ndarray) -> np.ndarray:
    """|H(f)|^2 of the AC coupling and detector pole on the given grid."""
    return np.abs(chain.response(np.asarray(frequencies, dtype=float))) ** 2


def analytic_dark_spectrum(trace: TwoChannelTrace, gain: float, grid: NoiseSpectrum) -> NoiseSpectrum:
    """Chain noise floor for i1 -/+ gain*i2 on an existing spectrum's grid.

    Electronic noise is white before the chain filters; quantization noise
    enters after them.  Both channels share the electronic PSD, so sum and
    difference combinations have the same floor.
    """
    chain = trace.chain
    h2 = chain_power_response(chain, grid.frequencies)
    scale = 1.0 + gain * gain
    quant = (chain.lsb(trace.dc_1) ** 2 + (gain * chain.lsb(trace.dc_2)) ** 2) / (
        6.0 * chain.sample_rate
    )
    power = scale * chain.electronic_noise_psd * h2 + quant
    return NoiseSpectrum(
        frequencies=grid.frequencies,
        power=power,
        rbw=grid.rbw,
        n_averages=grid.n_averages,
        sigma=np.zeros_like(power),
    )


def analytic_qnl_spectrum(trace: TwoChannelTrace, gain: float, grid: NoiseSpectrum) -> NoiseSpectrum:
    """Shot-noise PSD of i1 -/+ gain*i2 implied by the trace DC currents."""
    h2 = chain_power_response(trace.chain, grid.frequencies)
    power = (trace.dc_1 + gain * gain * trace.dc_2) * h2
    return NoiseSpectrum(
        frequencies=grid.frequencies,
        power=power,
        rbw=grid.rbw,
        n_averages=grid.n_averages,
        sigma=np.zeros_like(power),
    )


def gain_balance_from_dc(trace: TwoChannelTrace) -> float:
    """DC balancing gain dc_1/dc_2, clamped to [0.5, 2]."""
    if trace.dc_1 <= 0 or trace.dc_2 <= 0:
        raise ValueError("gain balancing requires nonzero DC on both channels")
    return float(min(max(trace.dc_1 / trace.dc_2, 0.5), 2.0))


def _band_mask(freqs: np.ndarray, band, chain: DetectionChain, rbw: float) -> np.ndarray:
    lo, hi = band
    if not lo < hi:
        raise ValueError("band limits must satisfy low < high")
    mask = (freqs >= lo) & (freqs <= hi)
    if not np.any(mask):
        raise ValueError("band contains no spectrum bins")
    if lo - _SPUR_GUARD * rbw <= chain.spur_freq <= hi + _SPUR_GUARD * rbw:
        spur_bin = int(np.argmin(np.abs(freqs - chain.spur_freq)))
        left = max(spur_bin - _SPUR_GUARD, 0)
        mask[left : spur_bin + _SPUR_GUARD + 1] = False
        if not np.any(mask):
            raise ValueError("band contains only the spur region")
    return mask


def _band_stats(spec: NoiseSpectrum, mask: np.ndarray):
    n = int(np.count_nonzero(mask))
    mean = float(np.mean(spec.power[mask]))
    sigma = float(np.sqrt(np.sum(spec.sigma[mask] ** 2)) / n)
    return mean, sigma


def _resolve_gain(trace, gain_mode, fixed_gain, rbw, band):
    if gain_mode not in GAIN_MODES:
        raise ValueError("gain_mode must be one of %s" % (GAIN_MODES,))
    if gain_mode == "fixed":
        if fixed_gain <= 0:
            raise ValueError("fixed gain must be > 0")
        return float(fixed_gain)
    if gain_mode == "dc_balance":
        return gain_balance_from_dc(trace)
    # optimal: closed-form minimizer applied to band-averaged measured spectra
    cur1, cur2 = _currents(trace)
    fs = trace.chain.sample_rate
    p1 = welch_psd(cur1 - cur1.mean(), fs, rbw)
    p2 = welch_psd(cur2 - cur2.mean(), fs, rbw)
    nperseg = _segment_length(fs, rbw)
    window = np.sqrt(signal.windows.hann(nperseg, sym=False))
    freqs, csd = signal.csd(
        cur1 - cur1.mean(),
        cur2 - cur2.mean(),
        fs=fs,
        window=window,
        nperseg=nperseg,
        noverlap=nperseg // 2,
        detrend="constant",
    )
    mask = _band_mask(freqs, band, trace.chain, p1.rbw)
    s1 = float(np.mean(p1.power[mask]))
    s2 = float(np.mean(p2.power[mask]))
    c = 2.0 * float(np.mean(np.real(csd[mask])))
    if c == 0.0:
        return gain_balance_from_dc(trace)
    d = s2 - s1
    g = (d - math.sqrt(d * d + c * c)) / c
    # the electronic scale factor is a small balancing correction; when the
    # measured cross term is insignificant the minimizer wanders (it can even
    # go negative), so anything far from unity falls back to DC balance
    if not 0.5 <= g <= 2.0:
        return gain_balance_from_dc(trace)
    return g


def witness_from_traces(
    ab_trace: TwoChannelTrace,
    reference_trace: TwoChannelTrace | None,
    rbw: float,
    band,
    dark: TwoChannelTrace | None = None,
    gain_mode: str = "dc_balance",
    fixed_gain: float = 0.95,
) -> WitnessReport:
    """Witness evaluation from a post-beamsplitter trace pair.

    var_plus = 2 PSD_sum / QNL_pair and var_minus = 2 PSD_diff / QNL_pair,
    band-averaged with the spur region excluded.  The pair QNL comes from
    the reference trace's difference PSD (the conservative measurement
    convention); without a reference trace it falls back on the analytic
    shot level implied by the trace DC currents.  Electronic noise is
    subtracted from every estimate, using the dark trace when given and the
    chain's analytic floor otherwise.
    """
    chain = ab_trace.chain
    g = _resolve_gain(ab_trace, gain_mode, fixed_gain, rbw, band)

    def corrected(trace, gain, mode):
        spec = combined_spectrum(trace, gain, mode, rbw)
        if dark is not None:
            floor = combined_spectrum(dark, gain, mode, rbw)
        else:
            floor = analytic_dark_spectrum(trace, gain, spec)
        return correct_electronic_noise(spec, floor)

    psd_sum = corrected(ab_trace, g, "sum")
    psd_diff = corrected(ab_trace, g, "difference")

    if reference_trace is not None:
        g_ref = _resolve_gain(reference_trace, gain_mode, fixed_gain, rbw, band)
        qnl = corrected(reference_trace, g_ref, "difference")
    else:
        qnl = analytic_qnl_spectrum(ab_trace, g, psd_sum)

    mask = _band_mask(psd_sum.frequencies, band, chain, psd_sum.rbw)
    if np.any(qnl.power[mask] <= 0):
        raise ValueError("shot-noise reference vanishes inside the band")

    sum_mean, sum_sigma = _band_stats(psd_sum, mask)
    diff_mean, diff_sigma = _band_stats(psd_diff, mask)
    qnl_mean, qnl_sigma = _band_stats(qnl, mask)

    vp = 2.0 * sum_mean / qnl_mean
    vm = 2.0 * diff_mean / qnl_mean
    rel_qnl = qnl_sigma / qnl_mean
    vp_sigma = vp * math.hypot(sum_sigma / sum_mean, rel_qnl)
    vm_sigma = vm * math.hypot(diff_sigma / diff_mean, rel_qnl)

    duan = vp + vm
    num_sigma = math.hypot(sum_sigma, diff_sigma)
    duan_sigma = duan * math.hypot(num_sigma / (sum_mean + diff_mean), rel_qnl)
    db = 10.0 * math.log10(duan / 4.0)

    return WitnessReport(
        freq=0.5 * (band[0] + band[1]),
        var_sum=vp,
        var_diff=vm,
        duan_sum=duan,
        v=duan / 4.0,
        db=db,
        intensity_sum_db=10.0 * math.log10(vp / 2.0),
        intensity_diff_db=10.0 * math.log10(vm / 2.0),
        optimal_gain=g,
        entangled=bool(duan < 4.0),
        uncertainty={
            "var_sum": vp_sigma,
            "var_diff": vm_sigma,
            "duan_sum": duan_sigma,
            "v": duan_sigma / 4.0,
            "db": 10.0 / math.log(10.0) * duan_sigma / duan,
        },
    )
