"""Monte-Carlo cross-check of the closed-form quadrature spectra.

Integrates the same linearized stochastic model with an explicit
Euler-Maruyama stepper and estimates the output spectra by Welch/CSD
averaging over independent realizations.  Exists purely as an oracle: slow,
simple, and sharing no code path with noise.quadrature_spectra.

Discrete model per quadrature sector (q in {x, y}, damping D_q):

    x[i+1] = (1 - D_q dt) x[i] - (sqrt(2 g_in) dW0 + sqrt(2 g_l) dWl
                                  + 2 sqrt(g_1) dW1 + 2 sqrt(g_2) dW2)[i]
    out_k[i] = dWk[i] / dt + 2 sqrt(g_k) x[i]

with dW ~ N(0, dt) and x[i] independent of the step-i increments
(non-anticipating).  The raw one-sided Welch level of a vacuum input is 2,
so estimates are halved to the shot-noise = 1 normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .cavity import SteadyState
from .noise import QuadSpectra


@dataclass
class MCSpectra:
    """Monte-Carlo estimates and their standard errors (same field layout)."""

    spec: QuadSpectra
    se: QuadSpectra
    n_realizations: int
    dt: float


def _ar1(drive: np.ndarray, decay: float) -> np.ndarray:
    # x[i] = decay*x[i-1] + drive[i-1]; lfilter output is then shifted by one
    y = signal.lfilter([1.0], [1.0, -decay], drive)
    out = np.empty_like(y)
    out[0] = 0.0
    out[1:] = y[:-1]
    return out


def _sector(rng, n_steps, dt, glin_pair, gk, damping):
    """One realization of one quadrature sector; returns the two output records."""
    g_in, g_l = glin_pair
    g1, g2 = gk
    sd = math.sqrt(dt)
    dw0 = rng.normal(0.0, sd, n_steps)
    dwl = rng.normal(0.0, sd, n_steps)
    dw1 = rng.normal(0.0, sd, n_steps)
    dw2 = rng.normal(0.0, sd, n_steps)
    drive = -(
        math.sqrt(2.0 * g_in) * dw0
        + math.sqrt(2.0 * g_l) * dwl
        + 2.0 * math.sqrt(g1) * dw1
        + 2.0 * math.sqrt(g2) * dw2
    )
    x = _ar1(drive, 1.0 - damping * dt)
    out1 = dw1 / dt + 2.0 * math.sqrt(g1) * x
    out2 = dw2 / dt + 2.0 * math.sqrt(g2) * x
    return out1, out2


def mc_spectra(
    ss: SteadyState,
    frequencies,
    seed: int,
    n_realizations: int = 8,
    n_steps: int = 1 << 21,
    oversample: float = 100.0,
    nperseg: int = 1 << 16,
    avg_bins: int = 2,
) -> MCSpectra:
    """Estimate output quadrature spectra at the requested frequencies (Hz).

    dt is set to 1 / (oversample * D_x); a burn-in of 10 / (D_x dt) steps is
    discarded before estimation.  Each spectrum value is the Welch estimate
    band-averaged over +-avg_bins around the nearest bin; the standard error
    is the scatter over realizations divided by sqrt(n_realizations).
    """
    freqs = np.atleast_1d(np.asarray(frequencies, dtype=float))
    g1 = ss.rate_nl_port1
    g2 = ss.rate_nl_port2
    gnl = g1 + g2
    glin_pair = (ss.rate_input, ss.rate_loss)
    dx = ss.rate_input + ss.rate_loss + 3.0 * gnl
    dy = ss.rate_input + ss.rate_loss + gnl

    dt = 1.0 / (oversample * dx)
    fs = 1.0 / dt
    if np.any(freqs >= fs / 2):
        raise ValueError("requested frequency above simulation Nyquist")
    burn = int(10.0 / (dx * dt)) + 1

    rng = np.random.default_rng(seed)
    window = np.sqrt(signal.windows.hann(nperseg, sym=False))
    wargs = dict(
        fs=fs, window=window, nperseg=nperseg, noverlap=nperseg // 2, detrend="constant"
    )

    per_real = {k: [] for k in ("s_x1", "s_x2", "c_x", "s_y1", "s_y2", "c_y")}
    bin_freqs = None
    for _ in range(n_realizations):
        x1, x2 = _sector(rng, n_steps + burn, dt, glin_pair, (g1, g2), dx)
        y1, y2 = _sector(rng, n_steps + burn, dt, glin_pair, (g1, g2), dy)
        x1, x2, y1, y2 = (a[burn:] for a in (x1, x2, y1, y2))

        f, p_x1 = signal.welch(x1, **wargs)
        _, p_x2 = signal.welch(x2, **wargs)
        _, p_y1 = signal.welch(y1, **wargs)
        _, p_y2 = signal.welch(y2, **wargs)
        _, cs_x = signal.csd(x1, x2, **wargs)
        _, cs_y = signal.csd(y1, y2, **wargs)

        if bin_freqs is None:
            centers = np.array([int(np.argmin(np.abs(f - ft))) for ft in freqs])
            if np.any(centers - avg_bins < 1) or np.any(centers + avg_bins >= len(f)):
                raise ValueError("frequency too close to the simulation grid edge")
            sel = centers[:, None] + np.arange(-avg_bins, avg_bins + 1)[None, :]
            bin_freqs = f[centers]

        # one-sided vacuum level is 2; cross convention matches noise.QuadSpectra
        per_real["s_x1"].append(np.mean(p_x1[sel], axis=1) / 2.0)
        per_real["s_x2"].append(np.mean(p_x2[sel], axis=1) / 2.0)
        per_real["s_y1"].append(np.mean(p_y1[sel], axis=1) / 2.0)
        per_real["s_y2"].append(np.mean(p_y2[sel], axis=1) / 2.0)
        per_real["c_x"].append(np.mean(np.real(cs_x[sel]), axis=1))
        per_real["c_y"].append(np.mean(np.real(cs_y[sel]), axis=1))

    means = {}
    ses = {}
    root_n = math.sqrt(n_realizations)
    for key, vals in per_real.items():
        stack = np.vstack(vals)
        means[key] = stack.mean(axis=0)
        ses[key] = stack.std(axis=0, ddof=1) / root_n

    return MCSpectra(
        spec=QuadSpectra(frequencies=bin_freqs, **means),
        se=QuadSpectra(frequencies=bin_freqs, **ses),
        n_realizations=n_realizations,
        dt=dt,
    )
