"""Stochastic-integration oracle check of the closed-form spectra.

Quick single-pump version of the full equivalence run; the z statistic uses
the standard error estimated from a handful of realizations, so it follows
a Student-t law rather than a normal one.  The assertions allow for that:
a small fraction of comparisons may exceed 3 SE, none may exceed 6 SE.
"""

import numpy as np

from tpsh.cavity import CavityParams, steady_state
from tpsh.langevin_mc import mc_spectra
from tpsh.noise import quadrature_spectra

FIELDS = ("s_x1", "s_x2", "c_x", "s_y1", "s_y2", "c_y")


def test_mc_matches_closed_form():
    ss = steady_state(CavityParams())
    fx = (ss.rate_input + ss.rate_loss + 3.0 * (ss.rate_nl_port1 + ss.rate_nl_port2)) / (
        2.0 * np.pi
    )
    freqs = np.logspace(np.log10(0.05 * fx), np.log10(0.5 * fx), 6)
    mc = mc_spectra(ss, freqs, seed=5, n_realizations=6, n_steps=1 << 20)
    model = quadrature_spectra(ss, mc.spec.frequencies)

    zs = []
    for name in FIELDS:
        se = np.maximum(getattr(mc.se, name), 1e-12)
        zs.append(np.abs(getattr(mc.spec, name) - getattr(model, name)) / se)
    z = np.concatenate(zs)
    assert np.mean(z <= 3.0) >= 0.9
    assert np.max(z) <= 6.0


def test_mc_squeezing_is_visible():
    # the sum-variance dip must be resolved, not just consistent with 1
    ss = steady_state(CavityParams(pump_power=0.5, conversion_efficiency=0.059))
    fx = (ss.rate_input + ss.rate_loss + 3.0 * (ss.rate_nl_port1 + ss.rate_nl_port2)) / (
        2.0 * np.pi
    )
    mc = mc_spectra(ss, [0.05 * fx], seed=3, n_realizations=6, n_steps=1 << 20)
    var_sum = 0.5 * (mc.spec.s_x1[0] + mc.spec.s_x2[0] + mc.spec.c_x[0])
    se = 0.5 * np.sqrt(mc.se.s_x1[0] ** 2 + mc.se.s_x2[0] ** 2 + mc.se.c_x[0] ** 2)
    assert var_sum + 3.0 * se < 1.0


def test_mc_deterministic_for_seed():
    ss = steady_state(CavityParams())
    a = mc_spectra(ss, [6e6], seed=42, n_realizations=2, n_steps=1 << 16)
    b = mc_spectra(ss, [6e6], seed=42, n_realizations=2, n_steps=1 << 16)
    assert np.array_equal(a.spec.s_x1, b.spec.s_x1)
    assert np.array_equal(a.spec.c_y, b.spec.c_y)
