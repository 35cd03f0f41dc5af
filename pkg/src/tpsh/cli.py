"""Command-line surface: model, synthesis, analysis, and sweeps.

Every command is deterministic for a fixed config and seed; output bytes
do not embed timestamps (those go to the sidecar run.log).  Files are
written atomically.  Errors leave one machine-readable JSON line on stderr
and a nonzero exit status.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
import time

import numpy as np

from .analyzer import (
    analytic_dark_spectrum,
    combined_spectrum,
    correct_electronic_noise,
    gain_balance_from_dc,
    witness_from_traces,
)
from .cavity import steady_state
from .config import RunConfig, load_config
from .noise import (
    apply_detection_loss,
    default_frequency_grid,
    quadrature_spectra,
    witness_report,
)
from .synth import dark_trace, shot_noise_pair, witness_arm_traces, synthesize
from .traceio import read_trace, write_trace


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


def _log(cfg: RunConfig, message: str) -> None:
    # the one place a timestamp is allowed to appear
    with open(_out_path(cfg, "run.log"), "a") as fh:
        fh.write("%s %s\n" % (time.strftime("%Y-%m-%dT%H:%M:%S"), message))


def _model_csv(spec) -> str:
    lines = ["freq_hz,s_x1,s_x2,s_y1,s_y2,c_x,c_y"]
    for i in range(len(spec.frequencies)):
        lines.append(",".join("%.17g" % v for v in (
            spec.frequencies[i], spec.s_x1[i], spec.s_x2[i],
            spec.s_y1[i], spec.s_y2[i], spec.c_x[i], spec.c_y[i],
        )))
    return "\n".join(lines) + "\n"


def _measured_csv(ns) -> str:
    lines = ["freq_hz,power,sigma"]
    for i in range(len(ns.frequencies)):
        lines.append(",".join("%.17g" % v for v in (
            ns.frequencies[i], ns.power[i], ns.sigma[i],
        )))
    return "\n".join(lines) + "\n"


def _print_json(payload: dict) -> None:
    print(json.dumps(payload))


def _detected_spectra(cfg: RunConfig, frequencies=None):
    if frequencies is None:
        frequencies = default_frequency_grid()
    ss = steady_state(cfg.cavity)
    spec = quadrature_spectra(ss, frequencies)
    return apply_detection_loss(spec, cfg.cavity.total_detection_efficiency)


def cmd_steady_state(cfg: RunConfig, args) -> int:
    ss = steady_state(cfg.cavity)
    _print_json(dataclasses.asdict(ss))
    return 0


def cmd_spectra(cfg: RunConfig, args) -> int:
    spec = _detected_spectra(cfg)
    path = _out_path(cfg, "spectra.csv")
    _atomic_write(path, _model_csv(spec))
    _log(cfg, "spectra")
    _print_json({"written": path, "rows": len(spec.frequencies)})
    return 0


def cmd_synth(cfg: RunConfig, args) -> int:
    spec = _detected_spectra(cfg)
    trace = synthesize(spec, cfg.chain, cfg.duration, cfg.seed)
    path = _out_path(cfg, "trace.bin")
    write_trace(trace, path)
    _log(cfg, "synth seed=%d" % cfg.seed)
    _print_json({
        "written": path,
        "samples_per_channel": trace.n_samples,
        "clipped": [trace.clipped_1, trace.clipped_2],
    })
    return 0


def cmd_analyze(cfg: RunConfig, args) -> int:
    trace = read_trace(args.trace, chain=cfg.chain)
    reference = read_trace(args.reference, chain=cfg.chain) if args.reference else None
    dark = read_trace(args.dark, chain=cfg.chain) if args.dark else None
    a = cfg.analysis

    if a.gain_mode == "fixed":
        gain = a.fixed_gain
    else:
        gain = gain_balance_from_dc(trace)
    spectra = {}
    for mode, name in (("sum", "sum_spectrum.csv"), ("difference", "difference_spectrum.csv")):
        raw = combined_spectrum(trace, gain, mode, a.rbw)
        floor = (combined_spectrum(dark, gain, mode, a.rbw) if dark is not None
                 else analytic_dark_spectrum(trace, gain, raw))
        corrected = correct_electronic_noise(raw, floor)
        path = _out_path(cfg, name)
        _atomic_write(path, _measured_csv(corrected))
        spectra[mode] = path

    report = witness_from_traces(
        trace, reference, a.rbw, (a.band_low, a.band_high),
        dark=dark, gain_mode=a.gain_mode, fixed_gain=a.fixed_gain,
    )
    report_path = _out_path(cfg, "report.json")
    _atomic_write(report_path, json.dumps(report.as_dict(), indent=2) + "\n")
    _log(cfg, "analyze %s" % args.trace)
    _print_json(report.as_dict())
    return 0


def cmd_witness(cfg: RunConfig, args) -> int:
    spec = _detected_spectra(cfg)
    chain = cfg.chain
    seeds = np.random.SeedSequence(cfg.seed).generate_state(3, dtype=np.uint64)
    ab = witness_arm_traces(spec, chain, cfg.duration, int(seeds[0]))
    reference = shot_noise_pair(
        chain.dc_current_1, chain.dc_current_2, chain, cfg.duration, int(seeds[1])
    )
    dark = dark_trace(chain, cfg.duration, int(seeds[2]))
    a = cfg.analysis
    report = witness_from_traces(
        ab, reference, a.rbw, (a.band_low, a.band_high),
        dark=dark, gain_mode=a.gain_mode, fixed_gain=a.fixed_gain,
    )
    path = _out_path(cfg, "witness.json")
    _atomic_write(path, json.dumps(report.as_dict(), indent=2) + "\n")
    _log(cfg, "witness seed=%d" % cfg.seed)
    _print_json(report.as_dict())
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    pumps = np.linspace(0.0, args.pump_max_w, args.points)
    freq = 0.5 * (cfg.analysis.band_low + cfg.analysis.band_high)
    grid = np.array([freq])
    eta = cfg.cavity.total_detection_efficiency
    rows = []
    for pump in pumps:
        params = dataclasses.replace(
            cfg.cavity,
            pump_power=float(pump),
            conversion_efficiency=cfg.cavity.conversion_efficiency * args.enl_scale,
        )
        spec = apply_detection_loss(quadrature_spectra(steady_state(params), grid), eta)
        rep = witness_report(spec, freq)
        rows.append((pump, rep.var_sum, rep.var_diff, rep.duan_sum, rep.v, rep.db))
    lines = ["pump_w,var_plus,var_minus,duan_sum,v,db"]
    for row in rows:
        lines.append(",".join("%.17g" % v for v in row))
    path = _out_path(cfg, "sweep.csv")
    _atomic_write(path, "\n".join(lines) + "\n")
    _log(cfg, "sweep enl_scale=%g" % args.enl_scale)
    _print_json({
        "written": path,
        "points": len(rows),
        "duan_first": rows[0][3],
        "duan_last": rows[-1][3],
    })
    return 0


_COMMANDS = {
    "steady-state": cmd_steady_state,
    "spectra": cmd_spectra,
    "synth": cmd_synth,
    "analyze": cmd_analyze,
    "witness": cmd_witness,
    "sweep": cmd_sweep,
}


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.pump_mw is not None:
        cfg = dataclasses.replace(
            cfg, cavity=dataclasses.replace(cfg.cavity, pump_power=args.pump_mw * 1e-3)
        )
    if args.rbw_khz is not None:
        cfg = dataclasses.replace(
            cfg, analysis=dataclasses.replace(cfg.analysis, rbw=args.rbw_khz * 1e3)
        )
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.duration_ms is not None:
        cfg = dataclasses.replace(cfg, duration=args.duration_ms * 1e-3)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output_dir=args.out)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="config file (flat key = value)")
    common.add_argument("--seed", type=int, help="override run.seed")
    common.add_argument("--pump-mw", type=float, help="override cavity.pump_power, in mW")
    common.add_argument("--rbw-khz", type=float, help="override analysis.rbw, in kHz")
    common.add_argument("--out", metavar="DIR", help="override run.output_dir")
    common.add_argument("--duration-ms", type=float, help="override run.duration, in ms")

    parser = argparse.ArgumentParser(
        prog="tpsh",
        description="Twin-beam intensity correlations and quadrature "
                    "entanglement from an intracavity frequency doubler.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("steady-state", parents=[common],
                   help="print the cavity operating point")
    sub.add_parser("spectra", parents=[common],
                   help="write the detected quadrature spectra as CSV")
    sub.add_parser("synth", parents=[common],
                   help="synthesize a two-channel trace file")
    p_analyze = sub.add_parser("analyze", parents=[common],
                               help="spectra and witness report from a trace file")
    p_analyze.add_argument("trace", help="trace file to analyze")
    p_analyze.add_argument("--reference", metavar="PATH",
                           help="shot-noise reference trace (analytic QNL if absent)")
    p_analyze.add_argument("--dark", metavar="PATH",
                           help="dark trace (analytic electronic floor if absent)")
    sub.add_parser("witness", parents=[common],
                   help="end-to-end model, synthesis, analysis, witness report")
    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="witness numbers vs pump power (model)")
    p_sweep.add_argument("--enl-scale", type=float, default=10.0,
                         help="conversion-efficiency multiplier (default 10)")
    p_sweep.add_argument("--pump-max-w", type=float, default=0.5,
                         help="sweep endpoint in W (default 0.5)")
    p_sweep.add_argument("--points", type=int, default=26,
                         help="number of sweep points (default 26)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        return _COMMANDS[args.command](cfg, args)
    except (ValueError, RuntimeError, OSError) as err:
        print(json.dumps({"error": str(err)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
