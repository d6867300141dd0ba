"""Command-line front end.

Subcommands: analyze, design, simulate, sensitivity, montecarlo.  Every
command prints one self-contained JSON report to stdout (schema shipped in
dvccosc/schemas/run_report.schema.json); bulk series go to CSV files.
Physical quantities are serialized in SI base units with unit-suffixed keys.

Exit codes: 0 success, 1 input/usage error, 2 analysis/simulation error.
All commands are deterministic functions of their inputs and flags.

The DVCCOSC_OUTDIR environment variable sets the directory for output files
whose paths are not given explicitly (default: current directory).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import importlib.resources
import json
import os
import sys

from . import __version__, mna, theory, transient, waveform as wf
from . import netlist as nl
from .dvcc import SatModel

SCHEMA_VERSION = 1


def schema_path():
    """Path of the JSON schema the reports validate against."""
    return importlib.resources.files("dvccosc").joinpath(
        "schemas/run_report.schema.json")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; the report contract
    # reserves 2 for analysis errors, so convert to our own exception.
    def error(self, message):
        raise UsageError(message)


def _out_path(explicit: str | None, default_name: str) -> str:
    if explicit:
        return explicit
    return os.path.join(os.environ.get("DVCCOSC_OUTDIR", "."), default_name)


#: CLI flags that override the corresponding attribute on every DVCC.
_DVCC_OVERRIDES = ("alpha1", "alpha2", "beta1", "beta2", "vsat", "sat")


def _read_netlist(path: str, args=None) -> tuple[str, nl.Netlist]:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    netlist = nl.parse(text)
    if args is not None:
        netlist = _apply_dvcc_overrides(netlist, args)
    return text, netlist


def _apply_dvcc_overrides(netlist: nl.Netlist, args) -> nl.Netlist:
    """Apply --alpha1/--beta2/--vsat/--sat style flags to all conveyors."""
    updates = {}
    for flag in _DVCC_OVERRIDES:
        value = getattr(args, flag, None)
        if value is None:
            continue
        if flag == "sat":
            updates["sat_model"] = SatModel(value)
        elif flag == "vsat":
            updates["v_sat"] = value
        else:
            updates[flag] = value
    if not updates:
        return netlist
    elements = tuple(
        dataclasses.replace(e, params=dataclasses.replace(e.params, **updates))
        if isinstance(e, nl.Dvcc) else e
        for e in netlist.elements)
    out = nl.Netlist(elements, netlist.probes)
    problems = nl.validate(out)
    if problems:
        raise nl.NetlistError("; ".join(problems))
    return out


def _base_report(command: str, argv: list[str], netlist_text: str,
                 netlist_path: str | None, params: theory.OscParams | None,
                 flags: dict) -> dict:
    components = dvcc = None
    if params is not None:
        components = {
            "r1_ohm": params.r1,
            "r2_ohm": params.r2,
            "c1_farad": params.c1,
            "c2_farad": params.c2,
        }
        d = params.dvcc
        dvcc = {
            "alpha1": d.alpha1,
            "alpha2": d.alpha2,
            "beta1": d.beta1,
            "beta2": d.beta2,
            "v_sat_volt": d.v_sat,
            "sat_model": d.sat_model.value,
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_name": "dvccosc",
        "tool_version": __version__,
        "command": command,
        "argv": argv,
        "input_sha256": hashlib.sha256(netlist_text.encode("utf-8")).hexdigest(),
        "inputs": {
            "netlist_path": netlist_path,
            "netlist_text": netlist_text,
            "components": components,
            "dvcc": dvcc,
            "flags": flags,
        },
        "analysis": None,
        "theory": None,
        "design": None,
        "quadrature": None,
        "sensitivity_table": None,
        "monte_carlo": None,
        "simulation": None,
        "files": {},
    }


def _analysis_section(netlist: nl.Netlist) -> dict:
    poly = mna.char_poly(netlist)
    osc = mna.analyze(poly)
    return {
        "char_poly_ascending": list(poly.coeffs),
        "omega0_rad_per_s": osc.omega0,
        "f0_hz": osc.f0,
        "a1_per_s": osc.a1_norm,
        "oscillates": osc.oscillates,
        "growth": osc.growth.value,
    }


def _theory_section(params: theory.OscParams) -> dict:
    a1_i, a0_i = theory.co_coeffs_ideal(params)
    a1_n, a0_n = theory.co_coeffs_nonideal(params)
    phase, ratio = theory.quadrature_relation(params)
    return {
        "fo_ideal_hz": theory.fo_ideal(params),
        "fo_nonideal_hz": theory.fo_nonideal(params),
        "co_ideal_a1_per_s": a1_i,
        "co_ideal_a0_per_s2": a0_i,
        "co_nonideal_a1_per_s": a1_n,
        "co_nonideal_a0_per_s2": a0_n,
        "quadrature_phase_deg": phase,
        "quadrature_amp_ratio": ratio,
        "sensitivities": theory.sensitivities_analytic(),
    }


def cmd_analyze(args) -> dict:
    text, netlist = _read_netlist(args.netlist, args)
    params = theory.osc_params_from_netlist(netlist)
    report = _base_report("analyze", args._argv, text, args.netlist, params,
                          _override_flags(args))
    report["analysis"] = _analysis_section(netlist)
    if params is not None:
        report["theory"] = _theory_section(params)
    return report


def cmd_design(args) -> dict:
    design = theory.design_equal_amplitude(args.f0, args.r2, args.epsilon)
    p = design.params
    netlist = nl.canonical_quadrature_netlist(p.r1, p.r2, p.c1, p.c2, p.dvcc)
    text = nl.render(netlist)
    out = _out_path(args.out, "designed_oscillator.cir")
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)
    flags = {"f0_hz": args.f0, "r2_ohm": args.r2, "epsilon_frac": args.epsilon}
    report = _base_report("design", args._argv, text, None, p, flags)
    report["design"] = {
        "r1_ohm": p.r1,
        "r2_ohm": p.r2,
        "c1_farad": p.c1,
        "c2_farad": p.c2,
        "epsilon_frac": design.epsilon,
        "f0_target_hz": design.f0_target,
        "f0_exact_hz": design.f0_exact,
    }
    report["theory"] = _theory_section(p)
    report["analysis"] = _analysis_section(netlist)
    report["files"]["netlist_out"] = out
    return report


def cmd_simulate(args) -> dict:
    text, netlist = _read_netlist(args.netlist, args)
    params = theory.osc_params_from_netlist(netlist)
    flags = {"t_end_s": args.t_end, "dt_s": args.dt,
             "record_stride": args.record_stride, **_override_flags(args)}
    report = _base_report("simulate", args._argv, text, args.netlist, params, flags)

    ss = transient.derive_state_space(netlist)
    f0_estimate = None
    try:
        report["analysis"] = _analysis_section(netlist)
        f0_estimate = report["analysis"]["f0_hz"]
    except mna.AnalysisError:
        if args.t_end is None or args.dt is None:
            raise
    if params is not None:
        report["theory"] = _theory_section(params)

    if f0_estimate is not None:
        base = transient.default_sim_config(ss, f0_estimate)
        init = base.initial_state
        t_end = args.t_end if args.t_end is not None else base.t_end
        dt = args.dt if args.dt is not None else base.dt
    else:
        kick = [0.0] * ss.n_states
        kick[-1] = 1e-3
        init = tuple(kick)
        t_end, dt = args.t_end, args.dt
    cfg = transient.SimConfig(t_end=t_end, dt=dt, initial_state=init,
                              record_stride=args.record_stride)
    wave = transient.simulate(ss, cfg)

    stem = os.path.splitext(os.path.basename(args.netlist))[0]
    csv_path = _out_path(args.csv, f"{stem}_waveform.csv")
    transient.write_waveform_csv(wave, csv_path)
    report["files"]["waveform_csv"] = csv_path

    n_steps = int(round(cfg.t_end / cfg.dt))
    report["simulation"] = {
        "dt_s": cfg.dt,
        "t_end_s": cfg.t_end,
        "n_steps": n_steps,
        "record_stride": cfg.record_stride,
        "kernel_backend": transient.kernel_backend(),
        "state_nodes": list(ss.state_names),
    }

    if len(wave.channels) == 2:
        q = wf.quadrature_report(wave)
        report["quadrature"] = {
            "f_measured_hz": q.f_measured,
            "phase_diff_deg": q.phase_diff_deg,
            "amp_ratio": q.amp_ratio,
            "thd_a_frac": q.thd_a,
            "thd_b_frac": q.thd_b,
            "window_start_index": q.window_used[0],
            "window_stop_index": q.window_used[1],
            "channel_a": q.channel_a,
            "channel_b": q.channel_b,
        }

    if args.spectrum_csv:
        channel = args.spectrum_channel or wave.labels[0]
        window = wf.steady_state_window(wave, channel)
        spec = wf.spectrum(wave, channel, window)
        wf.write_spectrum_csv(spec, args.spectrum_csv)
        report["files"]["spectrum_csv"] = args.spectrum_csv
    return report


def cmd_sensitivity(args) -> dict:
    text, netlist = _read_netlist(args.netlist, args)
    params = theory.osc_params_from_netlist(netlist)
    if params is None:
        raise mna.AnalysisError(
            "sensitivity requires the canonical quadrature topology")
    flags = {"rel_step": args.rel_step, **_override_flags(args)}
    report = _base_report("sensitivity", args._argv, text, args.netlist, params, flags)
    report["analysis"] = _analysis_section(netlist)
    report["theory"] = _theory_section(params)
    analytic = theory.sensitivities_analytic()
    rows = []
    for name in theory.FD_PARAMS:
        want = analytic.get(name, 0.0)
        got = theory.sensitivity_fd(params, name, args.rel_step)
        rows.append({
            "parameter": name,
            "analytic": want,
            "finite_difference": got,
            "abs_error": abs(got - want),
        })
    report["sensitivity_table"] = rows
    return report


def cmd_montecarlo(args) -> dict:
    text, netlist = _read_netlist(args.netlist, args)
    params = theory.osc_params_from_netlist(netlist)
    if params is None:
        raise mna.AnalysisError(
            "montecarlo requires the canonical quadrature topology")
    flags = {"tol_frac": args.tol, "n_draws": args.n, "seed": args.seed,
             **_override_flags(args)}
    report = _base_report("montecarlo", args._argv, text, args.netlist, params, flags)
    report["theory"] = _theory_section(params)
    summary = theory.monte_carlo_f0(params, args.tol, args.n, args.seed,
                                    keep_draws=args.csv is not None)
    report["monte_carlo"] = {
        "n_draws": summary.n,
        "tol_frac": summary.tol,
        "seed": summary.seed,
        "nominal_f0_hz": theory.fo_nonideal(params),
        "mean_hz": summary.mean_hz,
        "std_hz": summary.std_hz,
        "min_hz": summary.min_hz,
        "max_hz": summary.max_hz,
    }
    if args.csv is not None:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("draw,r1_ohm,r2_ohm,c1_farad,c2_farad,f0_hz\n")
            for i, row in enumerate(summary.draws):
                fh.write(f"{i}," + ",".join(f"{v:.9e}" for v in row) + "\n")
        report["files"]["draws_csv"] = args.csv
    return report


def _override_flags(args) -> dict:
    out = {}
    for flag in _DVCC_OVERRIDES:
        value = getattr(args, flag, None)
        if value is not None:
            out[flag] = value
    return out


def _add_dvcc_overrides(parser) -> None:
    group = parser.add_argument_group("DVCC overrides (applied to every conveyor)")
    for flag in ("alpha1", "alpha2", "beta1", "beta2"):
        group.add_argument(f"--{flag}", type=float, help=f"override {flag}")
    group.add_argument("--vsat", type=float, help="override the saturation level [V]")
    group.add_argument("--sat", choices=["hard", "tanh", "none"],
                       help="override the saturation model")


def build_parser() -> _Parser:
    p = _Parser(prog="dvccosc",
                description="DVCC quadrature-oscillator analysis and simulation")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="characteristic polynomial and oscillation test")
    a.add_argument("netlist", help="netlist file")
    _add_dvcc_overrides(a)
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("design", help="pick component values for a target frequency")
    d.add_argument("--f0", type=float, required=True, help="target frequency [Hz]")
    d.add_argument("--r2", type=float, required=True, help="output-node resistor [ohm]")
    d.add_argument("--epsilon", type=float, default=0.02,
                   help="startup margin in [0, 0.2] (default 0.02)")
    d.add_argument("--out", help="netlist output path")
    d.set_defaults(func=cmd_design)

    s = sub.add_parser("simulate", help="transient run plus quadrature measurement")
    s.add_argument("netlist", help="netlist file")
    s.add_argument("--t-end", dest="t_end", type=float, help="horizon [s]")
    s.add_argument("--dt", type=float, help="step size [s]")
    s.add_argument("--record-stride", dest="record_stride", type=int, default=1)
    s.add_argument("--csv", help="waveform CSV output path")
    s.add_argument("--spectrum-csv", dest="spectrum_csv",
                   help="also export a spectrum CSV")
    s.add_argument("--spectrum-channel", dest="spectrum_channel",
                   help="channel for --spectrum-csv (default: first probe)")
    _add_dvcc_overrides(s)
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("sensitivity", help="analytic vs finite-difference sensitivities")
    t.add_argument("netlist", help="netlist file (canonical topology)")
    t.add_argument("--rel-step", dest="rel_step", type=float, default=1e-5)
    _add_dvcc_overrides(t)
    t.set_defaults(func=cmd_sensitivity)

    m = sub.add_parser("montecarlo", help="frequency spread under component tolerance")
    m.add_argument("netlist", help="netlist file (canonical topology)")
    m.add_argument("--tol", type=float, required=True,
                   help="relative component tolerance in [0, 0.5)")
    m.add_argument("--n", type=int, default=1000, help="number of draws")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--csv", help="per-draw CSV output path")
    _add_dvcc_overrides(m)
    m.set_defaults(func=cmd_montecarlo)
    return p


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    args._argv = list(argv)
    try:
        report = args.func(args)
    except (mna.AnalysisError, transient.TopologyError, wf.MeasurementError) as e:
        print(f"analysis error: {e}", file=sys.stderr)
        return 2
    except transient.SimulationDiverged as e:
        print(f"simulation error: {e}", file=sys.stderr)
        return 2
    except nl.NetlistError as e:
        print(f"netlist error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"input error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
