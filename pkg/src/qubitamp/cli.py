"""Command line front end.

Subcommands:
  scenario  run one preset or config file end to end
  sweep     repeat a scenario along one axis
  spectrum  recompute a spectrum from a saved time series CSV
  freqs     print the transition frequencies for given detuning/coupling

Exit codes: 0 on success, 1 on validation/configuration errors,
2 when the integrator diverged.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import PRESETS, with_overrides
from .errors import ConfigError, DivergenceError, ParameterError
from .model import transition_frequencies
from .output import (
    read_timeseries_csv,
    write_peaks_csv,
    write_spectrum_csv,
    write_summary_json,
)
from .runner import SWEEP_AXES, _resolve_scenario, run_scenario, run_sweep
from .spectrum import WINDOWS, classify_peaks, compute_spectrum, find_peaks


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; keep 2 reserved for divergence
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qubitamp", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", type=Path, default=None,
                       help="artifact directory (no files written when omitted)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--t-total", dest="t_total", type=float, default=None)
        p.add_argument("--realizations", type=int, default=None)
        p.add_argument("--no-svg", action="store_true")
        p.add_argument("--no-convergence-check", action="store_true",
                       help="skip the dt/2 repeat (halves the runtime)")

    names = ", ".join(sorted(PRESETS))
    p_scen = sub.add_parser("scenario", help="run one scenario")
    p_scen.add_argument("scenario", help=f"preset name ({names}) or config file")
    add_common(p_scen)

    p_sweep = sub.add_parser("sweep", help="run a scenario along one axis")
    p_sweep.add_argument("scenario", help=f"preset name ({names}) or config file")
    p_sweep.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    p_sweep.add_argument("--values", required=True,
                         help="comma separated numbers, e.g. 0.015,0.03,0.06")
    add_common(p_sweep)

    p_spec = sub.add_parser("spectrum", help="spectrum of a saved time series")
    p_spec.add_argument("timeseries", type=Path)
    p_spec.add_argument("--channel", default="Z1")
    p_spec.add_argument("--window", default="rect", choices=WINDOWS)
    p_spec.add_argument("--transient", type=float, default=None)
    p_spec.add_argument("--out", type=Path, default=None)

    p_freq = sub.add_parser("freqs", help="transition frequencies")
    p_freq.add_argument("delta", type=float)
    p_freq.add_argument("g", type=float)
    return parser


def _apply_overrides(cfg, args):
    overrides = {}
    for key in ("seed", "dt", "t_total", "realizations"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return with_overrides(cfg, **overrides) if overrides else cfg


def _print_scenario(result):
    m = result.metrics
    print(f"scenario {result.name}: {len(result.analysis.peaks_z)} Z peaks, "
          f"{len(result.analysis.peaks_x)} X peaks")
    print(f"  I_eps = {m.i_eps:.6g}  I_A = {m.i_a:.6g}  ratio = {m.ratio:.6g}")
    if m.flags:
        print(f"  flags: {', '.join(m.flags)}")
    if result.halved is not None:
        state = "converged" if result.halved.converged else "NOT converged"
        worst = max(result.halved.changes.values(), default=0.0)
        print(f"  dt/2 check: {state} (max headline change {worst:.3%})")
    if result.window_agreement is not None and not result.window_agreement["ok"]:
        print("  warning: rect/hann windows disagree beyond 10%")


def _cmd_scenario(args) -> int:
    cfg = _apply_overrides(_resolve_scenario(args.scenario), args)
    result = run_scenario(
        cfg, out_dir=args.out, emit_svg=not args.no_svg,
        check_convergence=not args.no_convergence_check,
    )
    _print_scenario(result)
    if args.out is not None:
        print(f"  artifacts in {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _apply_overrides(_resolve_scenario(args.scenario), args)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    sweep = run_sweep(
        cfg, args.axis, values, out_dir=args.out, emit_svg=not args.no_svg,
        check_convergence=not args.no_convergence_check,
    )
    print(f"sweep over {args.axis}: {len(sweep.points)} points")
    for value, i_eps, i_a, ratio in sweep.table():
        print(f"  {value:<12g} I_eps = {i_eps:<12.6g} ratio = {ratio:.6g}")
    for note in sweep.notes:
        print(f"  note: {note}")
    if sweep.beta is not None:
        print(f"  linear gain fit: beta = {sweep.beta.beta:.6g}")
    if sweep.beta_reduced is not None:
        print(f"  reduced gain fit: beta = {sweep.beta_reduced.beta:.6g}")
    if args.out is not None:
        print(f"  artifacts in {args.out}")
    return 0


def _cmd_spectrum(args) -> int:
    ts = read_timeseries_csv(args.timeseries)
    spec = compute_spectrum(ts, channel=args.channel, transient=args.transient,
                            window=args.window)
    peaks = find_peaks(spec)
    meta = ts.metadata
    wp = meta.get("omega_pump")
    ww = meta.get("omega_weak")
    if isinstance(wp, (int, float)) and isinstance(ww, (int, float)):
        peaks = classify_peaks(peaks, float(wp), float(ww))
    delta = float(meta.get("delta", 1.0))
    print(f"{len(spec.omega)} bins, {len(peaks)} peaks, "
          f"floor median {spec.floor_median:.6g}")
    for p in sorted(peaks, key=lambda q: -q.height)[:10]:
        label = f"(k={p.k}, l={p.l})" if p.labeled else "unlabeled"
        print(f"  omega = {p.omega / delta:<12.6g} height = {p.height:<12.6g} {label}")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_spectrum_csv(spec, args.out / "spectrum.csv", delta)
        write_peaks_csv(peaks, args.out / "peaks.csv", delta)
        summary = {
            "source": str(args.timeseries),
            "channel": args.channel,
            "window": args.window,
            "n_peaks": len(peaks),
            "floor_median": spec.floor_median,
        }
        write_summary_json(summary, args.out / "metrics.json")
        print(f"  artifacts in {args.out}")
    return 0


def _cmd_freqs(args) -> int:
    freqs = transition_frequencies(args.delta, args.g)
    print(f"delta = {args.delta:g}, g = {args.g:g}")
    for name, value in freqs.as_dict().items():
        line = f"  {name:<12} = {value:.12g}"
        if args.delta != 0:
            line += f"   ({value / args.delta:.12g} in units of delta)"
        print(line)
    levels = ", ".join(f"{e:.12g}" for e in freqs.levels)
    print(f"  levels: {levels}")
    return 0


_COMMANDS = {
    "scenario": _cmd_scenario,
    "sweep": _cmd_sweep,
    "spectrum": _cmd_spectrum,
    "freqs": _cmd_freqs,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (ConfigError, ParameterError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DivergenceError as exc:
        print(f"integration diverged: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
