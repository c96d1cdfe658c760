"""Artifact emission: CSV tables, JSON summaries, SVG plots.

Conventions shared by every writer:
  - metadata go first as "# key = value" lines, one per key, sorted;
  - floats are printed with %.17g so a written file reloads bit-exact;
  - frequencies (and frequency residuals) are reported in units of the
    first detuning, matching the dimensionless presentation of spectra.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

from .integrate import TimeSeries

FLOAT_FMT = "%.17g"

# plot downsampling cap: vector output stays small, features survive
MAX_PLOT_POINTS = 20_000


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _fmt(value) -> str:
    if isinstance(value, float):
        return FLOAT_FMT % value
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    return str(value)


def _meta_block(meta: dict) -> str:
    lines = []
    for key in sorted(meta):
        value = meta[key]
        if value is None:
            continue
        lines.append(f"# {key} = {_fmt(value)}")
    return "\n".join(lines)


def _parse_scalar(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def write_timeseries_csv(ts: TimeSeries, path) -> Path:
    path = Path(path)
    names = list(ts.channels)
    with open(path, "w") as f:
        block = _meta_block(ts.metadata)
        if block:
            f.write(block + "\n")
        f.write("t," + ",".join(names) + "\n")
        data = np.column_stack([ts.times] + [ts.channels[n] for n in names])
        np.savetxt(f, data, fmt=FLOAT_FMT, delimiter=",")
    return path


def read_timeseries_csv(path) -> TimeSeries:
    """Inverse of write_timeseries_csv; metadata values are parsed back
    to int/float where possible and kept as strings otherwise."""
    meta = {}
    header = None
    rows = []
    with open(path) as f:
        for line in f:
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                key, _, value = s[1:].partition("=")
                meta[key.strip()] = _parse_scalar(value.strip())
            elif header is None:
                header = [c.strip() for c in s.split(",")]
            else:
                rows.append(s)
    if header is None or header[0] != "t":
        raise ValueError(f"{path}: not a time series table")
    data = np.loadtxt(io.StringIO("\n".join(rows)), delimiter=",", ndmin=2)
    channels = {name: data[:, i + 1] for i, name in enumerate(header[1:])}
    return TimeSeries(times=data[:, 0], channels=channels, metadata=meta)


def write_spectrum_csv(spec, path, delta: float) -> Path:
    path = Path(path)
    meta = dict(spec.metadata)
    meta["delta"] = delta
    meta["frequency_unit"] = "delta"
    with open(path, "w") as f:
        f.write(_meta_block(meta) + "\n")
        f.write("omega,S\n")
        data = np.column_stack([spec.omega / delta, spec.values])
        np.savetxt(f, data, fmt=FLOAT_FMT, delimiter=",")
    return path


def write_peaks_csv(peaks, path, delta: float) -> Path:
    path = Path(path)
    meta = dict(peaks.metadata)
    meta["delta"] = delta
    meta["frequency_unit"] = "delta"
    meta["n_peaks"] = len(peaks)
    with open(path, "w") as f:
        f.write(_meta_block(meta) + "\n")
        f.write("omega,height,k,l,residual\n")
        for p in peaks:
            cells = [FLOAT_FMT % (p.omega / delta), FLOAT_FMT % p.height]
            if p.labeled:
                cells += [str(p.k), str(p.l), FLOAT_FMT % (p.residual / delta)]
            else:
                cells += ["", "", ""]
            f.write(",".join(cells) + "\n")
    return path


def write_sweep_csv(sweep, path) -> Path:
    path = Path(path)
    meta = {
        "axis": sweep.axis,
        "name": sweep.config.name or "sweep",
        "amp_pump": sweep.config.amp_pump,
    }
    for attr in ("beta", "beta_reduced", "beta_halved", "beta_reduced_halved"):
        fit = getattr(sweep, attr)
        if fit is not None:
            meta[attr] = fit.beta
            if fit.saturation_onset is not None:
                meta[attr + "_saturation_onset"] = fit.saturation_onset
    with open(path, "w") as f:
        f.write(_meta_block(meta) + "\n")
        f.write("value,I_eps,I_A,ratio\n")
        for value, i_eps, i_a, ratio in sweep.table():
            f.write(",".join(FLOAT_FMT % v for v in (value, i_eps, i_a, ratio)) + "\n")
    return path


def write_summary_json(summary: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return path


def _downsample(*arrays):
    n = len(arrays[0])
    stride = max(1, n // MAX_PLOT_POINTS)
    return [a[::stride] for a in arrays]


def plot_timeseries_svg(ts: TimeSeries, path, title: str = "") -> Path:
    plt = _pyplot()
    path = Path(path)
    fig, ax = plt.subplots(figsize=(9, 3.2))
    for name, values in ts.channels.items():
        t, v = _downsample(ts.times, values)
        ax.plot(t, v, lw=0.6, label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("expectation value")
    ax.legend(loc="upper right", fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_spectrum_svg(spec, peaks, path, delta: float, title: str = "",
                      annotate: int = 12) -> Path:
    """Log-amplitude spectrum with the strongest labeled peaks annotated
    by their (k, l) combination order."""
    plt = _pyplot()
    path = Path(path)
    fig, ax = plt.subplots(figsize=(9, 3.6))
    x, y = _downsample(spec.omega / delta, spec.values)
    positive = y[y > 0]
    floor = positive.min() if positive.size else 1e-30
    ax.plot(x, np.maximum(y, floor), lw=0.5)
    ax.set_yscale("log")
    ax.set_xlabel("frequency [delta]")
    ax.set_ylabel("amplitude")
    labeled = [p for p in peaks if p.labeled]
    labeled.sort(key=lambda p: -p.height)
    for p in labeled[:annotate]:
        ax.annotate(
            f"({p.k},{p.l})", xy=(p.omega / delta, p.height),
            xytext=(0, 4), textcoords="offset points",
            fontsize=6, rotation=55, ha="left",
        )
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_sweep_svg(sweep, path, title: str = "") -> Path:
    plt = _pyplot()
    path = Path(path)
    rows = sweep.table()
    fig, ax = plt.subplots(figsize=(6, 4))
    if rows:
        values = [r[0] for r in rows]
        heights = [r[1] for r in rows]
        loggable = all(v > 0 for v in values) and all(h > 0 for h in heights)
        plot = ax.loglog if loggable else ax.plot
        plot(values, heights, "o-", ms=4, lw=0.8, label="I_eps")
        if sweep.beta is not None and loggable:
            lo, hi = min(values), max(values)
            grid = np.geomspace(lo, hi, 50)
            ax.loglog(grid, sweep.beta.beta * grid, "--", lw=0.8,
                      label="linear fit")
        ax.legend(fontsize=8)
    ax.set_xlabel(sweep.axis)
    ax.set_ylabel("response peak height")
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def emit_scenario(result, out_dir, *, csv: bool = True, svg: bool = True) -> Path:
    """Write the artifact set for one scenario run into out_dir."""
    from .config import config_text

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    delta = result.config.delta
    (out / "config.txt").write_text(config_text(result.config))
    write_summary_json(result.summary(), out / "metrics.json")
    analysis = result.analysis
    if csv:
        write_timeseries_csv(analysis.series[0], out / "timeseries.csv")
        write_spectrum_csv(analysis.spectrum_z, out / "spectrum_z.csv", delta)
        write_spectrum_csv(analysis.spectrum_x, out / "spectrum_x.csv", delta)
        write_peaks_csv(analysis.peaks_z, out / "peaks_z.csv", delta)
        write_peaks_csv(analysis.peaks_x, out / "peaks_x.csv", delta)
    if svg:
        name = result.name
        plot_timeseries_svg(analysis.series[0], out / "trajectory.svg", title=name)
        plot_spectrum_svg(analysis.spectrum_z, analysis.peaks_z,
                          out / "spectrum_z.svg", delta, title=f"{name} Z1")
        plot_spectrum_svg(analysis.spectrum_x, analysis.peaks_x,
                          out / "spectrum_x.svg", delta, title=f"{name} X1")
    return out


def emit_sweep(sweep, out_dir, *, csv: bool = True, svg: bool = True) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_summary_json(sweep.summary(), out / "metrics.json")
    if csv:
        write_sweep_csv(sweep, out / "sweep.csv")
    if svg:
        plot_sweep_svg(sweep, out / "gain.svg", title=sweep.config.name or "sweep")
    return out


__all__ = [
    "FLOAT_FMT",
    "emit_scenario",
    "emit_sweep",
    "plot_spectrum_svg",
    "plot_sweep_svg",
    "plot_timeseries_svg",
    "read_timeseries_csv",
    "write_peaks_csv",
    "write_spectrum_csv",
    "write_summary_json",
    "write_sweep_csv",
    "write_timeseries_csv",
]
