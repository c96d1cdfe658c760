"""Scenario and sweep execution on top of the integration/spectrum layers.

run_scenario turns a ScenarioConfig into trajectories, ensemble spectra for
the Z and X channels, classified peaks, amplification metrics against a
pump-only reference, a dt/2 convergence verdict, and a rect/hann window
cross-check. run_sweep repeats a scenario along one axis and fits the
linear gain on the epsilon axis.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import PRESETS, ScenarioConfig, get_preset, load_config, with_overrides
from .errors import ConfigError, ParameterError
from .integrate import TimeSeries, run_ensemble
from .spectrum import (
    AmplificationMetrics,
    BetaFit,
    PeakSet,
    Spectrum,
    amplification_metrics,
    beta_from_sweep,
    classify_peaks,
    compute_spectrum,
    ensemble_spectrum,
    find_peaks,
)

SWEEP_AXES = {
    "epsilon": "amp_weak",
    "D": "noise_d",
    "omega_weak": "omega_weak",
    "g": "g",
}

# Relative change of a headline metric under dt halving below which the
# run counts as converged.
CONVERGENCE_RTOL = 0.02

# Max disagreement of headline peak heights between windows before the
# run is flagged window-sensitive.
WINDOW_AGREEMENT_RTOL = 0.10


@dataclass(frozen=True)
class Analysis:
    """Spectra and classified peaks of one integrated ensemble."""

    series: tuple[TimeSeries, ...]
    spectrum_z: Spectrum
    spectrum_x: Spectrum
    peaks_z: PeakSet
    peaks_x: PeakSet

    @property
    def floor_median(self) -> float:
        return self.spectrum_z.floor_median


@dataclass(frozen=True)
class ConvergenceCheck:
    """Outcome of repeating a run at half the step size."""

    config: ScenarioConfig
    analysis: Analysis
    metrics: AmplificationMetrics
    changes: dict[str, float]
    converged: bool


@dataclass(frozen=True)
class ScenarioResult:
    """Everything run_scenario produces for one scenario."""

    config: ScenarioConfig
    analysis: Analysis
    metrics: AmplificationMetrics
    reference: "ScenarioResult | None" = None
    halved: ConvergenceCheck | None = None
    window_agreement: dict | None = None

    @property
    def name(self) -> str:
        return self.config.name or "scenario"

    def summary(self) -> dict:
        """JSON-ready digest: metrics, convergence verdict, window check."""
        cfg = self.config
        out = {
            "name": self.name,
            "omega_pump": cfg.omega_pump_value,
            "omega_weak": cfg.omega_weak_value,
            "realizations": cfg.effective_realizations,
            "metrics": {
                "i_eps": self.metrics.i_eps,
                "i_a": self.metrics.i_a,
                "ratio": self.metrics.ratio,
                "i_pm": self.metrics.i_pm,
                "max_peak_height": self.analysis.peaks_z.max_height,
                "floor_median": self.analysis.floor_median,
                "flags": list(self.metrics.flags),
            },
            "config": {k: (v if v is not None else "") for k, v in cfg.as_dict().items()},
        }
        if self.halved is not None:
            out["convergence"] = {
                "dt": cfg.dt,
                "dt_halved": self.halved.config.dt,
                "changes": self.halved.changes,
                "converged": self.halved.converged,
            }
        if self.window_agreement is not None:
            out["window_agreement"] = self.window_agreement
        return out


def _resolve_scenario(scenario) -> ScenarioConfig:
    if isinstance(scenario, ScenarioConfig):
        return scenario
    if isinstance(scenario, (str, Path)):
        text = str(scenario)
        if text in PRESETS:
            return get_preset(text)
        if Path(text).exists():
            return load_config(text)
        raise ConfigError(
            f"{text!r} is neither a preset ({', '.join(sorted(PRESETS))}) nor a config file"
        )
    raise ConfigError(f"cannot interpret scenario {scenario!r}")


def _integrate_and_analyze(cfg: ScenarioConfig, noise_refinement: int = 1) -> Analysis:
    params = cfg.pair_params()
    drive = cfg.drive_params()
    intcfg = cfg.integrator_config()
    series = run_ensemble(params, drive, intcfg, noise_refinement=noise_refinement)
    spec_z = ensemble_spectrum([compute_spectrum(ts, "Z1", window=cfg.window) for ts in series])
    spec_x = ensemble_spectrum([compute_spectrum(ts, "X1", window=cfg.window) for ts in series])
    wp, ww = cfg.omega_pump_value, cfg.omega_weak_value
    peaks_z = classify_peaks(find_peaks(spec_z), wp, ww, cfg.k_max, cfg.l_max, cfg.tol_match)
    peaks_x = classify_peaks(find_peaks(spec_x), wp, ww, cfg.k_max, cfg.l_max, cfg.tol_match)
    return Analysis(
        series=tuple(series), spectrum_z=spec_z, spectrum_x=spec_x,
        peaks_z=peaks_z, peaks_x=peaks_x,
    )


def _metrics_for(cfg: ScenarioConfig, analysis: Analysis,
                 reference_spectrum: Spectrum | None) -> AmplificationMetrics:
    wp, ww = cfg.omega_pump_value, cfg.omega_weak_value
    if reference_spectrum is not None:
        return amplification_metrics(
            analysis.spectrum_z, reference_spectrum, wp, ww,
            k_max=cfg.k_max, l_max=cfg.l_max, tol_match=cfg.tol_match,
        )
    if cfg.amp_weak == 0.0:
        # no weak tone, nothing to mix: the run is its own reference, and
        # any l != 0 label would be a leakage artifact, not a response
        i_a = analysis.peaks_z.max_height
        flags = () if i_a > 0.0 else ("no_pump_peaks",)
        return AmplificationMetrics(i_eps=0.0, i_a=i_a, ratio=0.0, i_pm=0.0, flags=flags)
    # signal without pump: no reference exists
    best = analysis.peaks_z.strongest_mixed()
    i_eps = best.height if best is not None else 0.0
    plus = analysis.peaks_z.at_label(1, 1)
    minus = analysis.peaks_z.at_label(-1, 1)
    i_pm = max((p.height for p in (plus, minus) if p is not None), default=0.0)
    flags = ["no_pump_reference"]
    if best is None:
        flags.append("no_mixed_peaks")
    return AmplificationMetrics(
        i_eps=i_eps, i_a=0.0, ratio=math.inf if i_eps > 0 else 0.0, i_pm=i_pm,
        strongest_mixed=best, flags=tuple(flags),
    )


def _relative_change(base: float, other: float) -> float:
    if base == 0.0 and other == 0.0:
        return 0.0
    if base == 0.0:
        return math.inf
    return abs(other - base) / abs(base)


def _halved_config(cfg: ScenarioConfig) -> ScenarioConfig:
    return with_overrides(cfg, dt=cfg.dt / 2.0, sample_stride=cfg.sample_stride * 2)


def _window_agreement(cfg: ScenarioConfig, analysis: Analysis) -> dict:
    """Recompute headline peak heights under the other window."""
    other = "hann" if cfg.window == "rect" else "rect"
    spec_other = ensemble_spectrum(
        [compute_spectrum(ts, "Z1", window=other) for ts in analysis.series]
    )
    wp, ww = cfg.omega_pump_value, cfg.omega_weak_value
    peaks_other = classify_peaks(
        find_peaks(spec_other), wp, ww, cfg.k_max, cfg.l_max, cfg.tol_match
    )
    checks = {}
    base_max = analysis.peaks_z.max_height
    other_max = peaks_other.max_height
    checks["max_peak_height"] = _relative_change(base_max, other_max)
    base_mixed = analysis.peaks_z.strongest_mixed()
    other_mixed = peaks_other.strongest_mixed()
    if base_mixed is not None and other_mixed is not None:
        checks["i_eps"] = _relative_change(base_mixed.height, other_mixed.height)
    ok = all(v <= WINDOW_AGREEMENT_RTOL for v in checks.values())
    return {"window": cfg.window, "other_window": other, "changes": checks, "ok": ok}


def run_scenario(scenario, *, out_dir=None, emit_csv: bool = True, emit_svg: bool = True,
                 pump_reference: "ScenarioResult | None" = None,
                 check_convergence: bool = True,
                 check_window: bool = True) -> ScenarioResult:
    """Execute one scenario end to end.

    Args:
        scenario: ScenarioConfig, preset name, or config file path.
        out_dir: when given, emit CSV/SVG artifacts and a metrics summary
            there (see the output module).
        emit_csv, emit_svg: artifact toggles, only relevant with out_dir.
        pump_reference: reuse this result as the pump-only reference
            instead of running one (the caller asserts compatibility).
        check_convergence: repeat the run at dt/2 (same noise path, bridge
            refined) and report headline-metric changes.
        check_window: recompute headline heights under the other window
            and flag disagreement beyond 10%.

    Returns:
        ScenarioResult with analysis, metrics, reference, convergence
        check, and window agreement attached.
    """
    cfg = _resolve_scenario(scenario)
    analysis = _integrate_and_analyze(cfg)

    reference = pump_reference
    needs_ref = cfg.amp_pump != 0.0 and cfg.amp_weak != 0.0
    if reference is None and needs_ref:
        ref_cfg = with_overrides(
            cfg, amp_weak=0.0, noise_d=0.0, realizations=1,
            name=f"{cfg.name or 'scenario'}-pump-reference",
        )
        reference = run_scenario(
            ref_cfg, check_convergence=check_convergence, check_window=False,
        )
    ref_spec = reference.analysis.spectrum_z if reference is not None else None
    metrics = _metrics_for(cfg, analysis, ref_spec)

    halved = None
    if check_convergence:
        hcfg = _halved_config(cfg)
        h_analysis = _integrate_and_analyze(hcfg, noise_refinement=2 if cfg.noise_d > 0 else 1)
        h_ref_spec = None
        if reference is not None:
            if reference.halved is not None:
                h_ref_spec = reference.halved.analysis.spectrum_z
            else:
                h_ref_spec = reference.analysis.spectrum_z
        h_metrics = _metrics_for(hcfg, h_analysis, h_ref_spec)
        changes = {
            "max_peak_height": _relative_change(
                analysis.peaks_z.max_height, h_analysis.peaks_z.max_height
            ),
        }
        if metrics.i_eps > 0.0:
            changes["i_eps"] = _relative_change(metrics.i_eps, h_metrics.i_eps)
        if metrics.i_pm > 0.0:
            changes["i_pm"] = _relative_change(metrics.i_pm, h_metrics.i_pm)
        if metrics.i_a > 0.0:
            changes["i_a"] = _relative_change(metrics.i_a, h_metrics.i_a)
        halved = ConvergenceCheck(
            config=hcfg, analysis=h_analysis, metrics=h_metrics,
            changes=changes,
            converged=all(v <= CONVERGENCE_RTOL for v in changes.values()),
        )

    agreement = _window_agreement(cfg, analysis) if check_window else None

    result = ScenarioResult(
        config=cfg, analysis=analysis, metrics=metrics,
        reference=reference, halved=halved, window_agreement=agreement,
    )
    if out_dir is not None:
        from . import output

        output.emit_scenario(result, out_dir, csv=emit_csv, svg=emit_svg)
    return result


@dataclass(frozen=True)
class SweepPoint:
    value: float
    status: str
    result: ScenarioResult | None = None


@dataclass(frozen=True)
class SweepResult:
    """Outcome of running one scenario along a single swept axis."""

    config: ScenarioConfig
    axis: str
    points: tuple[SweepPoint, ...]
    reference: ScenarioResult | None = None
    beta: BetaFit | None = None
    beta_reduced: BetaFit | None = None
    beta_halved: BetaFit | None = None
    beta_reduced_halved: BetaFit | None = None
    notes: tuple[str, ...] = ()

    def table(self) -> list[tuple[float, float, float, float]]:
        """Rows (value, I_eps, I_A, ratio) for points that completed."""
        rows = []
        for p in self.points:
            if p.result is None:
                continue
            m = p.result.metrics
            rows.append((p.value, m.i_eps, m.i_a, m.ratio))
        return rows

    def summary(self) -> dict:
        out = {
            "axis": self.axis,
            "values": [p.value for p in self.points],
            "statuses": [p.status for p in self.points],
            "table": [list(r) for r in self.table()],
            "notes": list(self.notes),
        }
        for attr in ("beta", "beta_reduced", "beta_halved", "beta_reduced_halved"):
            fit = getattr(self, attr)
            if fit is not None:
                out[attr] = {
                    "beta": fit.beta,
                    "saturation_onset": fit.saturation_onset,
                    "points_used": [list(p) for p in fit.points_used],
                }
        return out


def _shared_reference(cfg: ScenarioConfig, axis: str) -> ScenarioResult | None:
    # the pump-only reference is identical across points unless the swept
    # axis changes the pump itself
    if axis == "g" or cfg.amp_pump == 0.0:
        return None
    ref_cfg = with_overrides(
        cfg, amp_weak=0.0, noise_d=0.0, realizations=1,
        name=f"{cfg.name or 'sweep'}-pump-reference",
    )
    return run_scenario(ref_cfg, check_convergence=True, check_window=False)


def run_sweep(scenario, axis: str, values, *, out_dir=None,
              emit_csv: bool = True, emit_svg: bool = True,
              check_convergence: bool = True) -> SweepResult:
    """Run one scenario per value of the swept axis.

    For the epsilon axis the linear gain is fitted twice: on absolute
    (eps, I_eps) points and on reduced (eps/A, I_eps/I_A) points, the
    latter matching the dimensionless convention of gain plots. Points
    that fail keep an error status; the rest of the sweep proceeds.
    """
    cfg = _resolve_scenario(scenario)
    if axis not in SWEEP_AXES:
        raise ConfigError(f"axis must be one of {sorted(SWEEP_AXES)}, got {axis!r}")
    values = [float(v) for v in values]
    if not values:
        raise ConfigError("need at least one sweep value")
    field_name = SWEEP_AXES[axis]

    reference = _shared_reference(cfg, axis)

    def one(v: float) -> SweepPoint:
        label = f"{cfg.name or 'sweep'}-{axis}-{v:g}"
        try:
            point_cfg = with_overrides(cfg, **{field_name: v}, name=label)
            result = run_scenario(
                point_cfg,
                pump_reference=reference,
                check_convergence=check_convergence,
                check_window=False,
            )
            return SweepPoint(value=v, status="ok", result=result)
        except (ConfigError, ParameterError, RuntimeError) as exc:
            return SweepPoint(value=v, status=f"error: {exc}")

    # points are mutually independent; order restored by map
    if len(values) == 1:
        points = [one(values[0])]
    else:
        with ThreadPoolExecutor(max_workers=min(len(values), os.cpu_count() or 1)) as pool:
            points = list(pool.map(one, values))
    notes = [f"point {p.value:g}: {p.status}" for p in points if p.result is None]

    beta = beta_reduced = beta_halved = beta_reduced_halved = None
    if axis == "epsilon" and cfg.amp_pump > 0.0:
        amp = cfg.amp_pump
        ok_points = [p for p in points if p.result is not None]
        abs_pts = [(p.value, p.result.metrics.i_eps) for p in ok_points]
        try:
            beta = beta_from_sweep(abs_pts, amp)
        except ParameterError as exc:
            notes.append(f"beta fit skipped: {exc}")
        i_a = reference.metrics.i_a if reference is not None else 0.0
        if beta is not None and i_a > 0.0:
            red_pts = [(e / amp, h / i_a) for e, h in abs_pts]
            beta_reduced = beta_from_sweep(red_pts, 1.0)
        if check_convergence and beta is not None:
            habs = [
                (p.value, p.result.halved.metrics.i_eps)
                for p in ok_points
                if p.result.halved is not None
            ]
            if len(habs) == len(abs_pts):
                beta_halved = beta_from_sweep(habs, amp)
                i_a_h = 0.0
                if reference is not None and reference.halved is not None:
                    i_a_h = reference.halved.metrics.i_a
                if i_a_h > 0.0:
                    red_h = [(e / amp, h / i_a_h) for e, h in habs]
                    beta_reduced_halved = beta_from_sweep(red_h, 1.0)

    sweep = SweepResult(
        config=cfg, axis=axis, points=tuple(points), reference=reference,
        beta=beta, beta_reduced=beta_reduced,
        beta_halved=beta_halved, beta_reduced_halved=beta_reduced_halved,
        notes=tuple(notes),
    )
    if out_dir is not None:
        from . import output

        output.emit_sweep(sweep, out_dir, csv=emit_csv, svg=emit_svg)
    return sweep
