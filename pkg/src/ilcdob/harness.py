"""Cyclic multi-system learning campaigns.

Every system first flies two baselines on the scenario: without the
observer (``no_dob``) and with it but without learning (``dob_only``).
The learning chain then follows the flight order cyclically.  Each system
learns from the most recent run of its predecessor, and the first system
joins from the second cycle on, learning from the last one.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .learning import synth_filters, learning_signal
from .loopmaps import RunRecord, closed_loop_maps, simulate_closed_loop
from .models import (DEFAULT_SPECS, ModelError, SystemSpec, build_system, margin,
                     perturb, without_dob)
from .scenarios import NoiseSpec, add_noise, make_scenario

__all__ = ["CampaignConfig", "CampaignReport", "CampaignError", "run_campaign",
           "build_models", "BASELINES"]

BASELINES = ("no_dob", "dob_only")
# anything this large means the loop has effectively diverged
_BLOWUP = 1e6


class CampaignError(RuntimeError):
    pass


@dataclass
class CampaignConfig:
    """Campaign settings.

    `delta_injection` maps a system label to a static multiplicative plant
    error.  `settle` and `guard` set the RMSE window (seconds dropped at the
    start and end of each record) and `taper` the fade applied to the end of
    learning signals.  With `stop_on_convergence` off, all `max_cycles`
    cycles run regardless of the convergence test.
    """

    systems: list = field(default_factory=lambda: list(DEFAULT_SPECS))
    scenario_id: int = 1
    max_cycles: int = 3
    convergence_tol: float = 1e-4
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    delta_injection: dict = field(default_factory=dict)
    output_dir: str | None = None
    ts: float = 0.02
    duration: float = 60.0
    settle: float = 10.0
    guard: float = 5.0
    taper: float = 2.0
    flight_order: tuple | None = None
    stop_on_convergence: bool = True

    def __post_init__(self):
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be at least 1")
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be positive")
        if len(self.systems) < 2:
            raise ValueError("a campaign needs at least two systems")
        labels = [s.label for s in self.systems]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate system labels in {labels}")
        unknown = set(self.delta_injection) - set(labels)
        if unknown:
            raise ValueError(f"delta_injection names unknown systems {sorted(unknown)}")

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        d["systems"] = [s.to_dict() for s in self.systems]
        d["noise"] = self.noise.to_dict()
        d["delta_injection"] = dict(self.delta_injection)
        if self.flight_order is not None:
            d["flight_order"] = list(self.flight_order)
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        if "systems" in d:
            d["systems"] = [SystemSpec.from_dict(s) for s in d["systems"]]
        if "noise" in d:
            d["noise"] = NoiseSpec.from_dict(d["noise"])
        if "delta_injection" in d:
            d["delta_injection"] = {str(k): float(v) for k, v in (d["delta_injection"] or {}).items()}
        if d.get("flight_order") is not None:
            d["flight_order"] = tuple(d["flight_order"])
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())


@dataclass
class CampaignReport:
    """RMSE grid of a campaign.

    ``rmse[label]`` maps condition names ``no_dob``, ``dob_only``, ``I1``,
    ``I2``, ... to the windowed RMSE of that run.
    """

    scenario_id: int
    flight_order: list
    rmse: dict
    margins: dict
    converged_cycle: int | None
    cycles_run: int
    runs: dict = field(repr=False, default_factory=dict)
    run_files: dict = field(default_factory=dict)

    def iterations(self, label):
        return [self.rmse[label][k] for k in sorted(
            (c for c in self.rmse[label] if c.startswith("I")), key=lambda c: int(c[1:]))]

    @property
    def n_runs(self):
        return sum(len(v) for v in self.rmse.values())

    def to_dict(self):
        return {"scenario_id": self.scenario_id, "flight_order": self.flight_order,
                "rmse": self.rmse, "margins": self.margins,
                "converged_cycle": self.converged_cycle, "cycles_run": self.cycles_run,
                "run_files": self.run_files}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def summary(self):
        conds = list(BASELINES) + [f"I{k}" for k in range(1, 1 + max(
            len(self.iterations(lbl)) for lbl in self.rmse))]
        lines = ["system    " + "".join(f"{c:>12s}" for c in conds)]
        for lbl in self.flight_order:
            row = self.rmse[lbl]
            cells = "".join(f"{row[c]:12.4e}" if c in row else f"{'-':>12s}" for c in conds)
            lines.append(f"{lbl:<10s}{cells}")
        conv = "not reached" if self.converged_cycle is None else f"cycle {self.converged_cycle}"
        lines.append(f"convergence: {conv}")
        return "\n".join(lines)


def build_models(config: CampaignConfig):
    """Nominal models with the configured plant errors, keyed by label."""
    models = {}
    for spec in config.systems:
        if not np.isclose(spec.ts, config.ts, rtol=1e-12):
            raise ModelError(f"{spec.label}: ts {spec.ts} differs from campaign ts {config.ts}")
        m = build_system(spec)
        if spec.label in config.delta_injection:
            m = perturb(m, config.delta_injection[spec.label])
        models[spec.label] = m
    return models


def _check_run(run, context):
    if not np.all(np.isfinite(run.y)) or np.max(np.abs(run.y)) > _BLOWUP:
        raise CampaignError(f"closed loop diverged in {context}")


def run_campaign(config: CampaignConfig) -> CampaignReport:
    models = build_models(config)
    labels = [s.label for s in config.systems]
    scen = make_scenario(config.scenario_id, ts=config.ts, duration=config.duration,
                         flight_order=config.flight_order)
    if len(scen.flight_order) != len(labels):
        raise ValueError(f"flight order {scen.flight_order} does not match {len(labels)} systems")
    order = [labels[k - 1] for k in scen.flight_order]
    dist = {lbl: add_noise(scen.d, config.noise, lbl, config.ts) for lbl in labels}
    maps = {lbl: closed_loop_maps(models[lbl], use_actual=True) for lbl in labels}

    def score(run):
        return run.rmse(config.settle, config.guard)

    rmse = {lbl: {} for lbl in order}
    runs = {lbl: {} for lbl in order}
    for lbl in order:
        m = models[lbl]
        run = simulate_closed_loop(without_dob(m), scen.r, dist[lbl], condition="no_dob")
        _check_run(run, f"{lbl} no_dob")
        runs[lbl]["no_dob"] = run
        run = simulate_closed_loop(m, scen.r, dist[lbl], maps=maps[lbl], condition="dob_only")
        _check_run(run, f"{lbl} dob_only")
        runs[lbl]["dob_only"] = run
        for c in BASELINES:
            rmse[lbl][c] = score(runs[lbl][c])

    n = len(order)
    pairs = {}
    for i, lbl in enumerate(order):
        prev = order[i - 1]
        try:
            pairs[lbl] = synth_filters(models[prev], models[lbl])
        except (ValueError, ArithmeticError) as exc:
            raise CampaignError(f"filter synthesis failed for {prev} -> {lbl}: {exc}") from exc

    latest = {lbl: runs[lbl]["dob_only"] for lbl in order}
    history = {lbl: [] for lbl in order}
    converged = None
    cycles = 0
    for cycle in range(1, config.max_cycles + 1):
        cycles = cycle
        for i, lbl in enumerate(order):
            if cycle == 1 and i == 0:
                continue
            prev = order[i - 1]
            src = latest[prev]
            d_f = learning_signal(pairs[lbl], src.e, src.d_f, taper=config.taper)
            k = len(history[lbl]) + 1
            run = simulate_closed_loop(models[lbl], scen.r, dist[lbl], d_f,
                                       maps=maps[lbl], condition=f"I{k}")
            _check_run(run, f"{prev} -> {lbl} iteration {k}")
            history[lbl].append(score(run))
            rmse[lbl][f"I{k}"] = history[lbl][-1]
            runs[lbl][f"I{k}"] = run
            latest[lbl] = run
        if converged is None and all(
                len(h) >= 2 and abs(h[-1] - h[-2]) < config.convergence_tol
                for h in history.values()):
            converged = cycle
            if config.stop_on_convergence:
                break

    report = CampaignReport(
        scenario_id=config.scenario_id, flight_order=order, rmse=rmse,
        margins={lbl: margin(models[lbl]) for lbl in order},
        converged_cycle=converged, cycles_run=cycles, runs=runs)
    if config.output_dir is not None:
        write_report(report, config)
    return report


def write_report(report: CampaignReport, config: CampaignConfig):
    """Write every run as CSV under ``runs/`` plus ``report.json``."""
    out = config.output_dir
    run_dir = os.path.join(out, "runs")
    os.makedirs(run_dir, exist_ok=True)
    files = {}
    for lbl, by_cond in report.runs.items():
        files[lbl] = {}
        for cond, run in by_cond.items():
            name = f"{lbl}_{cond}.csv"
            run.to_csv(os.path.join(run_dir, name))
            files[lbl][cond] = os.path.join("runs", name)
    report.run_files = files
    doc = report.to_dict()
    doc["config"] = config.to_dict()
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def rescore(directory, settle=None, guard=None):
    """RMSE grid recomputed from the run CSVs listed in a stored report."""
    with open(os.path.join(directory, "report.json")) as fh:
        doc = json.load(fh)
    cfg = doc.get("config", {})
    settle = cfg.get("settle", 10.0) if settle is None else settle
    guard = cfg.get("guard", 0.0) if guard is None else guard
    grid = {}
    for lbl, by_cond in doc["run_files"].items():
        grid[lbl] = {}
        for cond, rel in by_cond.items():
            run = RunRecord.from_csv(os.path.join(directory, rel), lbl, cond)
            grid[lbl][cond] = run.rmse(settle, guard)
    return CampaignReport(doc["scenario_id"], doc["flight_order"], grid,
                          doc.get("margins", {}), doc.get("converged_cycle"),
                          doc.get("cycles_run", 0), run_files=doc["run_files"])
