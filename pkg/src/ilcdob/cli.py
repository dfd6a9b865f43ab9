"""Command-line entry point: ``python -m ilcdob <command>``.

Exit status is 0 on success, 1 for domain errors (unstable or rejected
models, failed synthesis) and 2 for usage, configuration and I/O errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import lti_core as lti
from .harness import CampaignConfig, CampaignError, build_models, rescore, run_campaign
from .learning import error_propagation, learning_signal, synth_filters
from .loopmaps import closed_loop_maps, simulate_closed_loop
from .models import ModelError, without_dob
from .scenarios import add_noise, make_scenario

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


def _config(args):
    if args.config is None:
        cfg = CampaignConfig()
    else:
        try:
            cfg = CampaignConfig.load(args.config)
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"invalid config {args.config}: {exc}") from exc
    if getattr(args, "scenario", None) is not None:
        cfg.scenario_id = args.scenario
    return cfg


def _system_label(cfg, index):
    if not 1 <= index <= len(cfg.systems):
        raise UsageError(f"system index {index} out of range 1..{len(cfg.systems)}")
    return cfg.systems[index - 1].label


def _pair(cfg, text):
    try:
        a, b = (int(s) for s in text.split(","))
    except ValueError:
        raise UsageError(f"--pair expects two indices like 1,2, got {text!r}") from None
    return _system_label(cfg, a), _system_label(cfg, b)


def _write_bode(g, path, ts):
    lti.freq_response(g, lti.default_grid(ts)).to_csv(path)


def cmd_synth(args):
    cfg = _config(args)
    models = build_models(cfg)
    a, b = _pair(cfg, args.pair)
    pair = synth_filters(models[a], models[b])
    os.makedirs(args.out, exist_ok=True)
    stem = os.path.join(args.out, f"{a}_to_{b}")
    with open(stem + "_filters.json", "w") as fh:
        fh.write(pair.to_json(indent=2) + "\n")
    _write_bode(pair.l1, stem + "_L1.csv", cfg.ts)
    _write_bode(pair.l2, stem + "_L2.csv", cfg.ts)
    print(f"wrote {stem}_filters.json, {stem}_L1.csv, {stem}_L2.csv")


def cmd_bode(args):
    cfg = _config(args)
    models = build_models(cfg)
    os.makedirs(args.out, exist_ok=True)
    labels = list(_pair(cfg, args.pair)) if args.pair else [s.label for s in cfg.systems]
    written = []
    for lbl in labels:
        for name, g in closed_loop_maps(models[lbl], use_actual=True).as_dict().items():
            path = os.path.join(args.out, f"{lbl}_{name}.csv")
            _write_bode(g, path, cfg.ts)
            written.append(path)
    if args.pair:
        a, b = labels
        prop = error_propagation(models[a], models[b], synth_filters(models[a], models[b]))
        for name, g in (("T_e1", prop.t_e1), ("T_e2", prop.t_e2)):
            path = os.path.join(args.out, f"{a}_to_{b}_{name}.csv")
            if g.is_zero:
                # exact models: the operator vanishes identically
                g = lti.TransferFunction.constant(0.0, cfg.ts)
            _write_bode(g, path, cfg.ts)
            written.append(path)
    print("\n".join(written))


def cmd_run(args):
    cfg = _config(args)
    models = build_models(cfg)
    lbl = _system_label(cfg, args.system)
    scen = make_scenario(cfg.scenario_id, ts=cfg.ts, duration=cfg.duration,
                         flight_order=cfg.flight_order)
    d = add_noise(scen.d, cfg.noise, lbl, cfg.ts)
    m = models[lbl]
    if args.condition == "no-dob":
        run = simulate_closed_loop(without_dob(m), scen.r, d, condition="no_dob")
    elif args.condition == "dob-only":
        run = simulate_closed_loop(m, scen.r, d, condition="dob_only")
    else:
        # first learning pass from the flight-order predecessor's dob-only run
        labels = [s.label for s in cfg.systems]
        order = [labels[k - 1] for k in scen.flight_order]
        prev = order[order.index(lbl) - 1]
        d_prev = add_noise(scen.d, cfg.noise, prev, cfg.ts)
        src = simulate_closed_loop(models[prev], scen.r, d_prev)
        d_f = learning_signal(synth_filters(models[prev], m), src.e, taper=cfg.taper)
        run = simulate_closed_loop(m, scen.r, d, d_f, condition="I1")
    out = args.out or f"{lbl}_{run.condition}_scenario{cfg.scenario_id}.csv"
    run.to_csv(out)
    print(f"{out}: rmse {run.rmse(cfg.settle, cfg.guard):.6e} m")


def cmd_campaign(args):
    cfg = _config(args)
    if args.out is not None:
        cfg.output_dir = args.out
    elif cfg.output_dir is None:
        cfg.output_dir = f"campaign_scenario{cfg.scenario_id}"
    if args.max_cycles is not None:
        cfg.max_cycles = args.max_cycles
    report = run_campaign(cfg)
    print(report.summary())
    print(f"wrote {os.path.join(cfg.output_dir, 'report.json')}")


def cmd_report(args):
    report = rescore(args.dir, settle=args.settle, guard=args.guard)
    print(report.summary())


def build_parser():
    ap = argparse.ArgumentParser(prog="ilcdob", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scenario=False):
        p.add_argument("--config", help="campaign config JSON (defaults to the built-in systems)")
        if scenario:
            p.add_argument("--scenario", type=int, choices=(1, 2, 3, 4))

    p = sub.add_parser("synth", help="learning filters for a system pair")
    common(p)
    p.add_argument("--pair", required=True, help="predecessor,successor as 1-based indices")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bode", help="frequency responses of the loop maps")
    common(p)
    p.add_argument("--pair", help="also emit T_e1 and T_e2 for this pair")
    p.add_argument("--out", default="bode")
    p.set_defaults(func=cmd_bode)

    p = sub.add_parser("run", help="one system under one condition")
    common(p, scenario=True)
    p.add_argument("--system", type=int, required=True)
    p.add_argument("--condition", required=True, choices=("no-dob", "dob-only", "learn"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("campaign", help="full cyclic learning study")
    common(p, scenario=True)
    p.add_argument("--out")
    p.add_argument("--max-cycles", type=int)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("report", help="recompute the RMSE grid from stored runs")
    p.add_argument("--dir", required=True)
    p.add_argument("--settle", type=float)
    p.add_argument("--guard", type=float)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (UsageError, OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ModelError, CampaignError, lti.LTIError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
