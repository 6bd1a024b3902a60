"""Command-line entry point: run, calibrate, synthetic, inspect, protocol-check."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bridge import ExternalPredictorSession
from .calibration import calibrate, split_calibration
from .errors import StageError, TrajbenchError
from .harness import load_config, run_experiment
from .io import load_dataset, write_dataset
from .predictors import (
    SYNTHETIC_KINDS,
    ConstantVelocityModel,
    constant_velocity_dataset,
    generate_synthetic,
    make_predictor,
    synthetic_dataset,
)
from .scenarios import ScenarioSpec, extract_scenarios, scenario_count_by_crowd


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 2
    except TrajbenchError as exc:
        print(f"error [{args.command}] {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trajbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiment described by a YAML config")
    p_run.add_argument("config", help="path to the experiment configuration")
    p_run.add_argument("--output-dir", default=None, help="override the config's output directory")
    p_run.add_argument(
        "--predictor",
        default=None,
        help="override the configured predictor, e.g. cvm or external:\"<command>\"",
    )
    p_run.set_defaults(func=cmd_run)

    p_cal = sub.add_parser("calibrate", help="calibrate the configured predictor on its calibration split")
    p_cal.add_argument("config", help="path to the experiment configuration")
    p_cal.add_argument("--output-dir", default=None, help="override the config's output directory")
    p_cal.set_defaults(func=cmd_calibrate)

    p_syn = sub.add_parser("synthetic", help="generate a synthetic scenario dataset")
    p_syn.add_argument("kind", choices=SYNTHETIC_KINDS + ("linear",))
    p_syn.add_argument("--out", default=None, help="write the dataset to this path (native format)")
    p_syn.add_argument("--bundle", default=None, help="write an overlay bundle (scenario + predictions) as JSON")
    p_syn.add_argument(
        "--predictors",
        default="cvm,social_force",
        help="comma-separated built-in predictor ids for the overlay bundle",
    )
    p_syn.add_argument("--prediction-frames", type=int, default=12)
    p_syn.add_argument("--agents", type=int, default=4, help="agent count for the linear kind")
    p_syn.add_argument("--frames", type=int, default=80, help="frame count for the linear kind")
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.set_defaults(func=cmd_synthetic)

    p_ins = sub.add_parser("inspect", help="print summary statistics of a dataset file")
    p_ins.add_argument("dataset")
    p_ins.add_argument("--format", default="native", choices=("native", "trajnet_json"))
    p_ins.add_argument("--frequency-hz", type=float, default=None)
    p_ins.set_defaults(func=cmd_inspect)

    p_chk = sub.add_parser("protocol-check", help="exercise an external predictor over the wire protocol")
    p_chk.add_argument("adapter", help="command line of the external predictor")
    p_chk.add_argument("--scenarios", type=int, default=20, help="number of scenarios to send")
    p_chk.add_argument("--timeout", type=float, default=10.0, help="per-request timeout in seconds")
    p_chk.add_argument(
        "--expect-linear",
        action="store_true",
        help="additionally require equality with built-in single-difference linear extrapolation",
    )
    p_chk.set_defaults(func=cmd_protocol_check)
    return parser


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.predictor is not None:
        config = replace(config, predictor_id=args.predictor)
    report = run_experiment(config, output_dir=args.output_dir)
    for row in report.rows:
        label = f"{row.group_key}={row.group_value} " if row.group_key else ""
        print(f"{row.metric:>16} {label}mean={row.mean:.6f} std={row.std:.6f} n={row.count}")
    out = args.output_dir or config.output_dir
    if out:
        print(f"report written to {Path(out) / 'report.csv'}")
    return 0


def cmd_calibrate(args) -> int:
    config = load_config(args.config)
    ref = config.dataset
    dataset = load_dataset(ref.path, format=ref.format, frequency_hz=ref.frequency_hz, name=ref.name)
    from .preprocess import preprocess_dataset

    dataset = preprocess_dataset(dataset, config.preprocess)
    fraction = ref.calibration_fraction if ref.calibration_fraction is not None else config.calibration_fraction
    cal, _ = split_calibration(dataset, fraction)
    result = calibrate(
        config.predictor_id,
        cal,
        spec=config.spec,
        objective_horizon_s=config.objective_horizon_s,
        budget=config.calibration_budget,
        seed=config.seed,
    )
    print(f"best objective: {result.best_value:.6f}")
    for name in sorted(result.best_params):
        print(f"  {name} = {result.best_params[name]:.6f}")
    out = args.output_dir or config.output_dir
    if out:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        result.write(out / "calibration.trace")
        (out / "calibrated_params.json").write_text(
            json.dumps(result.best_params, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"trace written to {out / 'calibration.trace'}")
    return 0


def cmd_synthetic(args) -> int:
    if args.kind == "linear":
        dataset = constant_velocity_dataset(
            n_agents=args.agents, n_frames=args.frames, seed=args.seed
        )
    else:
        dataset = synthetic_dataset(args.kind, prediction_frames=args.prediction_frames)
    print(f"{dataset.name}: {dataset.n_agents} agents, {dataset.n_detections} detections at {dataset.frequency_hz} Hz")
    if args.out:
        write_dataset(dataset, args.out)
        print(f"dataset written to {args.out}")
    if args.bundle:
        if args.kind == "linear":
            print("error [synthetic] overlay bundles need one of the two-agent kinds", file=sys.stderr)
            return 2
        _write_bundle(args)
        print(f"bundle written to {args.bundle}")
    return 0


def _write_bundle(args) -> None:
    scenario = generate_synthetic(args.kind, prediction_frames=args.prediction_frames)
    predictions = {}
    for predictor_id in [p.strip() for p in args.predictors.split(",") if p.strip()]:
        predictor = make_predictor(predictor_id)
        prediction = predictor.predict(scenario)
        predictions[predictor_id] = {
            str(a.agent_id): [[float(x), float(y)] for x, y in prediction.for_agent(a.agent_id).points]
            for a in scenario.agents
        }
    bundle = {
        "kind": args.kind,
        "dt": scenario.dt,
        "observation_frames": scenario.observation_frames,
        "prediction_frames": scenario.prediction_frames,
        "agents": [
            {
                "id": a.agent_id,
                "observed": [[float(x), float(y)] for x, y in a.observed],
                "future": [[float(x), float(y)] for x, y in a.future],
            }
            for a in scenario.agents
        ],
        "predictions": predictions,
    }
    Path(args.bundle).write_text(json.dumps(bundle, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_inspect(args) -> int:
    dataset = load_dataset(args.dataset, format=args.format, frequency_hz=args.frequency_hz)
    lo_t, hi_t = dataset.time_range()
    lo_f, hi_f = dataset.frame_range()
    lengths = sorted(len(t) for t in dataset.tracks)
    print(f"name:        {dataset.name}")
    print(f"agents:      {dataset.n_agents}")
    print(f"detections:  {dataset.n_detections}")
    print(f"frequency:   {dataset.frequency_hz} Hz")
    print(f"time span:   {lo_t:.3f} .. {hi_t:.3f} s ({hi_t - lo_t:.3f} s)")
    print(f"frame span:  {lo_f} .. {hi_f}")
    print(f"track len:   min={lengths[0]} median={lengths[len(lengths) // 2]} max={lengths[-1]}")
    env = dataset.environment
    if env is not None:
        grid = "none" if env.grid is None else f"{env.grid.shape[1]}x{env.grid.shape[0]} @ {env.resolution} m"
        print(f"environment: grid {grid}, {len(env.goals)} goals")
    spec = ScenarioSpec()
    try:
        crowd = scenario_count_by_crowd(extract_scenarios(dataset, spec))
        print(
            f"scenarios:   {sum(crowd.values())} at O_p={spec.observation_frames}, "
            f"T_p={spec.prediction_frames}, min_agents={spec.min_agents}, stride={spec.stride}"
        )
        for n_agents, count in crowd.items():
            print(f"  {n_agents} agents: {count}")
    except TrajbenchError:
        pass
    return 0


def cmd_protocol_check(args) -> int:
    reference = ConstantVelocityModel(filter_sigma=None)
    dataset = constant_velocity_dataset(n_agents=3, n_frames=max(22, args.scenarios + 21), seed=7)
    scenarios = extract_scenarios(dataset, ScenarioSpec(8, 12, min_agents=2, stride=1))[: args.scenarios]
    if len(scenarios) < args.scenarios:
        print(f"note: only {len(scenarios)} scenarios available", file=sys.stderr)

    session = ExternalPredictorSession(args.adapter, request_timeout=args.timeout)
    print(f"handshake ok: capabilities {json.dumps(session.capabilities, sort_keys=True)}")
    worst = 0.0
    try:
        for scenario in scenarios:
            prediction = session.predict(scenario)
            if args.expect_linear:
                expected = reference.predict(scenario)
                for agent in scenario.agents:
                    got = prediction.for_agent(agent.agent_id)
                    want = expected.for_agent(agent.agent_id).points
                    got_points = got.points if hasattr(got, "points") else got.samples[0]
                    worst = max(worst, float(np.max(np.abs(np.asarray(got_points) - want))))
    finally:
        code = session.close()
    print(f"{len(scenarios)} scenarios answered; adapter exit code {code}")
    if args.expect_linear:
        print(f"max deviation from single-difference linear extrapolation: {worst:.3e} m")
        if worst > 1e-9:
            print("FAIL: adapter is not equivalent to linear extrapolation", file=sys.stderr)
            return 1
    print("protocol check PASSED")
    return 0


if __name__ == "__main__":
    sys.exit(main())
