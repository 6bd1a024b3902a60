#!/usr/bin/env node
/**
 * Reference external predictor: last-difference linear extrapolation.
 *
 * Serves the wire protocol on stdin/stdout. In `samples` mode it answers with
 * K copies of the linear extrapolation under seeded Gaussian jitter (K=1 or
 * jitter 0 keeps the copies identical). The predictor intentionally
 * duplicates the benchmark's built-in single-difference constant-velocity
 * baseline, so protocol correctness is testable by equivalence:
 *
 *   trajbench protocol-check --expect-linear "node dist/adapter.js"
 *
 * Flags:
 *   --mode points|samples   response representation       (default points)
 *   --k N                   samples per agent             (default 3)
 *   --jitter SIGMA          jitter std dev in meters      (default 0)
 *   --seed N                jitter seed                   (default 0)
 *   --fail garbage|hang|crash   misbehave on requests, for harness robustness tests
 */

import * as readline from "readline";
import {
  AgentPrediction,
  ErrorResponse,
  Handshake,
  parseIncoming,
  PredictRequest,
  PredictResponse,
  PROTOCOL_VERSION,
} from "./protocol";
import { mixSeed, SeededRng } from "./rng";

export interface AdapterConfig {
  mode: "points" | "samples";
  k: number;
  jitter: number;
  seed: number;
  fail?: "garbage" | "hang" | "crash";
}

export function parseArgs(argv: string[]): AdapterConfig {
  const config: AdapterConfig = { mode: "points", k: 3, jitter: 0, seed: 0 };
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    switch (flag) {
      case "--mode":
        if (value !== "points" && value !== "samples") {
          throw new Error(`unknown mode ${value}`);
        }
        config.mode = value;
        break;
      case "--k":
        config.k = Number(value);
        break;
      case "--jitter":
        config.jitter = Number(value);
        break;
      case "--seed":
        config.seed = Number(value);
        break;
      case "--fail":
        config.fail = value as AdapterConfig["fail"];
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!(config.k >= 1)) throw new Error("--k must be >= 1");
  if (!(config.jitter >= 0)) throw new Error("--jitter must be >= 0");
  return config;
}

/** Linear extrapolation from the last finite difference of the window. */
export function linearPoints(
  observed: [number, number][],
  dt: number,
  horizon: number
): [number, number][] {
  const [x0, y0] = observed[observed.length - 2];
  const [x1, y1] = observed[observed.length - 1];
  const vx = (x1 - x0) / dt;
  const vy = (y1 - y0) / dt;
  const points: [number, number][] = [];
  for (let t = 1; t <= horizon; t++) {
    points.push([x1 + t * dt * vx, y1 + t * dt * vy]);
  }
  return points;
}

export function predictAgent(
  request: PredictRequest,
  agentIndex: number,
  config: AdapterConfig
): AgentPrediction {
  const agent = request.agents[agentIndex];
  const points = linearPoints(agent.observed, request.dt, request.prediction_frames);
  if (config.mode === "points") {
    return { kind: "points", points };
  }
  const samples: [number, number][][] = [];
  for (let s = 0; s < config.k; s++) {
    const rng = new SeededRng(mixSeed(config.seed, request.request_id, agent.id, s));
    samples.push(
      points.map(([x, y]): [number, number] => [
        x + config.jitter * rng.gauss(),
        y + config.jitter * rng.gauss(),
      ])
    );
  }
  return { kind: "samples", samples };
}

export function handleRequest(request: PredictRequest, config: AdapterConfig): PredictResponse {
  return {
    type: "response",
    request_id: request.request_id,
    agents: request.agents.map((agent, i) => ({
      id: agent.id,
      prediction: predictAgent(request, i, config),
    })),
  };
}

/** Single-threaded request loop; the protocol guarantees one request in flight. */
export function serve(
  input: NodeJS.ReadableStream,
  output: NodeJS.WritableStream,
  config: AdapterConfig,
  exit: (code: number) => void = process.exit
): void {
  const emit = (message: Handshake | PredictResponse | ErrorResponse) => {
    output.write(JSON.stringify(message) + "\n");
  };
  emit({
    type: "handshake",
    version: PROTOCOL_VERSION,
    capabilities: { representations: ["points", "samples"], max_k: 64 },
  });

  const lines = readline.createInterface({ input, terminal: false });
  lines.on("line", (line) => {
    if (line.trim() === "") return;
    let message;
    try {
      message = parseIncoming(line);
    } catch (err) {
      // Malformed request: report it and keep serving.
      emit({ type: "error", request_id: null, message: (err as Error).message });
      return;
    }
    if (message.type === "shutdown") {
      exit(0);
      return;
    }
    if (config.fail === "garbage") {
      output.write("}{ not json\n");
      return;
    }
    if (config.fail === "hang") {
      return; // never answer; the harness request timeout reaps us
    }
    if (config.fail === "crash") {
      exit(3);
      return;
    }
    emit(handleRequest(message, config));
  });
}

if (require.main === module) {
  serve(process.stdin, process.stdout, parseArgs(process.argv.slice(2)));
}
