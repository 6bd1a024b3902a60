/**
 * Wire protocol types (version 1): one JSON object per line on stdio.
 * The adapter speaks first with a handshake; afterwards requests and
 * responses alternate strictly. See ../../docs/wire-protocol.md.
 */

export const PROTOCOL_VERSION = 1;

export interface Handshake {
  type: "handshake";
  version: number;
  capabilities: {
    representations: string[];
    max_k?: number;
  };
}

export interface AgentObservation {
  id: number;
  observed: [number, number][];
}

export interface PredictRequest {
  type: "predict";
  request_id: number;
  dt: number;
  prediction_frames: number;
  agents: AgentObservation[];
  goals?: [number, number][];
  grid?: { path: string; resolution: number; origin: [number, number] };
}

export interface PointsPrediction {
  kind: "points";
  points: [number, number][];
}

export interface SamplesPrediction {
  kind: "samples";
  samples: [number, number][][];
}

export type AgentPrediction = PointsPrediction | SamplesPrediction;

export interface PredictResponse {
  type: "response";
  request_id: number;
  agents: { id: number; prediction: AgentPrediction }[];
}

export interface ErrorResponse {
  type: "error";
  request_id: number | null;
  message: string;
}

export interface Shutdown {
  type: "shutdown";
}

export type Incoming = PredictRequest | Shutdown;

/** Validate an incoming line; throws with a human-readable reason. */
export function parseIncoming(line: string): Incoming {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch (err) {
    throw new Error(`invalid JSON: ${(err as Error).message}`);
  }
  if (typeof raw !== "object" || raw === null) {
    throw new Error("message is not an object");
  }
  const msg = raw as Record<string, unknown>;
  if (msg.type === "shutdown") {
    return { type: "shutdown" };
  }
  if (msg.type !== "predict") {
    throw new Error(`unsupported message type ${JSON.stringify(msg.type)}`);
  }
  if (typeof msg.request_id !== "number") {
    throw new Error("predict without numeric request_id");
  }
  if (typeof msg.dt !== "number" || !(msg.dt > 0)) {
    throw new Error("predict without positive dt");
  }
  if (typeof msg.prediction_frames !== "number" || msg.prediction_frames < 1) {
    throw new Error("predict without positive prediction_frames");
  }
  if (!Array.isArray(msg.agents) || msg.agents.length === 0) {
    throw new Error("predict without agents");
  }
  for (const agent of msg.agents as Record<string, unknown>[]) {
    if (typeof agent.id !== "number") {
      throw new Error("agent without numeric id");
    }
    const observed = agent.observed;
    if (!Array.isArray(observed) || observed.length < 2) {
      throw new Error(`agent ${agent.id}: observation window needs >= 2 positions`);
    }
    for (const point of observed) {
      if (!Array.isArray(point) || point.length !== 2 || !point.every(Number.isFinite)) {
        throw new Error(`agent ${agent.id}: non-finite or malformed position`);
      }
    }
  }
  return msg as unknown as PredictRequest;
}
