"""Out-of-process predictor sessions over a newline-delimited JSON protocol.

The harness spawns the external predictor as a child process and exchanges one
JSON object per line on its standard streams (see ``docs/wire-protocol.md``;
``docs/golden-transcript.jsonl`` holds a complete example session). The child
speaks first with a handshake; afterwards requests and responses alternate
strictly, one in flight per session, so external predictors may keep state
without races. Grid maps travel by file path plus metadata to keep messages
small; all other geometry is inline with full float fidelity.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
from typing import Sequence

import numpy as np

from .errors import ProtocolError
from .predictions import (
    GridPrediction,
    MixturePrediction,
    PointPrediction,
    Prediction,
    SamplePrediction,
)
from .scenarios import Scenario

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT = 10.0


def scenario_to_request(scenario: Scenario, request_id: int) -> dict:
    """The wire form of a prediction request."""
    agents = [
        {"id": int(a.agent_id), "observed": [[float(x), float(y)] for x, y in a.observed]}
        for a in scenario.agents
    ]
    request = {
        "type": "predict",
        "request_id": int(request_id),
        "dt": float(scenario.dt),
        "prediction_frames": int(scenario.prediction_frames),
        "agents": agents,
    }
    env = scenario.environment
    if env is not None:
        if env.goals.size:
            request["goals"] = [[float(x), float(y)] for x, y in env.goals]
        if env.grid is not None and env.source is not None:
            request["grid"] = {
                "path": env.source,
                "resolution": float(env.resolution),
                "origin": [float(env.origin[0]), float(env.origin[1])],
            }
    return request


def parse_agent_prediction(body: dict, horizon: int, request_id: int):
    """Validate and convert one agent's wire prediction."""
    try:
        kind = body["kind"]
        if kind == "points":
            points = np.asarray(body["points"], dtype=float)
            if points.shape != (horizon, 2):
                raise ProtocolError(
                    f"points prediction has shape {points.shape}, expected ({horizon}, 2)", request_id
                )
            return PointPrediction(points)
        if kind == "samples":
            samples = np.asarray(body["samples"], dtype=float)
            if samples.ndim != 3 or samples.shape[1] != horizon:
                raise ProtocolError(
                    f"samples prediction has shape {samples.shape}, expected (K, {horizon}, 2)", request_id
                )
            return SamplePrediction(samples)
        if kind == "grids":
            return GridPrediction(
                origin=np.asarray(body["origin"], dtype=float),
                resolution=float(body["resolution"]),
                grids=np.asarray(body["grids"], dtype=float),
            )
        if kind == "mixture":
            modes = body["modes"]
            return MixturePrediction(
                weights=np.asarray([m["weight"] for m in modes], dtype=float),
                means=np.asarray([m["means"] for m in modes], dtype=float),
                covariances=np.asarray([m["covariances"] for m in modes], dtype=float),
            )
        raise ProtocolError(f"unknown prediction kind {kind!r}", request_id)
    except ProtocolError:
        raise
    except Exception as exc:
        raise ProtocolError(f"malformed prediction payload: {exc}", request_id, json.dumps(body)) from exc


class ExternalPredictorSession:
    """One spawned external predictor, driven strictly request-by-request."""

    def __init__(
        self,
        command: str | Sequence[str],
        handshake_timeout: float = DEFAULT_TIMEOUT,
        request_timeout: float = DEFAULT_TIMEOUT,
    ):
        self.command = command
        self.request_timeout = request_timeout
        self._next_request_id = 1
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=None,  # inherit, so adapter diagnostics stay visible
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ProtocolError(f"cannot spawn external predictor {argv!r}: {exc}") from exc
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self.capabilities = self._handshake(handshake_timeout)

    # ------------------------------------------------------------------
    def _pump(self):
        try:
            for line in self._proc.stdout:
                self._lines.put(line)
        finally:
            self._lines.put(None)

    def _read_message(self, timeout: float, request_id: int | None = None) -> dict:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            self.kill()
            raise ProtocolError(f"no response within {timeout} s; process killed", request_id) from None
        if line is None:
            code = self._proc.poll()
            raise ProtocolError(f"external predictor exited (code {code}) mid-session", request_id)
        line = line.strip()
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed message: {exc}", request_id, payload=line) from exc
        if not isinstance(message, dict):
            raise ProtocolError("message is not an object", request_id, payload=line)
        return message

    def _handshake(self, timeout: float) -> dict:
        message = self._read_message(timeout)
        if message.get("type") != "handshake":
            raise ProtocolError(f"expected handshake, got {message.get('type')!r}", payload=json.dumps(message))
        version = message.get("version")
        if version != PROTOCOL_VERSION:
            self.kill()
            raise ProtocolError(f"protocol version mismatch: adapter speaks {version!r}, harness {PROTOCOL_VERSION}")
        capabilities = message.get("capabilities", {})
        if not isinstance(capabilities, dict):
            raise ProtocolError("handshake capabilities must be an object", payload=json.dumps(message))
        capabilities.setdefault("representations", ["points"])
        return capabilities

    # ------------------------------------------------------------------
    def predict(self, scenario: Scenario) -> Prediction:
        """Send one scenario and parse the validated prediction."""
        if self._proc.poll() is not None:
            raise ProtocolError(f"external predictor already exited (code {self._proc.poll()})")
        request_id = self._next_request_id
        self._next_request_id += 1
        request = scenario_to_request(scenario, request_id)
        try:
            self._proc.stdin.write(json.dumps(request) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"cannot write request: {exc}", request_id) from exc

        message = self._read_message(self.request_timeout, request_id)
        if message.get("type") == "error":
            raise ProtocolError(
                f"adapter error: {message.get('message', '(no message)')}", request_id, json.dumps(message)
            )
        if message.get("type") != "response":
            raise ProtocolError(
                f"expected response, got {message.get('type')!r}", request_id, json.dumps(message)
            )
        if message.get("request_id") != request_id:
            raise ProtocolError(
                f"response id {message.get('request_id')!r} does not match request", request_id, json.dumps(message)
            )
        agents = message.get("agents")
        if not isinstance(agents, list):
            raise ProtocolError("response without agents list", request_id, json.dumps(message))
        per_agent = {}
        for entry in agents:
            try:
                agent_id = int(entry["id"])
                body = entry["prediction"]
            except (KeyError, TypeError, ValueError) as exc:
                raise ProtocolError(f"malformed agent entry: {exc}", request_id, json.dumps(entry)) from exc
            per_agent[agent_id] = parse_agent_prediction(body, scenario.prediction_frames, request_id)
        missing = {a.agent_id for a in scenario.agents} - set(per_agent)
        if missing:
            raise ProtocolError(f"response missing agents {sorted(missing)}", request_id)
        return Prediction(per_agent)

    # ------------------------------------------------------------------
    def close(self) -> int | None:
        """Request a clean shutdown, killing the child if it lingers."""
        if self._proc.poll() is None:
            try:
                self._proc.stdin.write(json.dumps({"type": "shutdown"}) + "\n")
                self._proc.stdin.flush()
                self._proc.stdin.close()
            except (BrokenPipeError, OSError):
                pass
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self.kill()
        return self._proc.poll()

    def kill(self):
        if self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def spawn_external(command: str | Sequence[str], handshake_timeout: float = DEFAULT_TIMEOUT) -> ExternalPredictorSession:
    """Launch an external predictor and complete the handshake."""
    return ExternalPredictorSession(command, handshake_timeout=handshake_timeout)


def predict_external(session: ExternalPredictorSession, scenario: Scenario) -> Prediction:
    """Evaluate one scenario through a live session."""
    return session.predict(scenario)
