"""Subprocess plugin protocol: classifiers and generators behind a pipe.

The optimizer treats external models as true black boxes by talking to them
over a child process's standard input/output.  Messages are UTF-8 JSON, one
per line.  The parent opens the conversation:

    parent -> child   {"type": "hello", "protocol": 1}
    child  -> parent  {"type": "hello", "role": "oracle",
                       "num_classes": C, "sample_dim": D}
                      (generators reply role "generator" with
                       "latent_dim" and "sample_dim")

after which the parent issues one request at a time:

    {"type": "predict", "samples": [[...], ...]}   -> {"type": "probs",   "rows": [[...], ...]}
    {"type": "decode",  "latents": [[...], ...]}   -> {"type": "samples", "rows": [[...], ...]}

A child may reply {"type": "error", "message": "..."} to any request.  All
numbers are decimal floating point; Python's repr-based JSON encoding makes
float64 values survive the pipe exactly.

Responses are validated strictly: row count must equal request length, rows
must be in input order, and oracle rows must sum to 1 within 1e-6.  A child
is a serialized resource: one in-flight request at a time, enforced with a
lock.  The request timeout defaults to 30 s and can be overridden with the
EXEMPLAR_PLUGIN_TIMEOUT_SECS environment variable or per client.
"""

from __future__ import annotations

import json
import os
import queue
import shlex
import subprocess
import sys
import threading

import numpy as np

from .errors import DimensionError, PluginError, ProtocolError
from .oracles import WIRE_SUM_TOL, check_probability_rows

__all__ = [
    "PROTOCOL_VERSION",
    "DEFAULT_TIMEOUT_SECS",
    "TIMEOUT_ENV_VAR",
    "PluginClient",
    "SubprocessOracle",
    "SubprocessGenerator",
    "serve_oracle",
    "serve_generator",
]

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT_SECS = 30.0
TIMEOUT_ENV_VAR = "EXEMPLAR_PLUGIN_TIMEOUT_SECS"
_STDERR_TAIL = 50  # lines of child stderr kept for diagnostics


def default_timeout() -> float:
    raw = os.environ.get(TIMEOUT_ENV_VAR)
    if raw is None:
        return DEFAULT_TIMEOUT_SECS
    try:
        value = float(raw)
    except ValueError:
        raise PluginError(f"{TIMEOUT_ENV_VAR} must be a number, got {raw!r}") from None
    if value <= 0:
        raise PluginError(f"{TIMEOUT_ENV_VAR} must be positive, got {value}")
    return value


class PluginClient:
    """Owns one plugin child process and the handshake-validated pipe to it."""

    def __init__(self, command, role: str, timeout: float | None = None):
        if role not in ("oracle", "generator"):
            raise PluginError(f"unknown plugin role {role!r}")
        self.command = command
        self.role = role
        self.timeout = default_timeout() if timeout is None else float(timeout)
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise PluginError("empty plugin command")
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise PluginError(f"cannot launch plugin {argv[0]!r}: {exc}") from exc
        self._lock = threading.Lock()
        self._lines: queue.Queue = queue.Queue()
        self._stderr_tail: list[str] = []
        self._reader = threading.Thread(target=self._pump_stdout, daemon=True)
        self._reader.start()
        self._stderr_reader = threading.Thread(target=self._pump_stderr, daemon=True)
        self._stderr_reader.start()
        self.hello = self._handshake()

    def _pump_stdout(self):
        try:
            for line in self._proc.stdout:
                self._lines.put(line)
        except ValueError:
            pass  # pipe closed during shutdown
        self._lines.put(None)

    def _pump_stderr(self):
        try:
            for line in self._proc.stderr:
                self._stderr_tail.append(line.rstrip("\n"))
                del self._stderr_tail[:-_STDERR_TAIL]
        except ValueError:
            pass

    def _diagnostics(self) -> str:
        code = self._proc.poll()
        tail = "\n".join(self._stderr_tail)
        msg = f"exit status {code}" if code is not None else "still running"
        return f"{msg}; captured stderr:\n{tail}" if tail else msg

    def _read_line(self) -> str:
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self.close(kill=True)
            raise PluginError(f"plugin timed out after {self.timeout} s ({self._diagnostics()})") from None
        if line is None:
            raise PluginError(f"plugin exited before replying ({self._diagnostics()})")
        return line

    def _handshake(self) -> dict:
        reply = self.request({"type": "hello", "protocol": PROTOCOL_VERSION})
        if reply.get("type") != "hello":
            raise ProtocolError(f"handshake reply has type {reply.get('type')!r}, expected 'hello'")
        if reply.get("role") != self.role:
            raise ProtocolError(f"plugin declared role {reply.get('role')!r}, expected {self.role!r}")
        keys = ("num_classes", "sample_dim") if self.role == "oracle" else ("latent_dim", "sample_dim")
        for key in keys:
            value = reply.get(key)
            if not isinstance(value, int) or value < 1:
                raise ProtocolError(f"handshake field {key!r} must be a positive integer, got {value!r}")
        return reply

    def request(self, message: dict) -> dict:
        """Send one message, wait for one reply; error replies raise."""
        payload = json.dumps(message, allow_nan=False)
        with self._lock:
            if self._proc.poll() is not None:
                raise PluginError(f"plugin already exited ({self._diagnostics()})")
            try:
                self._proc.stdin.write(payload + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, ValueError, OSError):
                raise PluginError(f"plugin pipe closed ({self._diagnostics()})") from None
            line = self._read_line()
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"plugin reply is not valid JSON: {line!r}") from exc
        if not isinstance(reply, dict):
            raise ProtocolError(f"plugin reply must be a JSON object, got {type(reply).__name__}")
        if reply.get("type") == "error":
            raise PluginError(f"plugin reported error: {reply.get('message', '(no message)')}")
        return reply

    def batch_request(self, send_type: str, key: str, batch: np.ndarray,
                      reply_type: str) -> np.ndarray:
        """One request carrying a whole batch; reply rows validated for count and order."""
        reply = self.request({"type": send_type, key: np.asarray(batch, dtype=np.float64).tolist()})
        if reply.get("type") != reply_type:
            raise ProtocolError(f"expected reply type {reply_type!r}, got {reply.get('type')!r}")
        rows = reply.get("rows")
        if not isinstance(rows, list):
            raise ProtocolError("reply is missing the 'rows' list")
        if len(rows) != len(batch):
            raise ProtocolError(f"row count mismatch: sent {len(batch)} samples, got {len(rows)} rows")
        try:
            out = np.array(rows, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ProtocolError(f"reply rows are not numeric: {exc}") from exc
        if len(batch) and (out.ndim != 2):
            raise ProtocolError("reply rows are ragged")
        return out.reshape(len(batch), -1) if len(batch) else out.reshape(0, 0)

    def close(self, kill: bool = False):
        proc = getattr(self, "_proc", None)
        if proc is None:
            return
        try:
            if proc.stdin:
                proc.stdin.close()
        except (BrokenPipeError, OSError):
            pass
        try:
            proc.wait(timeout=0.1 if kill else 5.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close(kill=True)
        except Exception:
            pass


class SubprocessOracle:
    """OracleContract implementation backed by a plugin child process."""

    def __init__(self, command, timeout: float | None = None):
        self._client = PluginClient(command, "oracle", timeout=timeout)
        self.num_classes = self._client.hello["num_classes"]
        self.sample_dim = self._client.hello["sample_dim"]

    def predict_batch(self, samples) -> np.ndarray:
        samples = np.asarray(samples, dtype=np.float64)
        if len(samples) == 0:
            return np.zeros((0, self.num_classes))
        rows = self._client.batch_request("predict", "samples", samples, "probs")
        try:
            return check_probability_rows(rows, len(samples), self.num_classes, tol=WIRE_SUM_TOL)
        except DimensionError as exc:
            raise ProtocolError(str(exc)) from exc

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class SubprocessGenerator:
    """GeneratorContract implementation backed by a plugin child process."""

    def __init__(self, command, timeout: float | None = None):
        self._client = PluginClient(command, "generator", timeout=timeout)
        self.latent_dim = self._client.hello["latent_dim"]
        self.sample_dim = self._client.hello["sample_dim"]

    def decode_batch(self, latents) -> np.ndarray:
        latents = np.asarray(latents, dtype=np.float64)
        if len(latents) == 0:
            return np.zeros((0, self.sample_dim))
        rows = self._client.batch_request("decode", "latents", latents, "samples")
        if len(latents) and rows.shape[1] != self.sample_dim:
            raise ProtocolError(f"decoded rows have width {rows.shape[1]}, handshake declared {self.sample_dim}")
        if len(latents) and not np.all(np.isfinite(rows)):
            raise ProtocolError("decoded rows contain non-finite entries")
        return rows.reshape(len(latents), self.sample_dim)

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# ---------------------------------------------------------------------------
# Child side: serving loops used by the shipped plugins (and by anyone who
# wants to wrap a Python model as a plugin without hand-rolling the protocol).
# ---------------------------------------------------------------------------


def _emit(stream, obj):
    stream.write(json.dumps(obj, allow_nan=False) + "\n")
    stream.flush()


def _serve(hello: dict, handle, stdin, stdout):
    """Generic child loop: reply to hello, then answer requests until EOF."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            _emit(stdout, {"type": "error", "message": "request is not valid JSON"})
            continue
        mtype = msg.get("type")
        if mtype == "hello":
            if msg.get("protocol") != PROTOCOL_VERSION:
                _emit(stdout, {"type": "error",
                               "message": f"unsupported protocol {msg.get('protocol')!r}"})
            else:
                _emit(stdout, hello)
            continue
        try:
            reply = handle(msg)
        except Exception as exc:  # report, keep serving
            _emit(stdout, {"type": "error", "message": f"{type(exc).__name__}: {exc}"})
            continue
        if reply is None:
            _emit(stdout, {"type": "error", "message": f"unsupported request type {mtype!r}"})
        else:
            _emit(stdout, reply)


def serve_oracle(model, stdin=None, stdout=None):
    """Serve an OracleContract implementation over stdio until EOF."""
    hello = {"type": "hello", "role": "oracle",
             "num_classes": int(model.num_classes), "sample_dim": int(model.sample_dim)}

    def handle(msg):
        if msg.get("type") != "predict":
            return None
        samples = np.array(msg["samples"], dtype=np.float64).reshape(-1, model.sample_dim)
        rows = model.predict_batch(samples)
        return {"type": "probs", "rows": np.asarray(rows).tolist()}

    _serve(hello, handle, stdin, stdout)


def serve_generator(decoder, stdin=None, stdout=None):
    """Serve a GeneratorContract implementation over stdio until EOF."""
    hello = {"type": "hello", "role": "generator",
             "latent_dim": int(decoder.latent_dim), "sample_dim": int(decoder.sample_dim)}

    def handle(msg):
        if msg.get("type") != "decode":
            return None
        latents = np.array(msg["latents"], dtype=np.float64).reshape(-1, decoder.latent_dim)
        rows = decoder.decode_batch(latents)
        return {"type": "samples", "rows": np.asarray(rows).tolist()}

    _serve(hello, handle, stdin, stdout)
