#!/usr/bin/env python3
"""Standalone connected-device simulator.

Logs into the object platform, registers its feature, then streams readings:
each loop iteration PUTs the next value to the feature and polls the
decision endpoint, printing one transcript line per request. Uses only the
standard library so it runs anywhere the interpreter does.

Usage: device_client.py CONFIG.json

Config keys: base_url, username, password, service, feature (the object
registration body), send_interval_ms (>= 10), values (non-empty list of
scalars), decider (agent whose decision to poll, default "decider").

Exit codes: 0 all values sent, 1 bad config/usage, 2 flow failure
(any non-2xx response except a 204 "no decision yet").
"""

import json
import sys
import time
import urllib.error
import urllib.request

USAGE_EXIT = 1
FLOW_EXIT = 2

REQUIRED_KEYS = ("base_url", "username", "password", "service",
                 "feature", "send_interval_ms", "values")


class ConfigError(Exception):
    pass


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            config = json.load(handle)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    missing = [k for k in REQUIRED_KEYS if k not in config]
    if missing:
        raise ConfigError(f"config missing keys: {', '.join(missing)}")
    if not isinstance(config["values"], list) or not config["values"]:
        raise ConfigError("values must be a non-empty list")
    interval = config["send_interval_ms"]
    if not isinstance(interval, (int, float)) or interval < 10:
        raise ConfigError("send_interval_ms must be at least 10")
    config.setdefault("decider", "decider")
    config["base_url"] = config["base_url"].rstrip("/")
    return config


def request(method, url, body=None, token=None, timeout=10):
    """One HTTP exchange. Returns (status, parsed json or None, latency_ms)."""
    data = None
    headers = {}
    if body is not None:
        data = json.dumps(body).encode("utf-8")
        headers["Content-Type"] = "application/json"
    if token is not None:
        headers["Authorization"] = f"Bearer {token}"
    req = urllib.request.Request(url, data=data, headers=headers, method=method)
    started = time.perf_counter()
    try:
        with urllib.request.urlopen(req, timeout=timeout) as response:
            status = response.status
            raw = response.read()
    except urllib.error.HTTPError as err:
        status = err.code
        raw = err.read()
    latency_ms = (time.perf_counter() - started) * 1000.0
    payload = None
    if raw:
        try:
            payload = json.loads(raw.decode("utf-8"))
        except ValueError:
            payload = None
    return status, payload, latency_ms


def transcript_line(method, path, status, latency_ms, note=""):
    suffix = f" {note}" if note else ""
    return f"{method} {path} {status} {latency_ms:.1f}ms{suffix}"


def run_device(config):
    """Drive the whole flow; prints the transcript and returns the exit code."""
    base = config["base_url"]

    def fail(method, path, status, latency, payload):
        detail = ""
        if isinstance(payload, dict) and "error" in payload:
            detail = f" error={payload['error']}"
        print(transcript_line(method, path, status, latency, f"FAILED{detail}"))
        return FLOW_EXIT

    status, payload, latency = request("POST", f"{base}/login", {
        "username": config["username"],
        "password": config["password"],
        "service": config["service"],
    })
    if status != 200:
        return fail("POST", "/login", status, latency, payload)
    token = payload["token"]
    print(transcript_line("POST", "/login", status, latency))

    status, payload, latency = request("POST", f"{base}/feature",
                                       config["feature"], token)
    if status != 201:
        return fail("POST", "/feature", status, latency, payload)
    feature_id = payload["id"]
    print(transcript_line("POST", "/feature", status, latency, f"id={feature_id}"))

    feature_path = f"/feature/{feature_id}"
    decision_path = f"/{config['decider']}/decision"
    interval_s = config["send_interval_ms"] / 1000.0

    for value in config["values"]:
        status, payload, latency = request("PUT", f"{base}{feature_path}",
                                           {"data": value}, token)
        if status != 202:
            return fail("PUT", feature_path, status, latency, payload)
        print(transcript_line("PUT", feature_path, status, latency, f"value={value}"))

        time.sleep(interval_s)  # give the agents one interval to react

        status, payload, latency = request("GET", f"{base}{decision_path}")
        if status == 204:
            print(transcript_line("GET", decision_path, status, latency,
                                  "no decision yet"))
        elif status == 200:
            print(transcript_line("GET", decision_path, status, latency,
                                  f"{payload['decision']} seq={payload['seq']}"))
        else:
            return fail("GET", decision_path, status, latency, payload)

    return 0


def main(argv):
    if len(argv) != 2:
        print(__doc__.strip(), file=sys.stderr)
        return USAGE_EXIT
    try:
        config = load_config(argv[1])
    except ConfigError as exc:
        print(f"device_client: {exc}", file=sys.stderr)
        return USAGE_EXIT
    try:
        return run_device(config)
    except urllib.error.URLError as exc:
        print(f"device_client: cannot reach server: {exc.reason}", file=sys.stderr)
        return FLOW_EXIT
    except (KeyError, TypeError) as exc:
        print(f"device_client: unexpected response shape: {exc}", file=sys.stderr)
        return FLOW_EXIT


if __name__ == "__main__":
    sys.exit(main(sys.argv))
