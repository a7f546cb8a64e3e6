"""HTTP server composing the agent gateway and the object platform, plus the
background scheduler that keeps reasoning cycles running while work exists.

Route map (platform names are reserved, agents live at the root):

  POST   /login
  POST   /feature            PUT/DELETE /feature/{id}
  POST   /link
  POST   /{agent}/           PUT /{agent}/
  GET    /{agent}/decision   GET /{agent}/beliefs
  DELETE /{agent}/percepts/{predicate}
"""

from __future__ import annotations

import json
import logging
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable, Optional

from .gateway import AgentGateway, ApiError
from .iot_platform import IotPlatform
from .plans import AgentProgram
from .runtime import Runtime
from .terms import Atom, Num, Term

log = logging.getLogger("jason_rs.http")

RESERVED_NAMES = ("login", "feature", "link")


def term_to_scalar(term: Term) -> Any:
    """Best-effort JSON scalar for a term (actuation payloads)."""
    if isinstance(term, Num):
        as_int = int(term.value)
        return as_int if term.value == as_int else float(term.value)
    if isinstance(term, Atom):
        if term.name == "true":
            return True
        if term.name == "false":
            return False
        return term.name
    return str(term)


class ControlCenter:
    """Framework-free dispatcher; returns (status, payload, extra headers)."""

    def __init__(self, runtime: Runtime, gateway: AgentGateway, platform: IotPlatform):
        self.runtime = runtime
        self.gateway = gateway
        self.platform = platform

    def dispatch(
        self,
        method: str,
        path: str,
        body: Any,
        bearer: Optional[str],
    ) -> tuple[int, Any, dict]:
        segments = [s for s in path.split("/") if s]
        try:
            return self._route(method, segments, body, bearer)
        except ApiError as exc:
            return exc.status, exc.body(), {}

    def _route(self, method: str, segments: list[str], body: Any,
               bearer: Optional[str]) -> tuple[int, Any, dict]:
        if not segments:
            raise ApiError(404, "not_found", "no resource at /")

        head = segments[0]
        if head == "login":
            if len(segments) != 1 or method != "POST":
                raise ApiError(405, "method_not_allowed", "POST /login")
            status, payload = self.platform.login(body)
            return status, payload, {}

        if head == "feature":
            if len(segments) == 1:
                if method != "POST":
                    raise ApiError(405, "method_not_allowed", "POST /feature")
                return self.platform.create_feature(bearer, body)
            if len(segments) == 2:
                feature_id = self._int_segment(segments[1])
                if method == "PUT":
                    status, payload = self.platform.update_feature(bearer, feature_id, body)
                    return status, payload, {}
                if method == "DELETE":
                    status, payload = self.platform.delete_feature(bearer, feature_id)
                    return status, payload, {}
                raise ApiError(405, "method_not_allowed", "PUT or DELETE /feature/{id}")
            raise ApiError(404, "not_found", "/".join(segments))

        if head == "link":
            if len(segments) != 1 or method != "POST":
                raise ApiError(405, "method_not_allowed", "POST /link")
            status, payload = self.platform.create_link(body)
            return status, payload, {}

        # agent routes
        agent = head
        if len(segments) == 1:
            if method in ("POST", "PUT"):
                status, payload = self.gateway.post_percept(agent, body)
                return status, payload, {}
            raise ApiError(405, "method_not_allowed", "POST or PUT /{agent}/")
        if len(segments) == 2 and segments[1] == "decision" and method == "GET":
            status, payload = self.gateway.get_decision(agent)
            return status, payload, {}
        if len(segments) == 2 and segments[1] == "beliefs" and method == "GET":
            status, payload = self.gateway.get_beliefs(agent)
            return status, payload, {}
        if len(segments) == 3 and segments[1] == "percepts" and method == "DELETE":
            status, payload = self.gateway.delete_percepts(agent, segments[2])
            return status, payload, {}
        raise ApiError(404, "not_found", "/".join(segments))

    @staticmethod
    def _int_segment(text: str) -> int:
        try:
            return int(text)
        except ValueError:
            raise ApiError(404, "not_found", f"{text!r} is not a feature id") from None


class _Handler(BaseHTTPRequestHandler):
    center: ControlCenter  # set on the subclass built per server
    protocol_version = "HTTP/1.1"

    def do_GET(self) -> None:
        self._handle("GET")

    def do_POST(self) -> None:
        self._handle("POST")

    def do_PUT(self) -> None:
        self._handle("PUT")

    def do_DELETE(self) -> None:
        self._handle("DELETE")

    def _handle(self, method: str) -> None:
        started = time.perf_counter()
        status, payload, extra = self._run(method)
        data = b""
        if payload is not None:
            data = json.dumps(payload).encode("utf-8")
        try:
            self.send_response(status)
            for key, value in extra.items():
                self.send_header(key, value)
            if payload is not None:
                self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            if data:
                self.wfile.write(data)
        except (BrokenPipeError, ConnectionResetError):  # pragma: no cover
            pass
        micros = int((time.perf_counter() - started) * 1_000_000)
        log.info("%s %s %d %dus", method, self.path, status, micros)

    def _run(self, method: str) -> tuple[int, Any, dict]:
        try:
            body = self._read_body(method)
        except ApiError as exc:
            return exc.status, exc.body(), {}
        bearer = None
        auth = self.headers.get("Authorization", "")
        if auth.startswith("Bearer "):
            bearer = auth[len("Bearer "):].strip()
        try:
            return self.center.dispatch(method, self.path, body, bearer)
        except Exception:  # pragma: no cover - defensive
            log.exception("unhandled error on %s %s", method, self.path)
            return 500, {"error": "internal", "detail": "unhandled server error"}, {}

    def _read_body(self, method: str) -> Any:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if method in ("POST", "PUT"):
            content_type = (self.headers.get("Content-Type") or "").split(";")[0].strip()
            if content_type != "application/json":
                raise ApiError(400, "bad_request", "Content-Type must be application/json")
            if not raw:
                raise ApiError(400, "bad_request", "empty body")
        if not raw:
            return None
        try:
            return json.loads(raw.decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            raise ApiError(400, "bad_request", "body is not valid JSON") from None

    def log_message(self, fmt: str, *args: Any) -> None:
        # one structured line per request is emitted in _handle instead
        pass


class ControlCenterServer:
    """Threaded HTTP server around a ControlCenter dispatcher."""

    def __init__(self, center: ControlCenter, host: str = "127.0.0.1", port: int = 0):
        handler = type("BoundHandler", (_Handler,), {"center": center})
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self.httpd.daemon_threads = True
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> tuple[str, int]:
        host, port = self.httpd.server_address[:2]
        return str(host), int(port)

    @property
    def base_url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self) -> "ControlCenterServer":
        self._thread = threading.Thread(target=self.httpd.serve_forever,
                                        name="jason-rs-http", daemon=True)
        self._thread.start()
        log.info("listening on %s", self.base_url)
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


class CycleScheduler(threading.Thread):
    """Drives reasoning cycles in the background: busy agents are cycled
    continuously, otherwise the thread naps until new work arrives."""

    def __init__(self, runtime: Runtime, idle_wait_s: float = 0.05):
        super().__init__(name="jason-rs-scheduler", daemon=True)
        self.runtime = runtime
        self.idle_wait_s = idle_wait_s
        self._stop_flag = threading.Event()

    def run(self) -> None:
        while not self._stop_flag.is_set():
            if self.runtime.cycle_busy_agents() == 0:
                with self.runtime.work_available:
                    if not self.runtime.has_work():
                        self.runtime.work_available.wait(self.idle_wait_s)

    def stop(self) -> None:
        self._stop_flag.set()
        with self.runtime.work_available:
            self.runtime.work_available.notify_all()
        self.join(timeout=5)


class AppStack:
    """Everything one deployment needs, wired: runtime, gateway, platform,
    dispatcher, and optionally an HTTP server plus scheduler."""

    def __init__(
        self,
        programs: dict[str, AgentProgram],
        accounts: dict[str, tuple[str, str]] | None = None,
        clock: Callable[[], int] | None = None,
        session_ttl_s: float = 3600.0,
    ):
        self.runtime = Runtime(clock=clock)
        self.gateway = AgentGateway(self.runtime)
        self.platform = IotPlatform(self.gateway, accounts or {}, session_ttl_s=session_ttl_s)
        self.center = ControlCenter(self.runtime, self.gateway, self.platform)
        self.runtime.register_external_action("actuate", self._actuate)
        for name, program in programs.items():
            if name in RESERVED_NAMES:
                raise ValueError(f"agent name {name!r} collides with a platform route")
            self.runtime.create_agent(name, program)
        self.server: Optional[ControlCenterServer] = None
        self.scheduler: Optional[CycleScheduler] = None

    def _actuate(self, agent: str, args: tuple[Term, ...]) -> None:
        """actuate(FeatureId, Value): agents drive object state directly."""
        if len(args) != 2 or not isinstance(args[0], Num):
            log.warning("%s: actuate expects (feature id, value), got %s", agent, args)
            return
        feature = self.platform.get_feature(int(args[0].value))
        if feature is None:
            log.warning("%s: actuate on unknown feature %s", agent, args[0])
            return
        feature.state = term_to_scalar(args[1])
        log.info("%s actuated feature %d to %r", agent, feature.id, feature.state)

    def start_http(self, host: str = "127.0.0.1", port: int = 0) -> ControlCenterServer:
        self.scheduler = CycleScheduler(self.runtime)
        self.scheduler.start()
        self.server = ControlCenterServer(self.center, host, port).start()
        return self.server

    def shutdown(self) -> None:
        if self.server is not None:
            self.server.stop()
            self.server = None
        if self.scheduler is not None:
            self.scheduler.stop()
            self.scheduler = None


def parse_listen(value: str) -> tuple[str, int]:
    """'host:port', ':port' or 'port' -> (host, port)."""
    text = value.strip()
    if ":" in text:
        host, _, port = text.rpartition(":")
        host = host or "127.0.0.1"
    else:
        host, port = "127.0.0.1", text
    try:
        return host, int(port)
    except ValueError:
        raise ValueError(f"cannot parse listen address {value!r}") from None
