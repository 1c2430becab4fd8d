"""HTTP+JSON front for the authentication service.

Auth failures all map to a generic 401 with no detail beyond the decision
outcome, so the API leaks no oracle about which factor failed. Static routes
serve the demo pages of the browser-side collector.
"""

from __future__ import annotations

import json
import mimetypes
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

from .model import json_to_value, load_schema
from .service import (
    AuthService,
    ConflictError,
    NotFoundError,
    OUTCOME_ACCEPTED,
    OUTCOME_LOCKED,
    OUTCOME_RECOVERY_REQUIRED,
    ProofError,
    ServiceConfig,
    ScryptParams,
)
from .verify import MatchingConfig

MAX_BODY_BYTES = 2_000_000


def load_service_config(path: str | None = None, env: dict | None = None) -> tuple[ServiceConfig, str, int, str | None]:
    """Build a service configuration from a JSON file with environment
    overrides (FPKIT_BIND, FPKIT_PORT, FPKIT_THETA, FPKIT_MODE,
    FPKIT_LOCKOUT, FPKIT_PROVISION, FPKIT_STORE, FPKIT_STATIC)."""
    env = env if env is not None else dict(os.environ)
    raw: dict[str, Any] = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)

    schema = load_schema(raw["schema"]) if "schema" in raw else None
    if schema is None:
        raise ValueError("service config requires a schema path")
    if "matching" in raw:
        matching = MatchingConfig.load(raw["matching"])
    else:
        matching = MatchingConfig.identical_only(schema)

    bind = env.get("FPKIT_BIND", raw.get("bind", "127.0.0.1"))
    port = int(env.get("FPKIT_PORT", raw.get("port", 8300)))
    theta = int(env.get("FPKIT_THETA", raw.get("theta", matching.global_theta)))
    mode = env.get("FPKIT_MODE", raw.get("mode", "simple"))
    lockout = int(env.get("FPKIT_LOCKOUT", raw.get("lockout_limit", 16)))
    provision = int(env.get("FPKIT_PROVISION", raw.get("provision_count", 8)))
    store = env.get("FPKIT_STORE", raw.get("store"))
    static = env.get("FPKIT_STATIC", raw.get("static"))
    scrypt_cfg = raw.get("scrypt", {})
    config = ServiceConfig(
        schema=tuple(schema),
        matching=matching,
        theta=theta,
        mode=mode,
        lockout_limit=lockout,
        provision_count=provision,
        store_path=store,
        scrypt=ScryptParams(
            n=int(scrypt_cfg.get("n", 2**14)),
            r=int(scrypt_cfg.get("r", 8)),
            p=int(scrypt_cfg.get("p", 1)),
        ),
    )
    return config, bind, port, static


def _decode_fingerprint(raw: dict) -> dict:
    return {k: json_to_value(v) for k, v in raw.items()}


class ApiHandler(BaseHTTPRequestHandler):
    service: AuthService = None  # set by make_server
    static_dir: str | None = None

    def log_message(self, format: str, *args) -> None:  # silence default stderr log
        pass

    # -- helpers ---------------------------------------------------------

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict | None:
        length = int(self.headers.get("Content-Length", 0))
        if length <= 0 or length > MAX_BODY_BYTES:
            return None
        try:
            return json.loads(self.rfile.read(length))
        except (json.JSONDecodeError, UnicodeDecodeError):
            return None

    # -- routing ---------------------------------------------------------

    def do_GET(self) -> None:
        if self.path == "/api/health":
            self._send_json(200, {"status": "ok"})
            return
        self._serve_static()

    def do_POST(self) -> None:
        routes = {
            "/api/enroll": self._handle_enroll,
            "/api/challenge": self._handle_challenge,
            "/api/authenticate": self._handle_authenticate,
            "/api/browser/register": self._handle_register,
            "/api/recover": self._handle_recover,
        }
        handler = routes.get(self.path)
        if handler is None:
            self._send_json(404, {"error": "not-found"})
            return
        body = self._read_json()
        if body is None:
            self._send_json(400, {"error": "malformed-request"})
            return
        try:
            handler(body)
        except (KeyError, TypeError, ValueError) as exc:
            self._send_json(400, {"error": "invalid-request", "detail": str(exc)})

    # -- endpoints -------------------------------------------------------

    def _handle_enroll(self, body: dict) -> None:
        try:
            record, secrets_out = self.service.enroll(
                account_id=str(body["account_id"]),
                password=str(body["password"]),
                fingerprint=_decode_fingerprint(body["fingerprint"]),
                challenge_responses=body.get("challenge_responses", ()),
            )
        except ConflictError:
            self._send_json(409, {"error": "account-exists"})
            return
        self._send_json(
            201,
            {
                "account_id": record.account_id,
                "browser_id": secrets_out.browser_id,
                "registration_codes": list(secrets_out.registration_codes),
                "recovery_code": secrets_out.recovery_code,
                "challenges_provisioned": len(record.browsers[0].challenges),
            },
        )

    def _handle_challenge(self, body: dict) -> None:
        try:
            issued = self.service.issue_challenge(
                account_id=str(body["account_id"]),
                browser_id=body.get("browser_id"),
            )
        except NotFoundError:
            self._send_json(401, {"error": "authentication-failed"})
            return
        if issued.outcome == OUTCOME_RECOVERY_REQUIRED:
            self._send_json(200, {"outcome": OUTCOME_RECOVERY_REQUIRED})
            return
        self._send_json(
            200,
            {
                "outcome": "ok",
                "browser_id": issued.browser_id,
                "challenge_id": issued.challenge_id,
                "seed": issued.seed,
            },
        )

    def _handle_authenticate(self, body: dict) -> None:
        decision = self.service.authenticate(
            account_id=str(body["account_id"]),
            password=str(body["password"]),
            fingerprint=_decode_fingerprint(body["fingerprint"]),
            challenge_id=body.get("challenge_id"),
            response_hash=body.get("response_hash"),
            replenish=body.get("replenish", ()),
        )
        payload = decision.to_json()
        if decision.outcome == OUTCOME_ACCEPTED:
            self._send_json(200, payload)
        elif decision.outcome == OUTCOME_RECOVERY_REQUIRED:
            self._send_json(200, payload)
        elif decision.outcome == OUTCOME_LOCKED:
            self._send_json(423, payload)
        else:
            self._send_json(401, {"outcome": decision.outcome})

    def _handle_register(self, body: dict) -> None:
        try:
            record, browser_id = self.service.register_browser(
                account_id=str(body["account_id"]),
                registration_code=str(body["code"]),
                fingerprint=_decode_fingerprint(body["fingerprint"]),
                challenge_responses=body.get("challenge_responses", ()),
            )
        except ProofError:
            self._send_json(401, {"error": "authentication-failed"})
            return
        self._send_json(
            200, {"browser_id": browser_id, "browsers": len(record.browsers)}
        )

    def _handle_recover(self, body: dict) -> None:
        try:
            self.service.recover(
                account_id=str(body["account_id"]),
                recovery_code=str(body["recovery_code"]),
                browser_id=str(body["browser_id"]),
                new_fingerprint=_decode_fingerprint(body["fingerprint"]),
                challenge_responses=body.get("challenge_responses", ()),
            )
        except ProofError:
            self._send_json(401, {"error": "authentication-failed"})
            return
        except NotFoundError:
            self._send_json(404, {"error": "unknown-browser"})
            return
        self._send_json(200, {"outcome": "recovered"})

    # -- static files ----------------------------------------------------

    def _serve_static(self) -> None:
        if self.static_dir is None:
            self._send_json(404, {"error": "not-found"})
            return
        path = self.path.split("?", 1)[0]
        if path == "/":
            path = "/index.html"
        root = os.path.realpath(self.static_dir)
        target = os.path.realpath(os.path.join(root, path.lstrip("/")))
        if not target.startswith(root + os.sep) and target != root:
            self._send_json(404, {"error": "not-found"})
            return
        if not os.path.isfile(target):
            self._send_json(404, {"error": "not-found"})
            return
        content_type = mimetypes.guess_type(target)[0] or "application/octet-stream"
        with open(target, "rb") as fh:
            data = fh.read()
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def make_server(
    service: AuthService,
    bind: str = "127.0.0.1",
    port: int = 0,
    static_dir: str | None = None,
) -> ThreadingHTTPServer:
    handler = type(
        "BoundApiHandler", (ApiHandler,), {"service": service, "static_dir": static_dir}
    )
    return ThreadingHTTPServer((bind, port), handler)


def serve_forever(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
