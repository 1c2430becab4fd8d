"""Fingerprint-backed multi-factor authentication service.

Accounts hold a password verifier, the stored fingerprints of registered
browsers, and a per-browser ledger of pre-provisioned challenge responses.
Authentication checks the password, verifies the presented fingerprint
against the registered browsers, and consumes a single-use challenge whose
response only the genuine browser can render. State lives in an embedded
single-writer key-value store with a write-ahead log.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .model import (
    AttributeDescriptor,
    AttributeValue,
    json_to_value,
    value_to_json,
)
from .preprocess import classify_environment
from .verify import MatchingConfig, verification_count

OUTCOME_ACCEPTED = "accepted"
OUTCOME_REJECTED = "rejected"
OUTCOME_LOCKED = "locked"
OUTCOME_RECOVERY_REQUIRED = "recovery-required"

CHALLENGE_UNUSED = "unused"
CHALLENGE_PENDING = "pending"
CHALLENGE_USED = "used"


class ConflictError(Exception):
    """Account identifier already enrolled."""


class NotFoundError(Exception):
    """Referenced account or browser does not exist."""


class ProofError(Exception):
    """Strong-factor or recovery proof rejected."""


# ---------------------------------------------------------------------------
# Persistence


class JsonWalStore:
    """Single-writer key-value store: an in-memory dict backed by an
    append-only JSON log, replayed on open and compacted on demand."""

    def __init__(self, path: str | None = None):
        self._path = path
        self._data: dict[str, dict] = {}
        self._lock = threading.Lock()
        self._fh = None
        if path is not None:
            if os.path.exists(path):
                with open(path, "r", encoding="utf-8") as fh:
                    for line in fh:
                        line = line.strip()
                        if not line:
                            continue
                        record = json.loads(line)
                        if record.get("value") is None:
                            self._data.pop(record["key"], None)
                        else:
                            self._data[record["key"]] = record["value"]
            self._fh = open(path, "a", encoding="utf-8")

    def get(self, key: str) -> dict | None:
        with self._lock:
            value = self._data.get(key)
            return json.loads(json.dumps(value)) if value is not None else None

    def put(self, key: str, value: dict) -> None:
        payload = json.loads(json.dumps(value))
        with self._lock:
            if self._fh is not None:
                self._fh.write(json.dumps({"key": key, "value": payload}) + "\n")
                self._fh.flush()
                os.fsync(self._fh.fileno())
            self._data[key] = payload

    def keys(self) -> list[str]:
        with self._lock:
            return sorted(self._data)

    def compact(self) -> None:
        if self._path is None:
            return
        with self._lock:
            tmp = self._path + ".tmp"
            with open(tmp, "w", encoding="utf-8") as fh:
                for key in sorted(self._data):
                    fh.write(json.dumps({"key": key, "value": self._data[key]}) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._fh.close()
            os.replace(tmp, self._path)
            self._fh = open(self._path, "a", encoding="utf-8")

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None


# ---------------------------------------------------------------------------
# Password hashing (salted, memory-hard)


@dataclass(frozen=True)
class ScryptParams:
    n: int = 2**14
    r: int = 8
    p: int = 1
    dklen: int = 32


def hash_password(password: str, params: ScryptParams) -> dict:
    salt = secrets.token_bytes(16)
    digest = hashlib.scrypt(
        password.encode("utf-8"),
        salt=salt,
        n=params.n,
        r=params.r,
        p=params.p,
        dklen=params.dklen,
    )
    return {
        "salt": salt.hex(),
        "hash": digest.hex(),
        "n": params.n,
        "r": params.r,
        "p": params.p,
        "dklen": params.dklen,
    }


def check_password(password: str, verifier: Mapping[str, Any]) -> bool:
    digest = hashlib.scrypt(
        password.encode("utf-8"),
        salt=bytes.fromhex(verifier["salt"]),
        n=verifier["n"],
        r=verifier["r"],
        p=verifier["p"],
        dklen=verifier["dklen"],
    )
    return hmac.compare_digest(digest.hex(), verifier["hash"])


def _hash_code(code: str) -> str:
    return hashlib.sha256(code.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Domain records


@dataclass
class Challenge:
    challenge_id: str
    seed: str
    expected_response_hash: str
    state: str = CHALLENGE_UNUSED

    def to_json(self) -> dict:
        return {
            "challenge_id": self.challenge_id,
            "seed": self.seed,
            "expected_response_hash": self.expected_response_hash,
            "state": self.state,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "Challenge":
        return cls(
            challenge_id=raw["challenge_id"],
            seed=raw["seed"],
            expected_response_hash=raw["expected_response_hash"],
            state=raw["state"],
        )


@dataclass
class RegisteredBrowser:
    browser_id: str
    fingerprint: dict[str, AttributeValue]
    last_update_ts: int
    challenges: list[Challenge] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "browser_id": self.browser_id,
            "fingerprint": {k: value_to_json(v) for k, v in self.fingerprint.items()},
            "last_update_ts": self.last_update_ts,
            "challenges": [c.to_json() for c in self.challenges],
        }

    @classmethod
    def from_json(cls, raw: dict) -> "RegisteredBrowser":
        return cls(
            browser_id=raw["browser_id"],
            fingerprint={k: json_to_value(v) for k, v in raw["fingerprint"].items()},
            last_update_ts=raw["last_update_ts"],
            challenges=[Challenge.from_json(c) for c in raw["challenges"]],
        )


@dataclass
class AccountRecord:
    account_id: str
    password_verifier: dict
    browsers: list[RegisteredBrowser] = field(default_factory=list)
    registration_code_hashes: list[str] = field(default_factory=list)
    recovery_code_hash: str = ""
    failed_attempts: int = 0
    locked: bool = False
    version: int = 0

    def browser(self, browser_id: str) -> RegisteredBrowser | None:
        for b in self.browsers:
            if b.browser_id == browser_id:
                return b
        return None

    def to_json(self) -> dict:
        return {
            "account_id": self.account_id,
            "password_verifier": self.password_verifier,
            "browsers": [b.to_json() for b in self.browsers],
            "registration_code_hashes": self.registration_code_hashes,
            "recovery_code_hash": self.recovery_code_hash,
            "failed_attempts": self.failed_attempts,
            "locked": self.locked,
            "version": self.version,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "AccountRecord":
        return cls(
            account_id=raw["account_id"],
            password_verifier=raw["password_verifier"],
            browsers=[RegisteredBrowser.from_json(b) for b in raw["browsers"]],
            registration_code_hashes=list(raw["registration_code_hashes"]),
            recovery_code_hash=raw["recovery_code_hash"],
            failed_attempts=raw["failed_attempts"],
            locked=raw["locked"],
            version=raw["version"],
        )


@dataclass(frozen=True)
class AuthDecision:
    outcome: str
    matched_browser_id: str | None = None
    match_count: int = 0

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome,
            "matched_browser_id": self.matched_browser_id,
            "match_count": self.match_count,
        }


@dataclass(frozen=True)
class EnrollmentSecrets:
    """One-time material returned at enrollment: codes proving the strong
    factor for browser registration and account recovery."""

    browser_id: str
    registration_codes: tuple[str, ...]
    recovery_code: str


@dataclass(frozen=True)
class IssuedChallenge:
    outcome: str  # "ok" | recovery-required
    browser_id: str | None = None
    challenge_id: str | None = None
    seed: str | None = None


@dataclass(frozen=True)
class ServiceConfig:
    schema: tuple[AttributeDescriptor, ...]
    matching: MatchingConfig
    theta: int
    mode: str = "simple"
    lockout_limit: int = 16
    provision_count: int = 8
    registration_code_count: int = 4
    store_path: str | None = None
    ua_attribute: str = "userAgent"
    ua_routing: bool = True
    scrypt: ScryptParams = ScryptParams()


class AuthService:
    """Enrollment, authentication, browser registration, recovery, and
    challenge issuance over the account store.

    Mutations to one account are serialized behind a per-account lock; the
    fingerprint verdict itself is computed outside the lock on a snapshot
    and committed only if the record did not change underneath.
    """

    def __init__(self, config: ServiceConfig, clock=None):
        self.config = config
        self.store = JsonWalStore(config.store_path)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._clock = clock or (lambda: int(time.time() * 1000))

    # -- plumbing --------------------------------------------------------

    def _lock_for(self, account_id: str) -> threading.Lock:
        with self._locks_guard:
            lock = self._locks.get(account_id)
            if lock is None:
                lock = threading.Lock()
                self._locks[account_id] = lock
            return lock

    def _load(self, account_id: str) -> AccountRecord | None:
        raw = self.store.get(f"account:{account_id}")
        return AccountRecord.from_json(raw) if raw is not None else None

    def _save(self, record: AccountRecord) -> None:
        record.version += 1
        self.store.put(f"account:{record.account_id}", record.to_json())

    def _check_fingerprint(self, fingerprint: Mapping[str, AttributeValue]) -> None:
        names = {d.name for d in self.config.schema}
        if set(fingerprint.keys()) != names:
            raise ValueError("fingerprint does not cover the schema")

    def _validate_responses(
        self,
        responses: Sequence[Mapping[str, str]],
        existing: Sequence[Challenge] = (),
    ) -> list[Challenge]:
        seen = {c.seed for c in existing}
        out = []
        for item in responses:
            seed = str(item["seed"])
            response_hash = str(item["response_hash"])
            if not seed or len(seed) > 128:
                raise ValueError("invalid challenge seed")
            if seed in seen:
                raise ValueError("challenge seed already provisioned")
            seen.add(seed)
            out.append(
                Challenge(
                    challenge_id=secrets.token_hex(8),
                    seed=seed,
                    expected_response_hash=response_hash,
                )
            )
        return out

    # -- operations ------------------------------------------------------

    def enroll(
        self,
        account_id: str,
        password: str,
        fingerprint: Mapping[str, AttributeValue],
        challenge_responses: Sequence[Mapping[str, str]] = (),
    ) -> tuple[AccountRecord, EnrollmentSecrets]:
        self._check_fingerprint(fingerprint)
        with self._lock_for(account_id):
            if self._load(account_id) is not None:
                raise ConflictError(f"account {account_id!r} already exists")
            browser_id = secrets.token_hex(8)
            registration_codes = tuple(
                secrets.token_hex(8) for _ in range(self.config.registration_code_count)
            )
            recovery_code = secrets.token_hex(8)
            record = AccountRecord(
                account_id=account_id,
                password_verifier=hash_password(password, self.config.scrypt),
                browsers=[
                    RegisteredBrowser(
                        browser_id=browser_id,
                        fingerprint=dict(fingerprint),
                        last_update_ts=self._clock(),
                        challenges=self._validate_responses(challenge_responses),
                    )
                ],
                registration_code_hashes=[_hash_code(c) for c in registration_codes],
                recovery_code_hash=_hash_code(recovery_code),
            )
            self._save(record)
        return record, EnrollmentSecrets(
            browser_id=browser_id,
            registration_codes=registration_codes,
            recovery_code=recovery_code,
        )

    def issue_challenge(
        self, account_id: str, browser_id: str | None = None
    ) -> IssuedChallenge:
        """Hand out the next challenge seed for a browser.

        A pending challenge is returned again rather than burning a fresh
        seed; a depleted ledger signals that recovery (re-provisioning) is
        required.
        """
        with self._lock_for(account_id):
            record = self._load(account_id)
            if record is None:
                raise NotFoundError("unknown account")
            browser = (
                record.browser(browser_id)
                if browser_id is not None
                else max(record.browsers, key=lambda b: b.last_update_ts, default=None)
            )
            if browser is None:
                raise NotFoundError("unknown browser")
            pending = [c for c in browser.challenges if c.state == CHALLENGE_PENDING]
            if pending:
                chosen = pending[0]
            else:
                unused = [c for c in browser.challenges if c.state == CHALLENGE_UNUSED]
                if not unused:
                    return IssuedChallenge(outcome=OUTCOME_RECOVERY_REQUIRED)
                chosen = unused[0]
                chosen.state = CHALLENGE_PENDING
                self._save(record)
            return IssuedChallenge(
                outcome="ok",
                browser_id=browser.browser_id,
                challenge_id=chosen.challenge_id,
                seed=chosen.seed,
            )

    def _candidate_browsers(
        self, record: AccountRecord, fingerprint: Mapping[str, AttributeValue]
    ) -> list[RegisteredBrowser]:
        if not self.config.ua_routing:
            return list(record.browsers)
        ua = fingerprint.get(self.config.ua_attribute)
        if not isinstance(ua, str):
            return list(record.browsers)
        family = classify_environment(ua).browser_family
        routed = [
            b
            for b in record.browsers
            if isinstance(b.fingerprint.get(self.config.ua_attribute), str)
            and classify_environment(b.fingerprint[self.config.ua_attribute]).browser_family
            == family
        ]
        return routed or list(record.browsers)

    def authenticate(
        self,
        account_id: str,
        password: str,
        fingerprint: Mapping[str, AttributeValue],
        challenge_id: str | None = None,
        response_hash: str | None = None,
        replenish: Sequence[Mapping[str, str]] = (),
    ) -> AuthDecision:
        self._check_fingerprint(fingerprint)
        lock = self._lock_for(account_id)
        for _ in range(4):
            with lock:
                record = self._load(account_id)
                if record is None:
                    return AuthDecision(outcome=OUTCOME_REJECTED)
                if record.locked:
                    return AuthDecision(outcome=OUTCOME_LOCKED)
                version = record.version

            # Pure verdict computation, outside the account lock.
            password_ok = check_password(password, record.password_verifier)
            best = self._best_match(record, fingerprint) if password_ok else None

            with lock:
                current = self._load(account_id)
                if current is None:
                    return AuthDecision(outcome=OUTCOME_REJECTED)
                if current.version != version:
                    continue  # record changed underneath; recompute
                return self._commit_decision(
                    current,
                    password_ok,
                    best[0].browser_id if best is not None else None,
                    best[1] if best is not None else 0,
                    challenge_id,
                    response_hash,
                    replenish,
                    fingerprint,
                )
        with lock:
            record = self._load(account_id)
            if record is None:
                return AuthDecision(outcome=OUTCOME_REJECTED)
            if record.locked:
                return AuthDecision(outcome=OUTCOME_LOCKED)
            password_ok = check_password(password, record.password_verifier)
            best = self._best_match(record, fingerprint) if password_ok else None
            return self._commit_decision(
                record,
                password_ok,
                best[0].browser_id if best is not None else None,
                best[1] if best is not None else 0,
                challenge_id,
                response_hash,
                replenish,
                fingerprint,
            )

    def _best_match(
        self, record: AccountRecord, fingerprint: Mapping[str, AttributeValue]
    ) -> tuple[RegisteredBrowser, int] | None:
        """Highest-counting registered browser; ties go to the most recently
        updated one."""
        best: RegisteredBrowser | None = None
        best_count = 0
        for browser in self._candidate_browsers(record, fingerprint):
            count = verification_count(
                browser.fingerprint, fingerprint, self.config.matching, self.config.mode
            )
            if (
                best is None
                or count > best_count
                or (count == best_count and browser.last_update_ts > best.last_update_ts)
            ):
                best, best_count = browser, count
        return (best, best_count) if best is not None else None

    def _commit_decision(
        self,
        record: AccountRecord,
        password_ok: bool,
        matched_browser_id: str | None,
        match_count: int,
        challenge_id: str | None,
        response_hash: str | None,
        replenish: Sequence[Mapping[str, str]],
        fingerprint: Mapping[str, AttributeValue],
    ) -> AuthDecision:
        # Called with the account lock held and the record freshly loaded.
        browser = record.browser(matched_browser_id) if matched_browser_id else None
        static_ok = (
            password_ok and browser is not None and match_count >= self.config.theta
        )
        if not static_ok:
            return self._register_failure(record)

        ledger_alive = any(
            c.state in (CHALLENGE_UNUSED, CHALLENGE_PENDING) for c in browser.challenges
        )
        if not ledger_alive:
            # Depleted ledger: static verification only, recovery enforced.
            return AuthDecision(
                outcome=OUTCOME_RECOVERY_REQUIRED,
                matched_browser_id=browser.browser_id,
                match_count=match_count,
            )

        challenge = None
        if challenge_id is not None:
            for c in browser.challenges:
                if c.challenge_id == challenge_id:
                    challenge = c
                    break
        if (
            challenge is None
            or challenge.state == CHALLENGE_USED
            or response_hash is None
            or not hmac.compare_digest(
                challenge.expected_response_hash, str(response_hash)
            )
        ):
            return self._register_failure(record)

        # Accepted: rotate the challenge, refresh the stored fingerprint.
        challenge.state = CHALLENGE_USED
        browser.fingerprint = dict(fingerprint)
        browser.last_update_ts = self._clock()
        if replenish:
            browser.challenges.extend(
                self._validate_responses(replenish, browser.challenges)
            )
        record.failed_attempts = 0
        self._save(record)
        return AuthDecision(
            outcome=OUTCOME_ACCEPTED,
            matched_browser_id=browser.browser_id,
            match_count=match_count,
        )

    def _register_failure(self, record: AccountRecord) -> AuthDecision:
        record.failed_attempts += 1
        if record.failed_attempts >= self.config.lockout_limit:
            record.locked = True
        self._save(record)
        return AuthDecision(
            outcome=OUTCOME_LOCKED if record.locked else OUTCOME_REJECTED
        )

    def register_browser(
        self,
        account_id: str,
        registration_code: str,
        fingerprint: Mapping[str, AttributeValue],
        challenge_responses: Sequence[Mapping[str, str]] = (),
    ) -> tuple[AccountRecord, str]:
        self._check_fingerprint(fingerprint)
        code_hash = _hash_code(registration_code)
        with self._lock_for(account_id):
            record = self._load(account_id)
            if record is None:
                raise ProofError("registration rejected")
            if code_hash not in record.registration_code_hashes:
                raise ProofError("registration rejected")
            record.registration_code_hashes.remove(code_hash)
            browser_id = secrets.token_hex(8)
            record.browsers.append(
                RegisteredBrowser(
                    browser_id=browser_id,
                    fingerprint=dict(fingerprint),
                    last_update_ts=self._clock(),
                    challenges=self._validate_responses(challenge_responses),
                )
            )
            self._save(record)
            return record, browser_id

    def recover(
        self,
        account_id: str,
        recovery_code: str,
        browser_id: str,
        new_fingerprint: Mapping[str, AttributeValue],
        challenge_responses: Sequence[Mapping[str, str]] = (),
    ) -> AccountRecord:
        """Replace a registered browser's fingerprint after out-of-band
        proof; clears the lock and the failure counter."""
        self._check_fingerprint(new_fingerprint)
        with self._lock_for(account_id):
            record = self._load(account_id)
            if record is None:
                raise ProofError("recovery rejected")
            if not hmac.compare_digest(
                record.recovery_code_hash, _hash_code(recovery_code)
            ):
                raise ProofError("recovery rejected")
            browser = record.browser(browser_id)
            if browser is None:
                raise NotFoundError("unknown browser")
            browser.fingerprint = dict(new_fingerprint)
            browser.last_update_ts = self._clock()
            if challenge_responses:
                browser.challenges = self._validate_responses(challenge_responses)
            record.failed_attempts = 0
            record.locked = False
            self._save(record)
            return record
