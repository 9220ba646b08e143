"""Bearer tokens and the users file.

Tokens are compact HMAC-SHA256 structures (base64url payload, dot,
base64url signature) carrying subject, roles and expiry; verification
is constant-time and a failed check yields the anonymous principal
rather than an exception, so route guards stay uniform.

Users live in a JSON file mapping username to a PBKDF2-HMAC-SHA256
password record plus role list. Roles are ordered reader < curator <
admin; holding a role implies every weaker one.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError

ROLES = ("reader", "curator", "admin")
_ROLE_RANK = {role: i for i, role in enumerate(ROLES)}

PBKDF2_ITERATIONS = 60_000


@dataclass(frozen=True)
class Principal:
    """The authenticated caller of one request."""

    subject: str
    roles: frozenset[str] = frozenset()

    @property
    def anonymous(self) -> bool:
        return not self.roles

    def has_role(self, role: str) -> bool:
        """Role check with monotonicity: admin implies curator implies reader."""
        needed = _ROLE_RANK[role]
        return any(_ROLE_RANK.get(r, -1) >= needed for r in self.roles)


ANONYMOUS = Principal(subject="", roles=frozenset())


def _b64encode(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def _b64decode(text: str) -> bytes:
    padding = "=" * (-len(text) % 4)
    return base64.urlsafe_b64decode(text + padding)


def issue_token(secret: str, subject: str, roles: list[str] | tuple[str, ...],
                ttl_seconds: int, now: float | None = None) -> str:
    """Mint a bearer token. Roles outside the known set are rejected."""
    if not secret:
        raise ValueError("token secret must be configured and non-empty")
    for role in roles:
        if role not in _ROLE_RANK:
            raise ValueError(f"unknown role {role!r}")
    now = time.time() if now is None else now
    payload = {
        "sub": subject,
        "roles": sorted(set(roles)),
        "exp": int(now) + int(ttl_seconds),
    }
    body = _b64encode(json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8"))
    sig = hmac.new(secret.encode("utf-8"), body.encode("ascii"), hashlib.sha256).digest()
    return f"{body}.{_b64encode(sig)}"


def verify_token(secret: str, token: str, now: float | None = None) -> Principal:
    """Validate a token; tampering, expiry or malformation yields ANONYMOUS."""
    if not secret or not token or token.count(".") != 1:
        return ANONYMOUS
    body, sig_text = token.split(".", 1)
    try:
        expected = hmac.new(secret.encode("utf-8"), body.encode("ascii"), hashlib.sha256).digest()
        if not hmac.compare_digest(expected, _b64decode(sig_text)):
            return ANONYMOUS
        payload = json.loads(_b64decode(body))
    except (ValueError, UnicodeDecodeError):
        return ANONYMOUS
    if not isinstance(payload, dict):
        return ANONYMOUS
    now = time.time() if now is None else now
    if not isinstance(payload.get("exp"), int) or payload["exp"] < now:
        return ANONYMOUS
    roles = payload.get("roles")
    if not isinstance(roles, list) or not roles:
        return ANONYMOUS
    if any(role not in _ROLE_RANK for role in roles):
        return ANONYMOUS
    return Principal(subject=str(payload.get("sub", "")), roles=frozenset(roles))


# ---------------------------------------------------------------------------
# Users file
# ---------------------------------------------------------------------------

def hash_password(password: str, salt: bytes | None = None) -> str:
    """PBKDF2 record: pbkdf2_sha256$iterations$salt_hex$hash_hex."""
    salt = os.urandom(16) if salt is None else salt
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, PBKDF2_ITERATIONS)
    return f"pbkdf2_sha256${PBKDF2_ITERATIONS}${salt.hex()}${digest.hex()}"


def check_password(password: str, record: str) -> bool:
    try:
        scheme, iterations_text, salt_hex, hash_hex = record.split("$")
        if scheme != "pbkdf2_sha256":
            return False
        digest = hashlib.pbkdf2_hmac(
            "sha256", password.encode("utf-8"), bytes.fromhex(salt_hex), int(iterations_text)
        )
        return hmac.compare_digest(digest.hex(), hash_hex)
    except (ValueError, TypeError):
        return False


def load_users(path: str | Path) -> dict[str, dict]:
    try:
        data = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"users file is not valid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ParseError("users file must be a JSON object keyed by username")
    for name, record in data.items():
        if not isinstance(record, dict) or "password" not in record or "roles" not in record:
            raise ParseError(f"user {name!r} needs password and roles fields")
        if any(role not in _ROLE_RANK for role in record["roles"]):
            raise ParseError(f"user {name!r} has an unknown role")
    return data


def write_users_file(path: str | Path, users: dict[str, tuple[str, list[str]]]) -> None:
    """Create a users file from {username: (plain_password, roles)}."""
    doc = {
        name: {"password": hash_password(password), "roles": sorted(set(roles))}
        for name, (password, roles) in users.items()
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", "utf-8")


def authenticate(users: dict[str, dict], username: str, password: str) -> list[str] | None:
    """Roles of the user when the password checks out, else None."""
    record = users.get(username)
    if record is None:
        # Burn comparable time so missing users are not distinguishable.
        check_password(password, hash_password("no-such-user"))
        return None
    if not check_password(password, record["password"]):
        return None
    return sorted(record["roles"])
