"""Runtime configuration from a key=value file plus environment overrides.

Precedence: environment variable, then config file, then built-in
default. The file format is deliberately plain: one ``key = value`` per
line, ``#`` comments, unknown keys rejected so typos fail loudly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ParseError

_FILE_KEYS = {
    "data_dir": "data_dir",
    "listen_addr": "listen_addr",
    "token_secret": "token_secret",
    "token_ttl_seconds": "token_ttl_seconds",
    "users_file": "users_file",
    "portal.mode": "portal_mode",
    "portal.endpoint": "portal_endpoint",
    "portal.api_key": "portal_api_key",
    "portal.fixture_path": "portal_fixture_path",
}

_ENV_KEYS = {
    "MDR_DATA_DIR": "data_dir",
    "MDR_LISTEN_ADDR": "listen_addr",
    "MDR_TOKEN_SECRET": "token_secret",
    "MDR_TOKEN_TTL_SECONDS": "token_ttl_seconds",
    "MDR_USERS_FILE": "users_file",
    "MDR_PORTAL_MODE": "portal_mode",
    "MDR_PORTAL_ENDPOINT": "portal_endpoint",
    "MDR_PORTAL_API_KEY": "portal_api_key",
    "MDR_PORTAL_FIXTURE_PATH": "portal_fixture_path",
}


@dataclass
class Config:
    data_dir: str = "./mdr-data"
    listen_addr: str = "127.0.0.1:8402"
    token_secret: str = ""
    token_ttl_seconds: int = 8 * 3600
    users_file: str = ""
    portal_mode: str = "off"
    portal_endpoint: str = ""
    portal_api_key: str = ""
    portal_fixture_path: str = ""

    @property
    def host(self) -> str:
        return self.listen_addr.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        addr = self.listen_addr
        try:
            return int(addr.rsplit(":", 1)[1])
        except (IndexError, ValueError):
            raise ParseError(f"listen_addr {addr!r} must look like host:port") from None


def _parse_file(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for line_no, raw in enumerate(path.read_text("utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(f"{path}:{line_no}: expected key = value")
        key = key.strip()
        if key not in _FILE_KEYS:
            raise ParseError(f"{path}:{line_no}: unknown config key {key!r}")
        values[_FILE_KEYS[key]] = value.strip()
    return values


def load_config(path: str | Path | None = None, env: dict[str, str] | None = None) -> Config:
    """Assemble the effective configuration.

    ``env`` defaults to ``os.environ``; pass a dict in tests.
    """
    env = dict(os.environ) if env is None else env
    values: dict[str, str] = {}
    if path is not None:
        values.update(_parse_file(Path(path)))
    for env_key, field_name in _ENV_KEYS.items():
        if env_key in env:
            values[field_name] = env[env_key]

    config = Config()
    int_fields = {f.name for f in fields(Config) if f.type in ("int", int)}
    for field_name, raw in values.items():
        if field_name in int_fields:
            try:
                setattr(config, field_name, int(raw))
            except ValueError:
                raise ParseError(f"config key {field_name} must be an integer, got {raw!r}") from None
        else:
            setattr(config, field_name, raw)
    return config
