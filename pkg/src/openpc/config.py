"""Deployment configuration: a flat key=value text format, an env override
layer (OPENPC_CONFIG, OPENPC_DATA_DIR, OPENPC_LISTEN_ADDR), and defaults that
bring up a self-contained sixteen-node installation."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .errors import InvalidConfigError

ENV_CONFIG = "OPENPC_CONFIG"
ENV_DATA_DIR = "OPENPC_DATA_DIR"
ENV_LISTEN_ADDR = "OPENPC_LISTEN_ADDR"


def parse_kv(text: str) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment, blanks are skipped."""
    values: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise InvalidConfigError(f"line {line_no}: expected key=value, got {line!r}")
        key = key.strip()
        value = value.strip()
        if not key:
            raise InvalidConfigError(f"line {line_no}: empty key")
        if key in values:
            raise InvalidConfigError(f"line {line_no}: duplicate key {key!r}")
        values[key] = value
    return values


@dataclass
class ServiceConfig:
    listen_addr: str = "127.0.0.1:8066"
    data_dir: str = "openpc-data"
    pool_size: int = 16
    boot_delay: float = 2.0
    boot_timeout: float = 10.0
    cput_seconds: int = 24 * 3600
    session_ttl: float = 8 * 3600.0
    channel_secret: str = "openpc-master-secret"
    admin_username: str = "admin"
    admin_password: str = "admin"
    admin_display_name: str = "Site Administrator"
    clock_scale: float = 1.0

    @classmethod
    def from_text(cls, text: str) -> "ServiceConfig":
        values = parse_kv(text)
        kwargs = {}
        for spec in fields(cls):
            if spec.name not in values:
                continue
            raw = values.pop(spec.name)
            try:
                if spec.type in ("int", int):
                    kwargs[spec.name] = int(raw)
                elif spec.type in ("float", float):
                    kwargs[spec.name] = float(raw)
                else:
                    kwargs[spec.name] = raw
            except ValueError:
                raise InvalidConfigError(f"{spec.name}: cannot parse {raw!r}") from None
        if values:
            unknown = ", ".join(sorted(values))
            raise InvalidConfigError(f"unknown config keys: {unknown}")
        config = cls(**kwargs)
        config.validate()
        return config

    @classmethod
    def load(cls, path: Optional[str] = None) -> "ServiceConfig":
        """Read the config file (argument, else $OPENPC_CONFIG, else defaults)
        and apply the env overrides on top."""
        path = path or os.environ.get(ENV_CONFIG)
        if path:
            config = cls.from_text(Path(path).read_text(encoding="utf-8"))
        else:
            config = cls()
        if os.environ.get(ENV_DATA_DIR):
            config.data_dir = os.environ[ENV_DATA_DIR]
        if os.environ.get(ENV_LISTEN_ADDR):
            config.listen_addr = os.environ[ENV_LISTEN_ADDR]
        config.validate()
        return config

    def validate(self) -> None:
        if self.pool_size < 1:
            raise InvalidConfigError("pool_size must be >= 1")
        if self.boot_timeout <= 0 or self.boot_delay < 0:
            raise InvalidConfigError("boot timing must be positive")
        if self.cput_seconds <= 0:
            raise InvalidConfigError("cput_seconds must be positive")
        if self.session_ttl <= 0:
            raise InvalidConfigError("session_ttl must be positive")
        host, sep, port = self.listen_addr.partition(":")
        if not sep or not host or not port.isdigit():
            raise InvalidConfigError(f"listen_addr must be host:port, got {self.listen_addr!r}")

    @property
    def host(self) -> str:
        return self.listen_addr.partition(":")[0]

    @property
    def port(self) -> int:
        return int(self.listen_addr.partition(":")[2])
