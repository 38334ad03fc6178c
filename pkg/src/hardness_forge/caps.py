"""Desk-scale enumeration guardrails.

Every exhaustive computation in this package is bounded by an explicit
cap and fails loudly with :class:`CapExceeded` instead of silently
truncating.  The environment variable ``HARDNESS_FORGE_CAPS`` overrides
the defaults process-wide; its value has the form
``policies=<n>,states=<n>`` (either key may be omitted).
"""

from __future__ import annotations

import os

DEFAULT_POLICY_CAP = 2**20
DEFAULT_STATE_CAP = 2**16

_ENV_VAR = "HARDNESS_FORGE_CAPS"


class CapExceeded(RuntimeError):
    """An enumeration would exceed its configured cap."""


def _env_caps() -> dict[str, int]:
    raw = os.environ.get(_ENV_VAR, "")
    caps: dict[str, int] = {}
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        key, sep, value = part.partition("=")
        if sep and key.strip() in ("policies", "states"):
            try:
                caps[key.strip()] = int(value)
            except ValueError:
                raise ValueError(f"bad {_ENV_VAR} entry: {part!r}") from None
        else:
            raise ValueError(f"bad {_ENV_VAR} entry: {part!r}")
    return caps


def policy_cap(override: int | None = None) -> int:
    """Cap on exhaustively enumerated policies (and search-tree nodes)."""
    if override is not None:
        return override
    return _env_caps().get("policies", DEFAULT_POLICY_CAP)


def state_cap(override: int | None = None) -> int:
    """Cap on materialized flat states when expanding factored models."""
    if override is not None:
        return override
    return _env_caps().get("states", DEFAULT_STATE_CAP)


def check(count: int, cap: int, what: str) -> None:
    if count > cap:
        raise CapExceeded(f"{what}: {count} exceeds cap {cap}")
