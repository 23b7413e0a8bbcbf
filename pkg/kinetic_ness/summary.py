"""Summary records written to summary.json."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import orjson
from mashumaro.mixins.orjson import DataClassORJSONMixin

from .enums import Command, RegimeFlag, RunStatus
from .errors import KineticNessError
from .helpers import get_serializable_value

# sorted keys and a trailing newline keep repeated runs byte-identical
JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_APPEND_NEWLINE


@dataclass
class NessSummary(DataClassORJSONMixin):
    """Model for the result record of the ness command."""

    nu_star: float
    energy: float
    E0: float  # noqa: N815
    alpha: float
    iterations: int
    residual: float
    regime_flag: RegimeFlag


@dataclass
class RunSummary(DataClassORJSONMixin):
    """Model for the summary of one command invocation."""

    command: Command
    status: RunStatus = RunStatus.OK
    # metadata: resolved configuration values (defaults, v_max, dt)
    metadata: dict[str, Any] = field(
        default_factory=dict, metadata={"serialize": lambda v: get_serializable_value(v)}
    )
    # result: command-specific payload
    result: Any = field(default=None, metadata={"serialize": lambda v: get_serializable_value(v)})
    error_code: int | None = None
    reason: str | None = None
    details: str | None = None

    @classmethod
    def from_error(
        cls, command: Command, err: KineticNessError, metadata: dict[str, Any] | None = None
    ) -> RunSummary:
        """Create the summary of a failed command."""
        return cls(
            command=command,
            status=RunStatus.ERROR,
            metadata=metadata or {},
            error_code=err.error_code,
            reason=err.reason,
            details=str(err),
        )

    def dump(self) -> bytes:
        """Return the deterministic JSON encoding."""
        return orjson.dumps(self.to_dict(), option=JSON_OPTIONS)


def parse_summary(raw: bytes | str) -> RunSummary:
    """Parse a summary document."""
    return RunSummary.from_dict(orjson.loads(raw))
