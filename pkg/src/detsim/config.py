"""Run configuration files: strict YAML documents describing one job.

Document shape::

    start_time_ns: 1700000000000000000
    duration_ns: 10000000000
    livelock_threshold: 1000000     # optional
    jitter_max_ms: 0                # optional
    nodes:
      - type: bench_source
        name: node_a
        params: {topic: /a, timer0_period_ms: 100, timer0_callback_id: 7}
    delays:                         # optional
      node_a//a: 5000000

Unknown keys are rejected, at the top level and inside node entries; a typo
should fail loudly rather than silently configure nothing.  Malformed
documents raise ParseError; documents that parse but violate a semantic rule
(an unknown node type, a client without its service, a bad delay key) raise
ValidationError from the graph build.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .benchmark import default_factory
from .errors import ParseError
from .executor import JobSpec, Kernel, NodeSpec
from .graph import NodeFactory, Parameters
from .timebase import SimDuration, U64_MAX

_TOP_KEYS = {
    "start_time_ns",
    "duration_ns",
    "livelock_threshold",
    "jitter_max_ms",
    "nodes",
    "delays",
}
_NODE_KEYS = {"type", "name", "params"}


def _require_int(doc: dict, key: str, minimum: int = 0, maximum: int = U64_MAX) -> int:
    value = doc[key]
    if not isinstance(value, int) or isinstance(value, bool):
        raise ParseError(f"{key} must be an integer, got {value!r}")
    if not minimum <= value <= maximum:
        raise ParseError(f"{key} must be within [{minimum}, {maximum}], got {value}")
    return value


def _parse_nodes(raw) -> tuple[NodeSpec, ...]:
    if not isinstance(raw, list) or not raw:
        raise ParseError("nodes must be a non-empty list")
    specs = []
    for position, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ParseError(f"nodes[{position}] is not a mapping")
        unknown = [key for key in entry if key not in _NODE_KEYS]
        if unknown:
            raise ParseError(f"nodes[{position}]: unknown keys: {', '.join(sorted(unknown))}")
        for key in ("type", "name"):
            if key not in entry or not isinstance(entry[key], str):
                raise ParseError(f"nodes[{position}]: {key} must be a string")
        params = entry.get("params", {})
        if not isinstance(params, dict):
            raise ParseError(f"nodes[{position}]: params must be a mapping")
        specs.append(NodeSpec(entry["type"], entry["name"], Parameters(params)))
    return tuple(specs)


def _parse_delays(raw) -> dict[str, int]:
    if not isinstance(raw, dict):
        raise ParseError("delays must be a mapping")
    delays = {}
    for key, value in raw.items():
        if not isinstance(key, str):
            raise ParseError(f"delay key {key!r} is not a string")
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise ParseError(f"delay {key!r} must be a non-negative integer, got {value!r}")
        delays[key] = value
    return delays


def parse_config(text: str | bytes, factory: NodeFactory | None = None) -> JobSpec:
    """Parse one YAML document into a validated JobSpec.

    The job's graph is built once (and thrown away) so that every semantic
    error surfaces at parse time, not halfway into a batch of runs.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ParseError(f"bad YAML: {where}{problem}") from None
    if not isinstance(doc, dict):
        raise ParseError("configuration must be a mapping")
    unknown = [key for key in doc if key not in _TOP_KEYS]
    if unknown:
        raise ParseError(f"unknown configuration keys: {', '.join(sorted(map(str, unknown)))}")
    for key in ("start_time_ns", "duration_ns", "nodes"):
        if key not in doc:
            raise ParseError(f"missing required key {key!r}")

    jitter_max_s = 0.0
    if "jitter_max_ms" in doc:
        raw_jitter = doc["jitter_max_ms"]
        if isinstance(raw_jitter, bool) or not isinstance(raw_jitter, (int, float)):
            raise ParseError(f"jitter_max_ms must be a number, got {raw_jitter!r}")
        jitter_max_s = float(raw_jitter) / 1000.0

    kwargs = {}
    if "livelock_threshold" in doc:
        kwargs["livelock_threshold"] = _require_int(doc, "livelock_threshold")

    job = JobSpec(
        start_time_ns=_require_int(doc, "start_time_ns"),
        nodes=_parse_nodes(doc["nodes"]),
        duration=SimDuration(_require_int(doc, "duration_ns")),
        jitter_max_s=jitter_max_s,
        delays=_parse_delays(doc.get("delays", {})),
        **kwargs,
    )
    Kernel(job, factory if factory is not None else default_factory())
    return job


def load_config(path: str | Path, factory: NodeFactory | None = None) -> JobSpec:
    """Read and parse a configuration file."""
    return parse_config(Path(path).read_bytes(), factory)
