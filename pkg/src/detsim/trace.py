"""Canonical execution traces: recording, serialization, comparison.

A trace is the full record of what a kernel executed, in order.  Two runs are
considered identical exactly when their serialized traces are byte-identical,
so the wire format is deliberately rigid:

* ASCII only, ``\\n`` line endings, one record per line.
* Line 1 is a header: ``detsimtrace|<format digest>|<tool version>|<start>``.
  The format digest is derived from the field list below, so any change to
  the record layout changes the header.
* Every following line is one executed callback event with nine fields
  separated by ``|``: seq, sim_time_ns, node_name, event_kind,
  entity_reg_index, callback_id, input_word, state_after, flags.
  Unsigned 64-bit fields are fixed-width 16-digit lowercase hex.  The flags
  field is ``N`` for a delivery that found an empty buffer and ran no
  callback, ``-`` otherwise.

Comparison skips the header by default so that traces written by different
tool versions stay comparable; the recorded events alone decide equality.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

from .errors import DetsimError


class SeqGap(DetsimError):
    """A record's sequence number does not extend the log contiguously."""


class TraceFormatError(DetsimError):
    """Serialized trace data does not conform to the format above."""


class EventKind(Enum):
    """Wire tags for the four kinds of executable events."""

    TIMER_FIRE = "T"
    TOPIC_DELIVERY = "D"
    SERVICE_REQUEST = "Q"
    CLIENT_RESPONSE = "R"


_FIELDS = (
    "seq",
    "sim_time_ns",
    "node_name",
    "event_kind",
    "entity_reg_index",
    "callback_id",
    "input_word",
    "state_after",
    "flags",
)

FORMAT_MAGIC = "detsimtrace"
FORMAT_DIGEST = hashlib.sha256("|".join(_FIELDS).encode("ascii")).hexdigest()[:16]

_KIND_BY_TAG = {kind.value: kind for kind in EventKind}


@dataclass(frozen=True)
class TraceRecord:
    """One executed event.  ``sim_time_ns`` is absolute (start time included)."""

    seq: int
    sim_time_ns: int
    node_name: str
    event_kind: EventKind
    entity_reg_index: int
    callback_id: int
    input_word: int
    state_after: int
    no_op_delivery: bool = False


@dataclass
class TraceLog:
    """An append-only list of records plus the header metadata."""

    tool_version: str
    start_time_ns: int
    records: list[TraceRecord] = field(default_factory=list)

    def record(self, rec: TraceRecord) -> None:
        if rec.seq != len(self.records):
            raise SeqGap(f"expected seq {len(self.records)}, got {rec.seq}")
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)


def _record_line(rec: TraceRecord) -> str:
    flags = "N" if rec.no_op_delivery else "-"
    return (
        f"{rec.seq:016x}|{rec.sim_time_ns:016x}|{rec.node_name}|"
        f"{rec.event_kind.value}|{rec.entity_reg_index:016x}|"
        f"{rec.callback_id:016x}|{rec.input_word:016x}|"
        f"{rec.state_after:016x}|{flags}"
    )


def serialize(log: TraceLog) -> bytes:
    """Render ``log`` to its canonical byte form (header line included)."""
    lines = [f"{FORMAT_MAGIC}|{FORMAT_DIGEST}|{log.tool_version}|{log.start_time_ns:016x}"]
    lines.extend(_record_line(rec) for rec in log.records)
    lines.append("")
    return "\n".join(lines).encode("ascii")


def _parse_hex_field(text: str, what: str, lineno: int) -> int:
    if len(text) != 16 or text.lower() != text:
        raise TraceFormatError(f"line {lineno}: {what} is not 16-digit lowercase hex")
    try:
        return int(text, 16)
    except ValueError:
        raise TraceFormatError(f"line {lineno}: {what} is not hex") from None


def parse(data: bytes) -> TraceLog:
    """Parse canonical bytes back into a TraceLog; inverse of ``serialize``."""
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise TraceFormatError(f"trace is not ASCII: {exc}") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise TraceFormatError("empty input")

    head = lines[0].split("|")
    if len(head) != 4 or head[0] != FORMAT_MAGIC:
        raise TraceFormatError("line 1: bad header")
    if head[1] != FORMAT_DIGEST:
        raise TraceFormatError(
            f"line 1: format digest {head[1]!r} does not match {FORMAT_DIGEST!r}"
        )
    log = TraceLog(tool_version=head[2], start_time_ns=_parse_hex_field(head[3], "start time", 1))

    prev_time = 0
    for index, line in enumerate(lines[1:]):
        lineno = index + 2
        parts = line.split("|")
        if len(parts) != len(_FIELDS):
            raise TraceFormatError(f"line {lineno}: expected {len(_FIELDS)} fields")
        seq = _parse_hex_field(parts[0], "seq", lineno)
        if seq != index:
            raise TraceFormatError(f"line {lineno}: seq {seq} out of order")
        sim_time = _parse_hex_field(parts[1], "sim_time_ns", lineno)
        if sim_time < prev_time:
            raise TraceFormatError(f"line {lineno}: sim time went backward")
        prev_time = sim_time
        if parts[3] not in _KIND_BY_TAG:
            raise TraceFormatError(f"line {lineno}: unknown event kind {parts[3]!r}")
        if parts[8] not in ("-", "N"):
            raise TraceFormatError(f"line {lineno}: unknown flags {parts[8]!r}")
        log.records.append(
            TraceRecord(
                seq=seq,
                sim_time_ns=sim_time,
                node_name=parts[2],
                event_kind=_KIND_BY_TAG[parts[3]],
                entity_reg_index=_parse_hex_field(parts[4], "entity_reg_index", lineno),
                callback_id=_parse_hex_field(parts[5], "callback_id", lineno),
                input_word=_parse_hex_field(parts[6], "input_word", lineno),
                state_after=_parse_hex_field(parts[7], "state_after", lineno),
                no_op_delivery=parts[8] == "N",
            )
        )
    return log


@dataclass(frozen=True)
class Divergence:
    """First line where two serialized traces differ (1-based, header is 1).

    A side is None when that trace ends before the divergent line.
    """

    line: int
    left: str | None
    right: str | None


def _display(raw: bytes | None) -> str | None:
    return None if raw is None else raw.decode("ascii", "replace")


def compare(a: bytes, b: bytes, strict_header: bool = False) -> Divergence | None:
    """Byte-compare two serialized traces; None means identical.

    By default line 1 (the header) is exempt, so runs recorded by different
    tool versions compare equal when they executed the same events.
    """
    if a == b:
        return None
    la = a.splitlines()
    lb = b.splitlines()
    start = 0 if strict_header else 1
    for i in range(start, max(len(la), len(lb))):
        ra = la[i] if i < len(la) else None
        rb = lb[i] if i < len(lb) else None
        if ra != rb:
            return Divergence(line=i + 1, left=_display(ra), right=_display(rb))
    return None


def digest(data: bytes, strict_header: bool = False) -> str:
    """Hex sha256 of a serialized trace, header line excluded by default."""
    if not strict_header:
        cut = data.find(b"\n")
        data = data[cut + 1 :] if cut >= 0 else b""
    return hashlib.sha256(data).hexdigest()
