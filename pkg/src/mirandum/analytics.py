"""The use register: append-only interaction events, sessionization, and the
statistics a curator consults when deciding what content to commission.

Events are one JSON object per line, one file per UTC day, append-only.
Everything downstream (sessions, reports) is recomputed from the raw log, so
replays are deterministic and nothing ever mutates a stored record.
"""

from __future__ import annotations

import csv
import io
import json
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import MalformedEventError

EVENT_KINDS = (
    "enter_environment",
    "hover_asset",
    "activate_asset",
    "content_view_start",
    "content_view_end",
    "navigate",
)
CLIENTS = ("viewer", "simulator")

# kind-specific required fields on top of the always-required ones
REQUIRED_FIELDS = {
    "enter_environment": ("env_id",),
    "navigate": ("env_id",),
    "hover_asset": ("asset_id",),
    "activate_asset": ("asset_id",),
    "content_view_start": ("content_id", "asset_id"),
    "content_view_end": ("content_id", "asset_id"),
}

GROUPINGS = ("by_asset", "by_content", "by_content_kind", "by_environment")

CLOCK_SKEW_LIMIT_MS = 5 * 60 * 1000
DEFAULT_GAP_TIMEOUT_S = 1800.0


@dataclass(frozen=True)
class InteractionEvent:
    event_id: str
    session_id: str
    timestamp: int  # UTC milliseconds
    kind: str
    env_id: str | None = None
    asset_id: str | None = None
    content_id: str | None = None
    client: str = "viewer"

    def sort_key(self) -> tuple[int, str]:
        return (self.timestamp, self.event_id)


def event_to_wire(event: InteractionEvent) -> dict[str, Any]:
    out: dict[str, Any] = {
        "event_id": event.event_id,
        "session_id": event.session_id,
        "timestamp": event.timestamp,
        "kind": event.kind,
        "client": event.client,
    }
    for name in ("env_id", "asset_id", "content_id"):
        value = getattr(event, name)
        if value is not None:
            out[name] = value
    return out


def event_from_wire(data: Mapping[str, Any]) -> InteractionEvent:
    """Parse and validate one wire-format event. Raises MalformedEventError
    naming the field that is missing or wrong."""
    def need_str(name: str) -> str:
        value = data.get(name)
        if not isinstance(value, str) or not value:
            raise MalformedEventError(f"event field {name!r} missing or empty",
                                      field=name)
        return value

    event_id = need_str("event_id")
    session_id = need_str("session_id")
    kind = need_str("kind")
    if kind not in EVENT_KINDS:
        raise MalformedEventError(f"unknown event kind {kind!r}", field="kind")
    ts = data.get("timestamp")
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise MalformedEventError("timestamp must be integer UTC milliseconds",
                                  field="timestamp")
    client = data.get("client", "viewer")
    if client not in CLIENTS:
        raise MalformedEventError(f"unknown client {client!r}", field="client")
    for name in REQUIRED_FIELDS[kind]:
        need_str(name)

    def opt(name: str) -> str | None:
        value = data.get(name)
        if value is None:
            return None
        if not isinstance(value, str):
            raise MalformedEventError(f"event field {name!r} must be a string",
                                      field=name)
        return value

    return InteractionEvent(
        event_id=event_id,
        session_id=session_id,
        timestamp=ts,
        kind=kind,
        env_id=opt("env_id"),
        asset_id=opt("asset_id"),
        content_id=opt("content_id"),
        client=client,
    )


def _default_now_ms() -> int:
    return time.time_ns() // 1_000_000


def _day_of(timestamp_ms: int) -> str:
    return datetime.fromtimestamp(timestamp_ms / 1000.0, tz=timezone.utc).strftime("%Y-%m-%d")


def _torn_tail(path: Path) -> bool:
    """True when the file ends mid-line (a crash tore the last append)."""
    try:
        with open(path, "rb") as fh:
            fh.seek(-1, io.SEEK_END)
            return fh.read(1) != b"\n"
    except (OSError, ValueError):  # missing or empty file
        return False


class EventLog:
    """Append-only JSONL log, one file per UTC day, idempotent on event_id.

    Appends go through one lock (single-writer discipline) and land with a
    flush+fsync per batch; a torn final line from a crash is skipped on read
    and overwritten-by-append never happens.
    """

    def __init__(self, root: str | Path, now_ms=_default_now_ms) -> None:
        self.root = Path(root)
        self.now_ms = now_ms
        self._lock = threading.Lock()
        self._seen: set[str] = set()
        self.root.mkdir(parents=True, exist_ok=True)
        for event in self.read_all():
            self._seen.add(event.event_id)

    def _day_path(self, day: str) -> Path:
        return self.root / f"{day}.jsonl"

    def append(self, event: InteractionEvent) -> dict[str, Any]:
        return self.append_batch([event])[0]

    def append_batch(self, events: Sequence[InteractionEvent]) -> list[dict[str, Any]]:
        """Durably append events; per-event acks, duplicates acked not re-stored."""
        acks: list[dict[str, Any]] = []
        now = self.now_ms()
        with self._lock:
            by_day: dict[str, list[str]] = {}
            for event in events:
                warnings = []
                if event.timestamp > now + CLOCK_SKEW_LIMIT_MS:
                    warnings.append("CLOCK_SKEW")
                if event.event_id in self._seen:
                    acks.append({"event_id": event.event_id, "status": "duplicate",
                                 "warnings": warnings})
                    continue
                self._seen.add(event.event_id)
                line = json.dumps(event_to_wire(event), ensure_ascii=False,
                                  sort_keys=True)
                by_day.setdefault(_day_of(event.timestamp), []).append(line)
                acks.append({"event_id": event.event_id, "status": "stored",
                             "warnings": warnings})
            for day, lines in sorted(by_day.items()):
                path = self._day_path(day)
                lead = "\n" if _torn_tail(path) else ""
                with open(path, "a", encoding="utf-8") as fh:
                    fh.write(lead + "\n".join(lines) + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
        return acks

    def read_all(self) -> list[InteractionEvent]:
        events: list[InteractionEvent] = []
        for path in sorted(self.root.glob("*.jsonl")):
            for line in path.read_text(encoding="utf-8").splitlines():
                line = line.strip()
                if not line:
                    continue
                try:
                    events.append(event_from_wire(json.loads(line)))
                except (json.JSONDecodeError, MalformedEventError):
                    # a torn trailing line from a crash; never fatal on replay
                    continue
        return events

    def count(self) -> int:
        return len(self._seen)


# ---------------------------------------------------------------------------
# sessionization


@dataclass(frozen=True)
class ViewRecord:
    content_id: str
    asset_id: str
    env_id: str  # effective environment, "" when never known
    start_ms: int
    dwell_ms: int | None  # None = incomplete


@dataclass(frozen=True)
class ActivationRecord:
    asset_id: str
    content_id: str | None
    env_id: str
    timestamp: int


@dataclass(frozen=True)
class Session:
    session_id: str
    events: tuple[InteractionEvent, ...]
    start_ms: int
    end_ms: int
    views: tuple[ViewRecord, ...] = ()
    activations: tuple[ActivationRecord, ...] = field(default=())


def sessionize(events: Iterable[InteractionEvent],
               gap_timeout_s: float = DEFAULT_GAP_TIMEOUT_S) -> list[Session]:
    """Split the log into sessions and pair content views inside each.

    Events are ordered by (timestamp, event_id); a silence longer than the
    gap timeout starts a new session under the same session_id. A view start
    pairs with the earliest following end of the same content in the same
    session; a second start of the same content, a gap split, or running out
    of events closes it incomplete.
    """
    if gap_timeout_s <= 0:
        raise ValueError("gap_timeout_s must be positive")
    gap_ms = gap_timeout_s * 1000.0

    by_session: dict[str, list[InteractionEvent]] = {}
    for event in sorted(events, key=InteractionEvent.sort_key):
        by_session.setdefault(event.session_id, []).append(event)

    sessions: list[Session] = []
    for session_id in sorted(by_session):
        ordered = by_session[session_id]
        segment: list[InteractionEvent] = []
        for event in ordered:
            if segment and event.timestamp - segment[-1].timestamp > gap_ms:
                sessions.append(_build_session(session_id, segment))
                segment = []
            segment.append(event)
        if segment:
            sessions.append(_build_session(session_id, segment))
    sessions.sort(key=lambda s: (s.start_ms, s.session_id))
    return sessions


def _build_session(session_id: str, segment: list[InteractionEvent]) -> Session:
    current_env = ""
    views: list[ViewRecord] = []
    open_views: dict[str, tuple[InteractionEvent, str]] = {}  # content_id -> (start, env)
    activations: list[ActivationRecord] = []

    def close(content_id: str, dwell_ms: int | None) -> None:
        start, env = open_views.pop(content_id)
        views.append(ViewRecord(
            content_id=content_id, asset_id=start.asset_id or "",
            env_id=env, start_ms=start.timestamp, dwell_ms=dwell_ms))

    for event in segment:
        if event.kind in ("enter_environment", "navigate") and event.env_id:
            current_env = event.env_id
        effective_env = event.env_id or current_env
        if event.kind == "activate_asset":
            activations.append(ActivationRecord(
                asset_id=event.asset_id or "", content_id=event.content_id,
                env_id=effective_env, timestamp=event.timestamp))
        elif event.kind == "content_view_start":
            cid = event.content_id or ""
            if cid in open_views:  # restart of the same content: old one died
                close(cid, None)
            open_views[cid] = (event, effective_env)
        elif event.kind == "content_view_end":
            cid = event.content_id or ""
            if cid in open_views:
                start, _ = open_views[cid]
                close(cid, event.timestamp - start.timestamp)
            # an end with no open start is an orphan: grammar checker's turf

    for cid in sorted(open_views):  # log exhausted: whatever is open stays incomplete
        close(cid, None)

    views.sort(key=lambda v: (v.start_ms, v.content_id))
    return Session(
        session_id=session_id,
        events=tuple(segment),
        start_ms=segment[0].timestamp,
        end_ms=segment[-1].timestamp,
        views=tuple(views),
        activations=tuple(activations),
    )


# ---------------------------------------------------------------------------
# aggregation


@dataclass(frozen=True)
class StatsRow:
    key: str
    activations: int
    complete_views: int
    incomplete_views: int
    unique_sessions: int
    total_dwell_ms: int
    mean_dwell_ms: float | None


@dataclass(frozen=True)
class StatsReport:
    grouping: str
    window: tuple[int, int]
    rows: tuple[StatsRow, ...]


def aggregate_stats(sessions: Sequence[Session], grouping: str,
                    window: tuple[int, int],
                    content_kinds: Mapping[str, str] | None = None) -> StatsReport:
    """Count activations and views per group over a closed [from, to] window.

    Activations land in the window by their own timestamp, views by their
    start timestamp (a view begun inside the window counts even if it ends
    after it). Groupings key on the event's own fields; by_content_kind maps
    content ids through content_kinds, defaulting to "unknown".
    """
    if grouping not in GROUPINGS:
        raise ValueError(f"unknown grouping {grouping!r}")
    lo, hi = window
    if lo > hi:
        raise ValueError("window must be ordered (from <= to)")
    kinds = content_kinds or {}

    def view_key(view: ViewRecord) -> str:
        if grouping == "by_asset":
            return view.asset_id
        if grouping == "by_content":
            return view.content_id
        if grouping == "by_content_kind":
            return kinds.get(view.content_id, "unknown")
        return view.env_id

    def activation_key(act: ActivationRecord) -> str | None:
        if grouping == "by_asset":
            return act.asset_id
        if grouping == "by_environment":
            return act.env_id
        # content-keyed groupings only see activations that name a content
        if act.content_id is None:
            return None
        if grouping == "by_content":
            return act.content_id
        return kinds.get(act.content_id, "unknown")

    activations: dict[str, int] = {}
    act_sessions: dict[str, set[str]] = {}
    complete: dict[str, int] = {}
    incomplete: dict[str, int] = {}
    dwell: dict[str, int] = {}

    for session in sessions:
        for act in session.activations:
            if not lo <= act.timestamp <= hi:
                continue
            key = activation_key(act)
            if key is None:
                continue
            activations[key] = activations.get(key, 0) + 1
            act_sessions.setdefault(key, set()).add(session.session_id)
        for view in session.views:
            if not lo <= view.start_ms <= hi:
                continue
            key = view_key(view)
            if view.dwell_ms is None:
                incomplete[key] = incomplete.get(key, 0) + 1
            else:
                complete[key] = complete.get(key, 0) + 1
                dwell[key] = dwell.get(key, 0) + view.dwell_ms

    rows = []
    for key in set(activations) | set(complete) | set(incomplete):
        n_complete = complete.get(key, 0)
        total = dwell.get(key, 0)
        rows.append(StatsRow(
            key=key,
            activations=activations.get(key, 0),
            complete_views=n_complete,
            incomplete_views=incomplete.get(key, 0),
            unique_sessions=len(act_sessions.get(key, ())),
            total_dwell_ms=total,
            mean_dwell_ms=(total / n_complete) if n_complete > 0 else None,
        ))
    rows.sort(key=lambda r: (-r.activations, r.key))
    return StatsReport(grouping=grouping, window=window, rows=tuple(rows))


# ---------------------------------------------------------------------------
# export


CSV_HEADER = ("group_key", "activations", "complete_views", "incomplete_views",
              "unique_sessions", "total_dwell_ms", "mean_dwell_ms")


def export_report(report: StatsReport, format: str = "csv") -> bytes:
    if format == "csv":
        return _export_csv(report)
    if format == "table_text":
        return _export_table(report)
    raise ValueError(f"unknown report format {format!r}")


def _export_csv(report: StatsReport) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")  # RFC 4180 line ends
    writer.writerow(CSV_HEADER)
    for row in report.rows:
        writer.writerow([
            row.key, row.activations, row.complete_views, row.incomplete_views,
            row.unique_sessions, row.total_dwell_ms,
            "" if row.mean_dwell_ms is None else repr(row.mean_dwell_ms),
        ])
    return buf.getvalue().encode("utf-8")


def _export_table(report: StatsReport) -> bytes:
    header = list(CSV_HEADER)
    lines = [[str(c) for c in header]]
    for row in report.rows:
        lines.append([
            row.key or "(none)", str(row.activations), str(row.complete_views),
            str(row.incomplete_views), str(row.unique_sessions),
            str(row.total_dwell_ms),
            "-" if row.mean_dwell_ms is None else f"{row.mean_dwell_ms:.1f}",
        ])
    widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
    out = [f"{report.grouping} from {report.window[0]} to {report.window[1]}"]
    for n, line in enumerate(lines):
        out.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(line)).rstrip())
        if n == 0:
            out.append("  ".join("-" * w for w in widths))
    return ("\n".join(out) + "\n").encode("utf-8")


def parse_csv_report(data: bytes) -> list[dict[str, Any]]:
    """Read an exported CSV back into plain dicts (round-trip checks, CLI)."""
    text = data.decode("utf-8")
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for record in reader:
        out.append({
            "group_key": record["group_key"],
            "activations": int(record["activations"]),
            "complete_views": int(record["complete_views"]),
            "incomplete_views": int(record["incomplete_views"]),
            "unique_sessions": int(record["unique_sessions"]),
            "total_dwell_ms": int(record["total_dwell_ms"]),
            "mean_dwell_ms": (None if record["mean_dwell_ms"] == ""
                              else float(record["mean_dwell_ms"])),
        })
    return out
