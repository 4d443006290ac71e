"""Headless simulated visitor.

Walks a compiled tour bundle, either from a script or from a seeded random
policy, and emits the same interaction events a real viewer would. The
point is reproducibility: the generator is a pinned portable PRNG, so one
seed yields one byte-identical event stream on any platform, which makes
load tests and end-to-end conservation checks exact rather than statistical.

Also home to the event-grammar checker: the oracle that decides whether an
event stream could have come from a legal walk at all.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .analytics import InteractionEvent, event_to_wire
from .errors import EmptyBundleError, ScriptActionError
from .model import ReportEntry

_MASK64 = (1 << 64) - 1

DEFAULT_START_MS = 1654041600000  # 2022-06-01T00:00:00Z
DEFAULT_DWELL = (1000, 8000)
# pacing between non-view actions; kept small so walks never split sessions
_STEP_GAP = (150, 1500)


def _splitmix64(value: int) -> int:
    value = (value + 0x9E3779B97F4A7C15) & _MASK64
    value = ((value ^ (value >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    value = ((value ^ (value >> 27)) * 0x94D049BB133111EB) & _MASK64
    return value ^ (value >> 31)


class Xorshift64Star:
    """xorshift64* (shifts 12/25/27, multiplier 0x2545F4914F6CDD1D).

    State is the seed passed through one splitmix64 round so that small or
    zero seeds still start from a well-mixed nonzero state. Pure integer
    arithmetic; identical output everywhere.
    """

    def __init__(self, seed: int) -> None:
        self.state = _splitmix64(seed & _MASK64) or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def random(self) -> float:
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform-ish integer in [lo, hi]; modulo bias is irrelevant at
        these ranges and keeps the draw sequence platform-stable."""
        if lo > hi:
            raise ValueError("empty range")
        return lo + self.next_u64() % (hi - lo + 1)

    def choice(self, seq: Sequence[Any]) -> Any:
        if not seq:
            raise ValueError("empty sequence")
        return seq[self.randint(0, len(seq) - 1)]


@dataclass(frozen=True)
class WalkPolicy:
    mode: str  # "scripted" | "random"
    seed: int | None = None
    script: tuple[Mapping[str, Any], ...] | None = None
    dwell_model: tuple[int, int] = DEFAULT_DWELL
    activation_probability: float = 0.6
    max_events: int = 100
    start_time_ms: int = DEFAULT_START_MS
    session_id: str | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("scripted", "random"):
            raise ValueError(f"unknown walk mode {self.mode!r}")
        if self.mode == "random" and (self.seed is None or self.script is not None):
            raise ValueError("random mode takes a seed and no script")
        if self.mode == "scripted" and (self.script is None or self.seed is not None):
            raise ValueError("scripted mode takes a script and no seed")
        lo, hi = self.dwell_model
        if lo > hi or lo < 0:
            raise ValueError("dwell_model must be ordered and non-negative")
        if not 0.0 <= self.activation_probability <= 1.0:
            raise ValueError("activation_probability must be in [0, 1]")
        if self.max_events < 1:
            raise ValueError("max_events must be positive")


@dataclass(frozen=True)
class WalkResult:
    session_id: str
    events: tuple[InteractionEvent, ...]
    transcript: str
    closed_views: int


def events_to_jsonl(events: Iterable[InteractionEvent]) -> bytes:
    """Analytics wire format, one event per line; the offline target of the
    simulate command and the byte-determinism surface."""
    lines = [json.dumps(event_to_wire(e), ensure_ascii=False, sort_keys=True)
             for e in events]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


class _Walker:
    """Shared emission plumbing for both walk modes."""

    def __init__(self, bundle: Mapping[str, Any], session_id: str,
                 start_ms: int) -> None:
        self.envs = {env["env_id"]: env for env in bundle["environments"]}
        if not self.envs:
            raise EmptyBundleError("bundle has no environments")
        self.entry_id = bundle["entry_env_id"] or next(iter(self.envs))
        self.session_id = session_id
        self.start_ms = start_ms
        self.ts = start_ms
        self.current_env: str | None = None
        self.events: list[InteractionEvent] = []
        self.lines: list[str] = []
        self.closed_views = 0
        self.activated: set[str] = set()

    def emit(self, kind: str, **fields: Any) -> None:
        seq = len(self.events)
        self.events.append(InteractionEvent(
            event_id=f"{self.session_id}-{seq:06d}",
            session_id=self.session_id,
            timestamp=self.ts,
            kind=kind,
            env_id=self.current_env,
            client="simulator",
            **fields,
        ))

    def note(self, text: str) -> None:
        offset = (self.ts - self.start_ms) / 1000.0
        self.lines.append(f"t+{offset:9.3f}s  {text}")

    def assets_of(self, env_id: str) -> list[dict[str, Any]]:
        return self.envs[env_id]["assets"]

    def enter(self, env_id: str) -> None:
        self.current_env = env_id
        self.emit("enter_environment")
        self.note(f"enter {env_id}")

    def navigate(self, env_id: str) -> None:
        self.current_env = env_id
        self.emit("navigate")
        self.note(f"navigate {env_id}")

    def hover(self, asset_id: str) -> None:
        self.emit("hover_asset", asset_id=asset_id)
        self.note(f"hover {asset_id}")

    def activate(self, asset_id: str, content_id: str) -> None:
        self.emit("activate_asset", asset_id=asset_id, content_id=content_id)
        self.activated.add(asset_id)
        self.note(f"activate {asset_id} -> {content_id}")

    def view(self, asset_id: str, content_id: str, dwell_ms: int) -> None:
        self.emit("content_view_start", asset_id=asset_id, content_id=content_id)
        self.note(f"view {content_id} start")
        self.ts += dwell_ms
        self.emit("content_view_end", asset_id=asset_id, content_id=content_id)
        self.note(f"view {content_id} end (dwell {dwell_ms} ms)")
        self.closed_views += 1

    def result(self, tour_id: str) -> WalkResult:
        header = f"walk {self.session_id} over tour {tour_id}"
        footer = [f"events: {len(self.events)}",
                  f"closed views: {self.closed_views}"]
        transcript = "\n".join([header, *self.lines, *footer]) + "\n"
        return WalkResult(session_id=self.session_id,
                          events=tuple(self.events),
                          transcript=transcript,
                          closed_views=self.closed_views)


def run_walk(bundle: Mapping[str, Any], policy: WalkPolicy) -> WalkResult:
    """Produce one visitor's event stream plus a human-readable transcript.

    Random mode is fully determined by the seed; scripted mode raises
    SCRIPT_ILLEGAL_ACTION naming the offending step. Either way the output
    passes the event-grammar checker.
    """
    if policy.mode == "random":
        return _random_walk(bundle, policy)
    return _scripted_walk(bundle, policy)


def _random_walk(bundle: Mapping[str, Any], policy: WalkPolicy) -> WalkResult:
    assert policy.seed is not None
    session = policy.session_id or f"walk-{policy.seed & _MASK64:016x}"
    walker = _Walker(bundle, session, policy.start_time_ms)
    rng = Xorshift64Star(policy.seed)

    walker.enter(walker.entry_id)
    while len(walker.events) < policy.max_events:
        walker.ts += rng.randint(*_STEP_GAP)
        env = walker.envs[walker.current_env]
        assets = env["assets"]
        links = env["nav_links"]
        budget = policy.max_events - len(walker.events)

        if assets and rng.random() < policy.activation_probability:
            asset = rng.choice(assets)
            directive = rng.choice(asset["directives"])
            # full interaction is hover/activate/start/end; every prefix is
            # still a legal stream, so a tight budget just truncates it
            walker.hover(asset["asset_id"])
            if budget >= 2:
                walker.ts += rng.randint(*_STEP_GAP)
                walker.activate(asset["asset_id"], directive["content_id"])
            if budget >= 3:
                walker.ts += rng.randint(*_STEP_GAP)
                dwell = rng.randint(*policy.dwell_model)
                if budget >= 4:
                    walker.view(asset["asset_id"], directive["content_id"], dwell)
                else:
                    walker.emit("content_view_start",
                                asset_id=asset["asset_id"],
                                content_id=directive["content_id"])
                    walker.note(f"view {directive['content_id']} start")
        elif links:
            walker.navigate(rng.choice(links)["target"])
        elif assets:
            walker.hover(rng.choice(assets)["asset_id"])
        else:
            walker.note("dead end: no assets, no links")
            break
    return walker.result(bundle["tour_id"])


def _scripted_walk(bundle: Mapping[str, Any], policy: WalkPolicy) -> WalkResult:
    assert policy.script is not None
    session = policy.session_id or "walk-scripted"
    walker = _Walker(bundle, session, policy.start_time_ms)
    last_activated: tuple[str, str] | None = None

    def fail(step: int, why: str) -> ScriptActionError:
        return ScriptActionError(f"script step {step}: {why}", step=step)

    for index, step in enumerate(policy.script):
        action = step.get("action")
        if action == "enter":
            env_id = step.get("env", walker.entry_id)
            if env_id not in walker.envs:
                raise fail(index, f"unknown environment {env_id!r}")
            if walker.current_env is not None:
                raise fail(index, "enter after walk already started")
            walker.enter(env_id)
            continue
        if action == "exit":
            break  # leaving the museum emits nothing
        if walker.current_env is None:
            raise fail(index, f"{action!r} before enter")
        walker.ts += int(step.get("pause_ms", 400))

        if action == "navigate":
            env_id = step.get("env")
            if env_id not in walker.envs:
                raise fail(index, f"unknown environment {env_id!r}")
            walker.navigate(env_id)
        elif action == "hover":
            asset = _find_asset(walker, step.get("asset"))
            if asset is None:
                raise fail(index, f"asset {step.get('asset')!r} not in "
                                  f"{walker.current_env!r}")
            walker.hover(asset["asset_id"])
        elif action == "activate":
            asset = _find_asset(walker, step.get("asset"))
            if asset is None:
                raise fail(index, f"asset {step.get('asset')!r} not in "
                                  f"{walker.current_env!r}")
            directive = _pick_directive(asset, step.get("content"))
            if directive is None:
                raise fail(index, f"content {step.get('content')!r} not bound "
                                  f"to {asset['asset_id']!r}")
            walker.hover(asset["asset_id"])
            walker.ts += 1
            walker.activate(asset["asset_id"], directive["content_id"])
            last_activated = (asset["asset_id"], directive["content_id"])
        elif action == "view":
            if step.get("asset") or step.get("content"):
                pair = (step.get("asset"), step.get("content"))
            elif last_activated is not None:
                pair = last_activated
            else:
                raise fail(index, "view before any activate")
            asset_id, content_id = pair
            if asset_id not in walker.activated:
                raise fail(index, f"view of {asset_id!r} before activating it")
            dwell = int(step.get("dwell_ms", 3000))
            if dwell < 0:
                raise fail(index, "negative dwell")
            walker.ts += 1
            walker.view(asset_id, content_id, dwell)
        else:
            raise fail(index, f"unknown action {action!r}")

    return walker.result(bundle["tour_id"])


def _find_asset(walker: _Walker, asset_id: str | None) -> dict[str, Any] | None:
    for asset in walker.assets_of(walker.current_env):
        if asset["asset_id"] == asset_id:
            return asset
    return None


def _pick_directive(asset: Mapping[str, Any],
                    content_id: str | None) -> Mapping[str, Any] | None:
    for directive in asset["directives"]:
        if content_id is None or directive["content_id"] == content_id:
            return directive
    return None


# ---------------------------------------------------------------------------
# grammar checker


def check_event_grammar(events: Iterable[InteractionEvent],
                        bundle: Mapping[str, Any] | None = None) -> list[ReportEntry]:
    """Flag event sequences no legal walk could have produced.

    Per session (ordered by timestamp then event id):
      EVENT_BEFORE_ENTER    asset or view event before the first enter
      ORPHAN_END            view end with no open view of that content
      VIEW_WITHOUT_ACTIVATE view start for an asset never activated
      CROSS_ENV_ASSET       event stamped with, or referring to, an
                            environment other than the current one
    """
    asset_env: dict[str, str] = {}
    if bundle is not None:
        for env in bundle["environments"]:
            for asset in env["assets"]:
                asset_env[asset["asset_id"]] = env["env_id"]

    violations: list[ReportEntry] = []

    def flag(event: InteractionEvent, code: str, message: str) -> None:
        violations.append(ReportEntry(code=code,
                                      path=f"event[{event.event_id}]",
                                      message=message))

    by_session: dict[str, list[InteractionEvent]] = {}
    for event in sorted(events, key=InteractionEvent.sort_key):
        by_session.setdefault(event.session_id, []).append(event)

    for session_id in sorted(by_session):
        current_env: str | None = None
        entered = False
        open_views: set[str] = set()
        activated: set[str] = set()
        for event in by_session[session_id]:
            if event.kind == "enter_environment":
                entered = True
                current_env = event.env_id
                continue
            if event.kind == "navigate":
                current_env = event.env_id
                continue
            # everything below touches an asset or a view
            if not entered:
                flag(event, "EVENT_BEFORE_ENTER",
                     f"{event.kind} before entering any environment")
                continue
            if (event.env_id is not None and current_env is not None
                    and event.env_id != current_env):
                flag(event, "CROSS_ENV_ASSET",
                     f"event stamped {event.env_id!r} while in {current_env!r}")
            home = asset_env.get(event.asset_id or "")
            if home is not None and current_env is not None and home != current_env:
                flag(event, "CROSS_ENV_ASSET",
                     f"asset {event.asset_id!r} lives in {home!r}, "
                     f"visitor is in {current_env!r}")
            if event.kind == "activate_asset":
                activated.add(event.asset_id or "")
            elif event.kind == "content_view_start":
                if (event.asset_id or "") not in activated:
                    flag(event, "VIEW_WITHOUT_ACTIVATE",
                         f"view of {event.content_id!r} without activating "
                         f"{event.asset_id!r}")
                open_views.add(event.content_id or "")
            elif event.kind == "content_view_end":
                cid = event.content_id or ""
                if cid in open_views:
                    open_views.discard(cid)
                else:
                    flag(event, "ORPHAN_END",
                         f"view end for {cid!r} with no open view")
    return violations
