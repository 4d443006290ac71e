"""Federated access to partner repositories.

Partner institutions keep ownership of their media; we fetch over HTTP and
cache by content address. Three cache modes govern every fetch:

    always_fetch   try the network first, fall back to a warm cache entry
    prefer_cache   serve a warm entry without touching the network,
                   otherwise fetch
    cache_only     never touch the network

``plan_fetch`` is the pure decision table (mode x reachability x cache
state); ``FederationClient.fetch`` is the effectful twin whose outcome is
decided by the actual transport attempt, not by any stale snapshot.

Cache entries live in ``<root>/extcache.v1`` keyed by ``repo_id|uri`` and
point into the shared content store, so reads are digest-verified and blobs
dedupe across repositories. A time-to-live per repository decides whether an
entry is warm or expired; expired entries never serve, they only say a fetch
is due.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping
from urllib.parse import urljoin, urlparse

from .errors import (
    MalformedUriError,
    ObjectTooLargeError,
    UnknownRepoError,
)
from .model import ExternalRepository, PayloadRef
from .store import ContentStore, write_atomic

CACHE_INDEX_NAME = "extcache.v1"

DECISION_FRESH = "fresh"
DECISION_CACHED = "cached"
DECISION_UNAVAILABLE = "unavailable"

CACHE_COLD = "cold"
CACHE_WARM = "warm"
CACHE_EXPIRED = "expired"


def plan_fetch(mode: str, reachable: bool, cache_state: str) -> tuple[str, bool]:
    """Decide (decision, network_attempted) for one fetch.

    Pure over the full 18-combination domain of cache mode, repository
    reachability and cache state. ``network_attempted`` says whether the
    transport is tried at all, which is what metering and the cache_only
    guarantee care about.
    """
    if mode not in ("always_fetch", "prefer_cache", "cache_only"):
        raise ValueError(f"unknown cache mode {mode!r}")
    if cache_state not in (CACHE_COLD, CACHE_WARM, CACHE_EXPIRED):
        raise ValueError(f"unknown cache state {cache_state!r}")

    if mode == "cache_only":
        if cache_state == CACHE_WARM:
            return DECISION_CACHED, False
        return DECISION_UNAVAILABLE, False

    if mode == "prefer_cache":
        if cache_state == CACHE_WARM:
            return DECISION_CACHED, False
        if reachable:
            return DECISION_FRESH, True
        return DECISION_UNAVAILABLE, True

    # always_fetch: the network is always attempted
    if reachable:
        return DECISION_FRESH, True
    if cache_state == CACHE_WARM:
        return DECISION_CACHED, True
    return DECISION_UNAVAILABLE, True


def join_uri(base_uri: str, uri: str) -> str:
    """Resolve an item uri against its repository base; result must be absolute."""
    parsed = urlparse(uri)
    absolute = uri if parsed.scheme else urljoin(base_uri, uri)
    check = urlparse(absolute)
    if not check.scheme or not (check.netloc or check.path):
        raise MalformedUriError(f"cannot resolve {uri!r} against {base_uri!r}")
    return absolute


# ---------------------------------------------------------------------------
# transport


class TransportError(Exception):
    """The remote side could not be reached or did not produce the object."""


@dataclass(frozen=True)
class TransportResult:
    data: bytes
    media_type: str


class HttpTransport:
    """Fetch and probe over HTTP with a hard size cap while streaming."""

    def __init__(self, timeout_s: float = 10.0) -> None:
        self.timeout_s = timeout_s

    def fetch(self, url: str, max_bytes: int) -> TransportResult:
        import requests

        try:
            with requests.get(url, stream=True, timeout=self.timeout_s) as resp:
                if resp.status_code >= 400:
                    raise TransportError(f"HTTP {resp.status_code} for {url}")
                chunks = []
                seen = 0
                for chunk in resp.iter_content(chunk_size=65536):
                    seen += len(chunk)
                    if seen > max_bytes:
                        raise ObjectTooLargeError(
                            f"{url} exceeds cap of {max_bytes} bytes")
                    chunks.append(chunk)
                media_type = resp.headers.get("Content-Type", "application/octet-stream")
                media_type = media_type.split(";")[0].strip() or "application/octet-stream"
                return TransportResult(data=b"".join(chunks), media_type=media_type)
        except ObjectTooLargeError:
            raise
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc

    def probe(self, url: str, timeout_s: float) -> None:
        import requests

        try:
            # any HTTP answer proves the host is up; only transport-level
            # failures count as unreachable
            requests.head(url, timeout=timeout_s, allow_redirects=True)
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc


# ---------------------------------------------------------------------------
# cache


@dataclass(frozen=True)
class CacheEntry:
    hash: str
    size: int
    media_type: str
    fetched_at_ms: int


class ExternalCache:
    """Index of fetched external objects, payloads held by the content store."""

    def __init__(self, root: str | Path, store: ContentStore) -> None:
        self.root = Path(root)
        self.store = store
        self.index_path = self.root / CACHE_INDEX_NAME
        self._lock = threading.Lock()
        self._entries: dict[str, CacheEntry] = self._load()

    @staticmethod
    def _key(repo_id: str, uri: str) -> str:
        return f"{repo_id}|{uri}"

    def _load(self) -> dict[str, CacheEntry]:
        if not self.index_path.exists():
            return {}
        raw = json.loads(self.index_path.read_text(encoding="utf-8"))
        return {k: CacheEntry(**v) for k, v in raw.get("entries", {}).items()}

    def _save(self) -> None:
        doc = {
            "version": 1,
            "entries": {
                k: {
                    "hash": e.hash,
                    "size": e.size,
                    "media_type": e.media_type,
                    "fetched_at_ms": e.fetched_at_ms,
                }
                for k, e in sorted(self._entries.items())
            },
        }
        self.root.mkdir(parents=True, exist_ok=True)
        write_atomic(self.index_path, (json.dumps(doc, indent=2) + "\n").encode("utf-8"))

    def lookup(self, repo_id: str, uri: str) -> CacheEntry | None:
        return self._entries.get(self._key(repo_id, uri))

    def state(self, repo_id: str, uri: str, ttl_s: float, now_ms: int) -> str:
        entry = self.lookup(repo_id, uri)
        if entry is None:
            return CACHE_COLD
        if now_ms - entry.fetched_at_ms > ttl_s * 1000.0:
            return CACHE_EXPIRED
        return CACHE_WARM

    def put(self, repo_id: str, uri: str, data: bytes, media_type: str,
            now_ms: int) -> CacheEntry:
        ref = self.store.put_blob(data, media_type=media_type)
        entry = CacheEntry(hash=ref.hash, size=ref.size,
                           media_type=media_type, fetched_at_ms=now_ms)
        with self._lock:
            self._entries[self._key(repo_id, uri)] = entry
            self._save()
        return entry

    def payload(self, entry: CacheEntry) -> bytes:
        return self.store.get_blob(entry.hash)

    def referenced_hashes(self) -> set[str]:
        return {e.hash for e in self._entries.values()}

    def entries(self) -> dict[str, CacheEntry]:
        return dict(self._entries)

    def drop(self, repo_id: str, uri: str) -> None:
        with self._lock:
            if self._entries.pop(self._key(repo_id, uri), None) is not None:
                self._save()


# ---------------------------------------------------------------------------
# client


@dataclass(frozen=True)
class FetchResult:
    """Outcome of one external fetch. status fresh/cached always carries the
    payload and its ref; unavailable never does."""

    status: str
    origin: tuple[str, str]
    network_attempted: bool
    payload_ref: PayloadRef | None = None
    data: bytes | None = None
    fetched_at_ms: int | None = None


@dataclass(frozen=True)
class RepoStatus:
    repo_id: str
    reachable: bool
    probed_at_ms: int
    latency_ms: float | None = None
    error: str | None = None


@dataclass(frozen=True)
class RepoSnapshot:
    statuses: Mapping[str, RepoStatus] = field(default_factory=dict)

    def reachable(self, repo_id: str) -> bool:
        # a repo we have never probed is given the benefit of the doubt
        status = self.statuses.get(repo_id)
        return True if status is None else status.reachable


def _default_now_ms() -> int:
    return time.time_ns() // 1_000_000


class FederationClient:
    """Fetches external objects through the policy table with a single-flight
    guarantee per (repo, uri)."""

    def __init__(
        self,
        repos: Iterable[ExternalRepository],
        cache: ExternalCache,
        transport: HttpTransport | None = None,
        now_ms: Callable[[], int] = _default_now_ms,
    ) -> None:
        self.repos = {r.repo_id: r for r in repos}
        self.cache = cache
        self.transport = transport or HttpTransport()
        self.now_ms = now_ms
        self._flights: dict[str, threading.Lock] = {}
        self._flights_guard = threading.Lock()
        self._last_probe_ms = 0

    def _flight_lock(self, key: str) -> threading.Lock:
        with self._flights_guard:
            lock = self._flights.get(key)
            if lock is None:
                lock = self._flights[key] = threading.Lock()
            return lock

    def repo(self, repo_id: str) -> ExternalRepository:
        repo = self.repos.get(repo_id)
        if repo is None:
            raise UnknownRepoError(f"no registered repository {repo_id!r}")
        return repo

    def fetch(self, repo_id: str, uri: str) -> FetchResult:
        """Resolve one external object under its repository's cache policy.

        The status reflects what actually happened: a transport failure
        downgrades to the cached or unavailable arm even if a probe snapshot
        claimed the repo was up, and vice versa.
        """
        repo = self.repo(repo_id)
        policy = repo.cache_policy
        origin = (repo_id, uri)
        with self._flight_lock(self.cache._key(repo_id, uri)):
            now = self.now_ms()
            state = self.cache.state(repo_id, uri, policy.ttl, now)

            if policy.mode == "cache_only":
                if state == CACHE_WARM:
                    return self._cached_result(origin, network_attempted=False)
                return FetchResult(DECISION_UNAVAILABLE, origin, network_attempted=False)

            if policy.mode == "prefer_cache" and state == CACHE_WARM:
                return self._cached_result(origin, network_attempted=False)

            # always_fetch, or prefer_cache without a warm entry
            url = join_uri(repo.base_uri, uri)
            try:
                result = self.transport.fetch(url, policy.max_object_bytes)
            except TransportError:
                if policy.mode == "always_fetch" and state == CACHE_WARM:
                    return self._cached_result(origin, network_attempted=True)
                return FetchResult(DECISION_UNAVAILABLE, origin, network_attempted=True)
            entry = self.cache.put(repo_id, uri, result.data, result.media_type,
                                   now_ms=self.now_ms())
            return FetchResult(
                DECISION_FRESH, origin, network_attempted=True,
                payload_ref=PayloadRef(hash=entry.hash, size=entry.size,
                                       media_type=entry.media_type),
                data=result.data, fetched_at_ms=entry.fetched_at_ms)

    def _cached_result(self, origin: tuple[str, str], network_attempted: bool) -> FetchResult:
        entry = self.cache.lookup(*origin)
        assert entry is not None
        return FetchResult(
            DECISION_CACHED, origin, network_attempted=network_attempted,
            payload_ref=PayloadRef(hash=entry.hash, size=entry.size,
                                   media_type=entry.media_type),
            data=self.cache.payload(entry), fetched_at_ms=entry.fetched_at_ms)

    def probe_all(self, timeout_s: float = 3.0) -> RepoSnapshot:
        """Probe every repository concurrently.

        Probes run independently with a hard deadline, so one black-holed
        repository cannot stall the snapshot past the timeout. Timestamps in
        successive snapshots strictly increase.
        """
        from concurrent.futures import ThreadPoolExecutor
        from concurrent.futures import TimeoutError as FutureTimeout

        def probe_one(repo: ExternalRepository) -> RepoStatus:
            started = time.monotonic()
            try:
                self.transport.probe(repo.base_uri, timeout_s)
            except Exception as exc:  # noqa: BLE001 - unreachability is data
                return RepoStatus(repo_id=repo.repo_id, reachable=False,
                                  probed_at_ms=0, error=str(exc) or type(exc).__name__)
            latency = (time.monotonic() - started) * 1000.0
            return RepoStatus(repo_id=repo.repo_id, reachable=True,
                              probed_at_ms=0, latency_ms=latency)

        repos = list(self.repos.values())
        results: list[RepoStatus] = []
        if repos:
            # grace covers thread spawn; a transport ignoring its timeout is
            # abandoned, not waited for
            deadline = time.monotonic() + timeout_s + min(0.1, timeout_s * 0.5)
            pool = ThreadPoolExecutor(max_workers=min(8, len(repos)))
            try:
                futures = [(repo, pool.submit(probe_one, repo)) for repo in repos]
                for repo, future in futures:
                    try:
                        results.append(future.result(
                            timeout=max(0.0, deadline - time.monotonic())))
                    except FutureTimeout:
                        results.append(RepoStatus(repo_id=repo.repo_id, reachable=False,
                                                  probed_at_ms=0, error="probe timeout"))
            finally:
                pool.shutdown(wait=False)

        statuses: dict[str, RepoStatus] = {}
        last_ms = self._last_probe_ms
        for status in results:
            stamp = max(self.now_ms(), last_ms + 1)
            last_ms = stamp
            statuses[status.repo_id] = RepoStatus(
                repo_id=status.repo_id,
                reachable=status.reachable,
                probed_at_ms=stamp,
                latency_ms=status.latency_ms,
                error=status.error,
            )
        self._last_probe_ms = last_ms
        return RepoSnapshot(statuses=statuses)
