"""A small demo tour of the Land of Miranda museum, generated deterministically.

Everything here is pure computation so the checked-in fixture tree can be
regenerated byte-for-byte: panoramas are synthesized PNGs (hand-rolled
encoder, fixed zlib level), payload hashes derive from the literal texts
below, and the manifest builder takes no inputs.
"""

from __future__ import annotations

import hashlib
import struct
import zlib
from dataclasses import replace
from pathlib import Path
from typing import TYPE_CHECKING

from .model import (
    Asset,
    CachePolicy,
    ContentBinding,
    ContentItem,
    Direction,
    Environment,
    ExternalRepository,
    ExternalSource,
    InternalSource,
    NavLink,
    PanoramaSource,
    PayloadRef,
    TourManifest,
    manifest_to_json,
)

if TYPE_CHECKING:
    from .workspace import Workspace

TOUR_ID = "terra-de-miranda"
PANO_WIDTH = 512
PANO_HEIGHT = 256

_TEXT_PT = (
    "Os Pauliteiros de Miranda são grupos de dançadores do Planalto Mirandês. "
    "O traje tradicional inclui camisa de linho bordada, saiote de rendas, "
    "colete de lã, meias brancas e chapéu enfeitado com fitas e flores. "
    "Nas mãos levam os paulitos: dois paus torneados que marcam o ritmo da "
    "dança guerreira ao som da gaita de foles, da caixa e do bombo."
).encode("utf-8")

_TEXT_EN = (
    "The Pauliteiros de Miranda are stick dancers from the Mirandese plateau. "
    "The traditional costume features an embroidered linen shirt, a lace "
    "skirt, a wool vest, white stockings and a hat decorated with ribbons "
    "and flowers. Dancers carry the paulitos, two turned sticks that beat "
    "the rhythm of this martial dance to bagpipes, snare and bass drum."
).encode("utf-8")

TEXT_PAYLOADS: dict[str, tuple[bytes, str]] = {
    "pauliteiro-costume-pt": (_TEXT_PT, "text/plain; charset=utf-8"),
    "pauliteiro-costume-en": (_TEXT_EN, "text/plain; charset=utf-8"),
}

VIDEO_URI = "iF6BUQ5sh-k"
VIDEO_REPO_BASE = "https://youtu.be/"


def payload_for(content_id: str) -> PayloadRef:
    data, media_type = TEXT_PAYLOADS[content_id]
    return PayloadRef(
        hash=hashlib.sha256(data).hexdigest(),
        size=len(data),
        media_type=media_type,
    )


def _png_chunk(tag: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + tag
        + payload
        + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)
    )


def panorama_png(env_id: str, width: int = PANO_WIDTH, height: int = PANO_HEIGHT) -> bytes:
    """Synth a 2:1 RGB gradient panorama, phase-shifted per environment id."""
    phase = int.from_bytes(hashlib.sha256(env_id.encode("utf-8")).digest()[:2], "big")
    rows = bytearray()
    for y in range(height):
        rows.append(0)  # per-row filter byte: none
        for x in range(width):
            rows.append(x * 255 // (width - 1))
            rows.append(y * 255 // (height - 1))
            rows.append((x * 7 + y * 13 + phase) % 256)
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    return (
        b"\x89PNG\r\n\x1a\n"
        + _png_chunk(b"IHDR", ihdr)
        + _png_chunk(b"IDAT", zlib.compress(bytes(rows), 9))
        + _png_chunk(b"IEND", b"")
    )


def demo_manifest() -> TourManifest:
    """The demo tour with file-relative panorama locators (panos/<env>.png)."""

    def pano(env_id: str) -> PanoramaSource:
        return PanoramaSource(
            locator=f"panos/{env_id}.png",
            width=PANO_WIDTH,
            height=PANO_HEIGHT,
            media_type="image/png",
        )

    return TourManifest(
        tour_id=TOUR_ID,
        title={
            "pt": "Terra de Miranda",
            "en": "Land of Miranda",
            "mwl": "Tierra de Miranda",
        },
        default_language="pt",
        environments=(
            Environment(
                env_id="exhibit-room",
                name={"pt": "Sala de Exposição", "en": "Exhibit Room"},
                panorama=pano("exhibit-room"),
                initial_view=Direction(yaw=310.0, pitch=-5.0),
                nav_links=(
                    NavLink(direction=Direction(yaw=95.0, pitch=-12.0), target="entrance-hall"),
                ),
                is_entry=True,
            ),
            Environment(
                env_id="entrance-hall",
                name={"pt": "Átrio de Entrada", "en": "Entrance Hall"},
                panorama=pano("entrance-hall"),
                initial_view=Direction(yaw=0.0, pitch=0.0),
                nav_links=(
                    NavLink(direction=Direction(yaw=270.0, pitch=-8.0), target="exhibit-room"),
                ),
            ),
        ),
        assets=(
            Asset(
                asset_id="pauliteiro-mannequin",
                environment_id="exhibit-room",
                anchor=Direction(yaw=312.5, pitch=-4.0),
                marker_style="dot",
                label={"pt": "Traje do Pauliteiro", "en": "Pauliteiro costume"},
                bindings=(
                    ContentBinding(content_id="pauliteiro-costume-pt", presentation="popup_text"),
                ),
            ),
            Asset(
                asset_id="dance-panel",
                environment_id="exhibit-room",
                anchor=Direction(yaw=41.0, pitch=9.5),
                marker_style="label",
                label={"pt": "Dança dos Pauliteiros", "en": "Pauliteiros dance"},
                bindings=(
                    ContentBinding(content_id="dance-performance-video", presentation="popup_video"),
                ),
            ),
            Asset(
                asset_id="loom-display",
                environment_id="entrance-hall",
                anchor=Direction(yaw=182.0, pitch=-2.5),
                marker_style="ring",
                label={"pt": "Tear tradicional", "en": "Traditional loom"},
            ),
        ),
        content_catalog=(
            ContentItem(
                content_id="pauliteiro-costume-pt",
                kind="text",
                language="pt",
                title="O traje do Pauliteiro",
                credits="Museu da Terra de Miranda",
                source=InternalSource(payload=payload_for("pauliteiro-costume-pt")),
                variant_group="pauliteiro-costume",
            ),
            ContentItem(
                content_id="pauliteiro-costume-en",
                kind="text",
                language="en",
                title="The Pauliteiro costume",
                credits="Museu da Terra de Miranda",
                source=InternalSource(payload=payload_for("pauliteiro-costume-en")),
                variant_group="pauliteiro-costume",
            ),
            ContentItem(
                content_id="dance-performance-video",
                kind="video",
                language="und",
                title="Dança dos Pauliteiros",
                credits="Associação Cultural e Recreativa Nial de la Boubielha",
                source=ExternalSource(repo_id="video-archive", uri=VIDEO_URI, embed=True),
            ),
        ),
        external_repos=(
            ExternalRepository(
                repo_id="video-archive",
                owner="Associação Cultural",
                base_uri=VIDEO_REPO_BASE,
                cache_policy=CachePolicy(mode="prefer_cache", ttl=86400.0,
                                         max_object_bytes=64 * 1024 * 1024),
            ),
        ),
    )


def write_fixture_tree(root: str | Path) -> Path:
    """Write tour.json plus panos/ under root; returns the manifest path."""
    root = Path(root)
    manifest = demo_manifest()
    (root / "panos").mkdir(parents=True, exist_ok=True)
    for env in manifest.environments:
        (root / "panos" / f"{env.env_id}.png").write_bytes(panorama_png(env.env_id))
    manifest_path = root / "tour.json"
    manifest_path.write_text(manifest_to_json(manifest), encoding="utf-8")
    return manifest_path


def install_demo(ws: Workspace) -> TourManifest:
    """Load the demo tour into a workspace, moving file payloads into the store."""
    manifest = demo_manifest()
    for item in manifest.content_catalog:
        if isinstance(item.source, InternalSource):
            data, _ = TEXT_PAYLOADS[item.content_id]
            ws.store.put_content(item, data, replace_existing=True)
        else:
            ws.store.put_content(item, None, replace_existing=True)
    environments = []
    for env in manifest.environments:
        ref = ws.store.put_blob(panorama_png(env.env_id), media_type="image/png")
        environments.append(replace(
            env, panorama=replace(env.panorama, locator=f"blob:sha256:{ref.hash}"),
        ))
    installed = replace(manifest, environments=tuple(environments))
    ws.save_tour(installed)
    return installed
