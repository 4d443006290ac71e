// A serve bundle shaped exactly like the gateway's JSON for the demo tour:
// two rooms, a text-bound mannequin and a video-bound panel in the exhibit
// room, nothing bound in the entrance hall.

import type { TourBundle } from "../src/types.js";

export const TEXT_HASH =
  "cbd66c35fc60c568392a9968ecfe409f416ca601f4a40d6415d056c8a3c97a4e";

export const COSTUME_TEXT =
  "O traje do Pauliteiro usa-se nas danças dos palos da Terra de Miranda.";

export const FIXTURE_BUNDLE: TourBundle = {
  bundle_version: 1,
  tour_id: "terra-de-miranda",
  title: { pt: "Terra de Miranda", en: "Land of Miranda" },
  default_language: "pt",
  entry_env_id: "exhibit-room",
  environments: [
    {
      env_id: "exhibit-room",
      name: { pt: "Sala de Exposição", en: "Exhibit Room" },
      panorama: {
        locator: "/media/pano-exhibit",
        width: 4096,
        height: 2048,
        media_type: "image/jpeg",
      },
      initial_view: { yaw: 310.0, pitch: -5.0 },
      nav_links: [{ direction: { yaw: 95.0, pitch: -12.0 }, target: "entrance-hall" }],
      is_entry: true,
      assets: [
        {
          asset_id: "pauliteiro-mannequin",
          anchor: { yaw: 312.5, pitch: -4.0 },
          marker_style: "dot",
          label: { pt: "Traje do Pauliteiro", en: "Pauliteiro costume" },
          directives: [
            {
              asset_id: "pauliteiro-mannequin",
              content_id: "pauliteiro-costume-pt",
              presentation: "popup_text",
              payload_locator: `/media/${TEXT_HASH}`,
              locator_kind: "internal",
              language: "pt",
              rank: 0,
              media_type: "text/plain; charset=utf-8",
              title: "O traje do Pauliteiro",
              credits: "Museu da Terra de Miranda",
              captions: false,
            },
          ],
        },
        {
          asset_id: "dance-panel",
          anchor: { yaw: 41.0, pitch: 9.5 },
          marker_style: "label",
          label: { pt: "Dança dos Pauliteiros", en: "Pauliteiros dance" },
          directives: [
            {
              asset_id: "dance-panel",
              content_id: "dance-performance-video",
              presentation: "popup_video",
              payload_locator: "https://youtu.be/iF6BUQ5sh-k",
              locator_kind: "embed",
              language: "und",
              rank: 0,
              media_type: null,
              title: "Dança dos Pauliteiros",
              credits: "Associação Cultural e Recreativa Nial de la Boubielha",
              captions: false,
            },
          ],
        },
      ],
    },
    {
      env_id: "entrance-hall",
      name: { pt: "Átrio de Entrada", en: "Entrance Hall" },
      panorama: {
        locator: "/media/pano-entrance",
        width: 4096,
        height: 2048,
        media_type: "image/jpeg",
      },
      initial_view: { yaw: 0.0, pitch: 0.0 },
      nav_links: [{ direction: { yaw: 270.0, pitch: -8.0 }, target: "exhibit-room" }],
      is_entry: false,
      assets: [],
    },
  ],
};

/** content_id -> kind, as the demo catalog declares them. */
export const FIXTURE_KINDS: Record<string, string> = {
  "pauliteiro-costume-pt": "text",
  "dance-performance-video": "video",
};
