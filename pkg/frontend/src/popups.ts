// Content presentation: one modal builder per presentation kind. model_3d
// and game degrade to descriptive placeholder cards so every content kind
// is representable without a 3D or game runtime.

import type { DisplayDirective } from "./types.js";

export interface Popup {
  element: HTMLElement;
  /** Resolves once the payload is displayed (or the placeholder is up). */
  ready: Promise<void>;
}

export interface PopupDeps {
  mediaUrl: (locator: string) => string;
  fetchText: (locator: string) => Promise<string>;
  onClose: () => void;
}

/** youtu.be / watch?v= links become embeddable player URLs; else unchanged. */
export function embedUrl(locator: string): string {
  const short = locator.match(/^https?:\/\/youtu\.be\/([\w-]+)/);
  if (short) return `https://www.youtube.com/embed/${short[1]}`;
  const watch = locator.match(/^https?:\/\/(?:www\.)?youtube\.com\/watch\?v=([\w-]+)/);
  if (watch) return `https://www.youtube.com/embed/${watch[1]}`;
  return locator;
}

function shell(directive: DisplayDirective, deps: PopupDeps): {
  root: HTMLElement;
  body: HTMLElement;
} {
  const root = document.createElement("div");
  root.className = `popup popup-${directive.presentation}`;
  root.dataset.contentId = directive.content_id;

  const header = document.createElement("header");
  const title = document.createElement("h2");
  title.textContent = directive.title;
  const close = document.createElement("button");
  close.className = "popup-close";
  close.textContent = "×";
  close.setAttribute("aria-label", "close");
  close.addEventListener("click", deps.onClose);
  header.append(title, close);

  const body = document.createElement("div");
  body.className = "popup-body";

  const credits = document.createElement("footer");
  credits.className = "popup-credits";
  credits.textContent = directive.credits;

  root.append(header, body, credits);
  return { root, body };
}

function placeholderCard(body: HTMLElement, note: string): void {
  const card = document.createElement("div");
  card.className = "placeholder-card";
  card.textContent = note;
  body.append(card);
}

export function buildPopup(directive: DisplayDirective, deps: PopupDeps): Popup {
  const { root, body } = shell(directive, deps);
  let ready: Promise<void> = Promise.resolve();

  switch (directive.presentation) {
    case "popup_text": {
      const text = document.createElement("p");
      text.className = "popup-text";
      ready = deps
        .fetchText(directive.payload_locator)
        .then((content) => {
          text.textContent = content;
        })
        .catch(() => {
          text.textContent = "";
          retryCard(body, directive, deps);
        });
      body.append(text);
      break;
    }
    case "popup_video": {
      if (directive.locator_kind === "embed") {
        const frame = document.createElement("iframe");
        frame.className = "popup-frame";
        frame.src = embedUrl(directive.payload_locator);
        frame.allow = "autoplay; encrypted-media; picture-in-picture";
        frame.setAttribute("allowfullscreen", "");
        body.append(frame);
      } else {
        const video = document.createElement("video");
        video.controls = true;
        video.src = deps.mediaUrl(directive.payload_locator);
        body.append(video);
      }
      break;
    }
    case "overlay_image": {
      const img = document.createElement("img");
      img.className = "popup-image";
      img.src = deps.mediaUrl(directive.payload_locator);
      img.alt = directive.title;
      body.append(img);
      break;
    }
    case "audio_play": {
      const audio = document.createElement("audio");
      audio.controls = true;
      audio.src = deps.mediaUrl(directive.payload_locator);
      body.append(audio);
      break;
    }
    case "model_3d_view":
      placeholderCard(body, `3D model: ${directive.title}. An interactive ` +
        "viewer for this object is planned; until then this card stands in.");
      break;
    case "game_launch":
      placeholderCard(body, `Mini-game: ${directive.title}. The game runtime ` +
        "is not bundled with the viewer; this card stands in.");
      break;
    default:
      placeholderCard(body, `Unsupported presentation ${directive.presentation}.`);
  }

  return { element: root, ready };
}

function retryCard(body: HTMLElement, directive: DisplayDirective, deps: PopupDeps): void {
  const card = document.createElement("div");
  card.className = "retry-card";
  const note = document.createElement("p");
  note.textContent = "The content failed to load.";
  const retry = document.createElement("button");
  retry.className = "popup-retry";
  retry.textContent = "Retry";
  retry.addEventListener("click", () => {
    void deps.fetchText(directive.payload_locator).then((content) => {
      const text = body.querySelector(".popup-text");
      if (text) text.textContent = content;
      card.remove();
    }).catch(() => undefined);
  });
  card.append(note, retry);
  body.append(card);
}
