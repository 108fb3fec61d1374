/** DOM wiring for the query console. Logic lives in api.ts / session.ts /
 * wav.ts / recorder.ts; this file only renders. */

import { ServiceError, VoxRagClient } from "./api.js";
import { MicRecorder } from "./recorder.js";
import {
  PlayerView,
  SessionView,
  buildSession,
  failedSession,
  neighborPlayer,
  parseShareHash,
  shareHash,
} from "./session.js";
import type { QueryInput } from "./types.js";

const client = new VoxRagClient(serviceBase());
const recorder = new MicRecorder();
let capturedAudio: ArrayBuffer | null = null;
let session: SessionView | null = null;

function serviceBase(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("service") ?? "";
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function currentQuery(): QueryInput {
  const query: QueryInput = {};
  const text = el<HTMLInputElement>("query-text").value.trim();
  if (text) query.text = text;
  if (capturedAudio) query.audio = capturedAudio;
  const k = Number(el<HTMLInputElement>("query-k").value);
  if (Number.isFinite(k) && k > 0) query.k = k;
  if (el<HTMLInputElement>("query-rerank").checked) query.rerank = true;
  return query;
}

async function submit(query: QueryInput): Promise<void> {
  el<HTMLButtonElement>("submit").disabled = true;
  el<HTMLElement>("status").textContent = "retrieving…";
  try {
    const response = await client.answer(query);
    session = buildSession(query, response, (id) => client.segmentAudioUrl(id));
    window.location.hash = shareHash(query);
  } catch (error) {
    if ((error as Error).name === "AbortError") return; // superseded by a newer query
    const message = error instanceof ServiceError
      ? `service error ${error.status}: ${error.message}`
      : `service unreachable: ${(error as Error).message}`;
    session = failedSession(query, message);
  } finally {
    el<HTMLButtonElement>("submit").disabled = false;
    el<HTMLElement>("status").textContent = "";
  }
  render();
}

function render(): void {
  if (!session) return;
  const banner = el<HTMLElement>("error-banner");
  banner.hidden = session.error === null;
  banner.textContent = session.error ?? "";
  el<HTMLElement>("answer").textContent = session.answerText;
  el<HTMLElement>("answer-meta").textContent = session.answerText
    ? `model ${session.modelId} · prompt ${session.promptHash.slice(0, 12)}` +
      (session.reranked ? " · reranked" : "")
    : "";
  const list = el<HTMLElement>("players");
  list.replaceChildren();
  for (const player of session.players) {
    list.appendChild(renderPlayer(player));
  }
}

function renderPlayer(player: PlayerView): HTMLElement {
  const card = document.createElement("article");
  card.className = "player";
  card.dataset.segmentId = player.segmentId;

  const head = document.createElement("header");
  const rank = player.rank !== null ? `#${player.rank}` : "context";
  const score = player.score !== null ? ` · score ${player.score.toFixed(4)}` : "";
  head.textContent = `${rank} · ${player.speaker}${score} · ` +
    `${player.startS.toFixed(1)}s–${player.endS.toFixed(1)}s`;
  card.appendChild(head);

  if (player.transcript) {
    const text = document.createElement("p");
    text.textContent = player.transcript;
    card.appendChild(text);
  }

  const audio = document.createElement("audio");
  audio.controls = true;
  audio.preload = "none";
  audio.src = player.audioUrl;
  card.appendChild(audio);

  const nav = document.createElement("div");
  for (const direction of ["prev", "next"] as const) {
    const button = document.createElement("button");
    button.textContent = direction === "prev" ? "◀ prev" : "next ▶";
    const target = session ? neighborPlayer(session.players, player.segmentId, direction) : null;
    button.disabled = target === null;
    button.addEventListener("click", () => {
      if (!target) return;
      const card2 = document.querySelector(`[data-segment-id="${target.segmentId}"] audio`);
      if (card2 instanceof HTMLAudioElement) {
        card2.scrollIntoView({ behavior: "smooth", block: "center" });
        void card2.play();
      }
    });
    nav.appendChild(button);
  }
  card.appendChild(nav);
  return card;
}

function wireControls(): void {
  el<HTMLButtonElement>("submit").addEventListener("click", () => void submit(currentQuery()));

  const recordButton = el<HTMLButtonElement>("record");
  recordButton.addEventListener("click", async () => {
    if (!recorder.recording) {
      await recorder.start();
      recordButton.textContent = "stop recording";
    } else {
      capturedAudio = await recorder.stop();
      recordButton.textContent = "record";
      el<HTMLElement>("audio-state").textContent =
        `recorded ${(capturedAudio.byteLength / 1024).toFixed(0)} KiB`;
    }
  });

  el<HTMLInputElement>("upload").addEventListener("change", async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (file) {
      capturedAudio = await file.arrayBuffer();
      el<HTMLElement>("audio-state").textContent = `loaded ${file.name}`;
    }
  });

  const restored = parseShareHash(window.location.hash);
  if (restored?.text) {
    el<HTMLInputElement>("query-text").value = restored.text;
    if (restored.k) el<HTMLInputElement>("query-k").value = String(restored.k);
    el<HTMLInputElement>("query-rerank").checked = restored.rerank === true;
    void submit(restored);
  }
}

wireControls();
