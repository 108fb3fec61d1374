/** Session view model: the answer plus one audio player per context segment,
 * ranked hits first so the rank-1 segment always renders at the top. */

import type { AnswerResponse, QueryInput, SegmentView } from "./types.js";

export interface PlayerView {
  segmentId: string;
  rank: number | null;
  score: number | null;
  speaker: string;
  startS: number;
  endS: number;
  transcript: string | null;
  audioUrl: string;
  prevId: string | null;
  nextId: string | null;
}

export interface SessionView {
  query: QueryInput;
  answerText: string;
  modelId: string;
  promptHash: string;
  reranked: boolean;
  players: PlayerView[];
  error: string | null;
}

/** Players map one-to-one onto the response segments; ranked hits come first
 * in rank order, neighbor-only context follows in service order. */
export function buildSession(
  query: QueryInput,
  response: AnswerResponse,
  audioUrlFor: (segmentId: string) => string,
): SessionView {
  const ranked = response.segments
    .filter((s) => s.rank !== null)
    .sort((a, b) => (a.rank as number) - (b.rank as number));
  const context = response.segments.filter((s) => s.rank === null);
  const players = [...ranked, ...context].map((s) => toPlayer(s, audioUrlFor));
  return {
    query,
    answerText: response.answer,
    modelId: response.model_id,
    promptHash: response.prompt_hash,
    reranked: response.reranked,
    players,
    error: null,
  };
}

/** A failed submission keeps the typed/recorded query so nothing is lost. */
export function failedSession(query: QueryInput, message: string): SessionView {
  return {
    query,
    answerText: "",
    modelId: "",
    promptHash: "",
    reranked: false,
    players: [],
    error: message,
  };
}

function toPlayer(s: SegmentView, audioUrlFor: (id: string) => string): PlayerView {
  return {
    segmentId: s.segment_id,
    rank: s.rank,
    score: s.score,
    speaker: s.speaker_id,
    startS: s.start_s,
    endS: s.end_s,
    transcript: s.transcript,
    audioUrl: audioUrlFor(s.segment_id),
    prevId: s.prev_id,
    nextId: s.next_id,
  };
}

/** Neighbor jump: the player for current's prev/next link, null disables the button. */
export function neighborPlayer(
  players: PlayerView[],
  currentId: string,
  direction: "prev" | "next",
): PlayerView | null {
  const current = players.find((p) => p.segmentId === currentId);
  if (!current) return null;
  const targetId = direction === "prev" ? current.prevId : current.nextId;
  if (targetId === null) return null;
  return players.find((p) => p.segmentId === targetId) ?? null;
}

/** The session is stateless against the API: text queries round-trip through
 * the URL hash so a reload (or a shared link) re-submits the same query. */
export function shareHash(query: QueryInput): string {
  const params = new URLSearchParams();
  if (query.text) params.set("text", query.text);
  if (query.k !== undefined) params.set("k", String(query.k));
  if (query.rerank) params.set("rerank", "1");
  return params.toString() ? `#${params}` : "";
}

export function parseShareHash(hash: string): QueryInput | null {
  const trimmed = hash.startsWith("#") ? hash.slice(1) : hash;
  if (!trimmed) return null;
  const params = new URLSearchParams(trimmed);
  const query: QueryInput = {};
  const text = params.get("text");
  if (text) query.text = text;
  const k = params.get("k");
  if (k) query.k = Number(k);
  if (params.get("rerank") === "1") query.rerank = true;
  return Object.keys(query).length ? query : null;
}
