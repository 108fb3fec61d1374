/** Wire types of the voxrag service. */

export interface SegmentView {
  segment_id: string;
  episode_id: string;
  start_s: number;
  end_s: number;
  speaker_id: string;
  transcript: string | null;
  prev_id: string | null;
  next_id: string | null;
  rank: number | null;
  score: number | null;
}

export interface AnswerResponse {
  answer: string;
  model_id: string;
  prompt_hash: string;
  segments: SegmentView[];
  reranked: boolean;
}

export interface QueryInput {
  /** Encoded WAV bytes of the recorded or uploaded query. */
  audio?: ArrayBuffer;
  /** Typed question text; skips server-side query transcription. */
  text?: string;
  k?: number;
  rerank?: boolean;
}
