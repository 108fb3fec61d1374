"""voxrag: transcription-free speech-to-speech retrieval-augmented generation.

Spoken audio is indexed into speaker-attributed segments, retrieved for
spoken queries by cosine similarity over audio embeddings, answered from the
retrieved transcripts, and evaluated with LLM-judge metrics and paired
statistics.
"""

from .audio import (AudioBuffer, SpeechSpan, VadConfig, detect_speech, import_spans,
                    load_audio, resample, save_wav, to_mono)
from .config import EngineConfig, load_config
from .embedding import Embedding, EmbedderConfig, embed, embed_many, l2_normalize
from .engine import AnswerBundle, Engine
from .generation import Answer, Prompt, build_prompt, generate
from .index import Index, SearchHit
from .retrieval import RetrievalResult, process_query, rerank, retrieve
from .segmentation import Segment, SpeakerTurn, fuse, parse_rttm, slice_audio
from .store import IngestSummary, SegmentStore, ingest_episode

__version__ = "0.1.0"

__all__ = [
    "Answer", "AnswerBundle", "AudioBuffer", "Embedding", "EmbedderConfig", "Engine",
    "EngineConfig", "Index", "IngestSummary", "Prompt", "RetrievalResult", "SearchHit",
    "Segment", "SegmentStore", "SpeakerTurn", "SpeechSpan", "VadConfig", "build_prompt",
    "detect_speech", "embed", "embed_many", "fuse", "generate", "import_spans",
    "ingest_episode", "l2_normalize", "load_audio", "load_config", "parse_rttm",
    "process_query", "rerank", "resample", "retrieve", "save_wav", "slice_audio",
    "to_mono",
]
