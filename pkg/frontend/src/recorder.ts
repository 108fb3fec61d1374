/** Microphone capture: Float32 samples via the Web Audio API, encoded to WAV
 * client-side so the server sees one ingest path. Browser-only module. */

import { encodeWavPcm16 } from "./wav.js";

export class MicRecorder {
  private stream: MediaStream | null = null;
  private audioContext: AudioContext | null = null;
  private processor: ScriptProcessorNode | null = null;
  private chunks: Float32Array[] = [];
  private sampleRate = 0;

  get recording(): boolean {
    return this.processor !== null;
  }

  async start(): Promise<void> {
    if (this.recording) return;
    this.stream = await navigator.mediaDevices.getUserMedia({ audio: true, video: false });
    this.audioContext = new AudioContext();
    this.sampleRate = this.audioContext.sampleRate;
    const source = this.audioContext.createMediaStreamSource(this.stream);
    this.processor = this.audioContext.createScriptProcessor(4096, 1, 1);
    this.chunks = [];
    this.processor.onaudioprocess = (event) => {
      this.chunks.push(new Float32Array(event.inputBuffer.getChannelData(0)));
    };
    source.connect(this.processor);
    this.processor.connect(this.audioContext.destination);
  }

  /** Stop capture and return the recording as WAV bytes. */
  async stop(): Promise<ArrayBuffer> {
    if (!this.processor || !this.audioContext || !this.stream) {
      throw new Error("not recording");
    }
    this.processor.disconnect();
    this.stream.getTracks().forEach((track) => track.stop());
    await this.audioContext.close();
    const total = this.chunks.reduce((n, c) => n + c.length, 0);
    const samples = new Float32Array(total);
    let offset = 0;
    for (const chunk of this.chunks) {
      samples.set(chunk, offset);
      offset += chunk.length;
    }
    const wav = encodeWavPcm16(samples, this.sampleRate);
    this.processor = null;
    this.audioContext = null;
    this.stream = null;
    this.chunks = [];
    return wav;
  }
}
