/** Client-side WAV encoding (for microphone capture) and header parsing. */

export function encodeWavPcm16(samples: Float32Array, sampleRate: number): ArrayBuffer {
  const dataLength = samples.length * 2;
  const buffer = new ArrayBuffer(44 + dataLength);
  const view = new DataView(buffer);
  writeAscii(view, 0, "RIFF");
  view.setUint32(4, 36 + dataLength, true);
  writeAscii(view, 8, "WAVE");
  writeAscii(view, 12, "fmt ");
  view.setUint32(16, 16, true);
  view.setUint16(20, 1, true); // PCM
  view.setUint16(22, 1, true); // mono
  view.setUint32(24, sampleRate, true);
  view.setUint32(28, sampleRate * 2, true);
  view.setUint16(32, 2, true);
  view.setUint16(34, 16, true);
  writeAscii(view, 36, "data");
  view.setUint32(40, dataLength, true);
  for (let i = 0; i < samples.length; i++) {
    const clamped = Math.max(-1, Math.min(1, samples[i]));
    const quantized = Math.max(-32768, Math.min(32767, Math.round(clamped * 32768)));
    view.setInt16(44 + i * 2, quantized, true);
  }
  return buffer;
}

export interface WavInfo {
  sampleRate: number;
  channels: number;
  frames: number;
  durationSeconds: number;
}

/** Parse the fmt and data chunks of a RIFF/WAVE buffer. */
export function parseWavInfo(buffer: ArrayBuffer): WavInfo {
  const view = new DataView(buffer);
  if (buffer.byteLength < 12 || ascii(view, 0, 4) !== "RIFF" || ascii(view, 8, 4) !== "WAVE") {
    throw new Error("not a RIFF/WAVE buffer");
  }
  let pos = 12;
  let sampleRate = 0;
  let channels = 0;
  let bitsPerSample = 0;
  let dataLength = -1;
  while (pos + 8 <= buffer.byteLength) {
    const chunkId = ascii(view, pos, 4);
    const size = view.getUint32(pos + 4, true);
    if (chunkId === "fmt ") {
      channels = view.getUint16(pos + 10, true);
      sampleRate = view.getUint32(pos + 12, true);
      bitsPerSample = view.getUint16(pos + 22, true);
    } else if (chunkId === "data") {
      dataLength = Math.min(size, buffer.byteLength - pos - 8);
    }
    pos += 8 + size + (size % 2);
  }
  if (sampleRate === 0 || channels === 0 || dataLength < 0) {
    throw new Error("missing fmt or data chunk");
  }
  const bytesPerFrame = channels * (bitsPerSample / 8);
  const frames = Math.floor(dataLength / bytesPerFrame);
  return { sampleRate, channels, frames, durationSeconds: frames / sampleRate };
}

export function wavDurationSeconds(buffer: ArrayBuffer): number {
  return parseWavInfo(buffer).durationSeconds;
}

function writeAscii(view: DataView, offset: number, text: string): void {
  for (let i = 0; i < text.length; i++) {
    view.setUint8(offset + i, text.charCodeAt(i));
  }
}

function ascii(view: DataView, offset: number, length: number): string {
  let out = "";
  for (let i = 0; i < length; i++) {
    out += String.fromCharCode(view.getUint8(offset + i));
  }
  return out;
}
