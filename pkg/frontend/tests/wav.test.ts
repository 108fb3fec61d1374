import { describe, expect, it } from "vitest";

import { encodeWavPcm16, parseWavInfo, wavDurationSeconds } from "../src/wav.js";

function sine(freq: number, seconds: number, rate: number): Float32Array {
  const out = new Float32Array(Math.round(seconds * rate));
  for (let i = 0; i < out.length; i++) {
    out[i] = 0.5 * Math.sin((2 * Math.PI * freq * i) / rate);
  }
  return out;
}

describe("encodeWavPcm16", () => {
  it("writes a header the parser round-trips", () => {
    const samples = sine(440, 0.5, 16000);
    const wav = encodeWavPcm16(samples, 16000);
    const info = parseWavInfo(wav);
    expect(info.sampleRate).toBe(16000);
    expect(info.channels).toBe(1);
    expect(info.frames).toBe(samples.length);
    expect(info.durationSeconds).toBeCloseTo(0.5, 6);
  });

  it("emits the canonical 44-byte header", () => {
    const wav = encodeWavPcm16(new Float32Array([0, 0.5, -0.5]), 8000);
    const bytes = new Uint8Array(wav);
    expect(String.fromCharCode(...bytes.slice(0, 4))).toBe("RIFF");
    expect(String.fromCharCode(...bytes.slice(8, 12))).toBe("WAVE");
    expect(wav.byteLength).toBe(44 + 6);
  });

  it("clamps out-of-range samples", () => {
    const wav = encodeWavPcm16(new Float32Array([2.0, -2.0]), 8000);
    const view = new DataView(wav);
    expect(view.getInt16(44, true)).toBe(32767);
    expect(view.getInt16(46, true)).toBe(-32768);
  });
});

describe("parseWavInfo", () => {
  it("rejects non-wav buffers", () => {
    expect(() => parseWavInfo(new TextEncoder().encode("nope").buffer as ArrayBuffer)).toThrow();
  });

  it("handles stereo frame counting", () => {
    // hand-build a 2-channel, 4-frame PCM16 file
    const frames = 4;
    const data = new ArrayBuffer(44 + frames * 4);
    const view = new DataView(data);
    const ascii = (offset: number, text: string) => {
      for (let i = 0; i < text.length; i++) view.setUint8(offset + i, text.charCodeAt(i));
    };
    ascii(0, "RIFF");
    view.setUint32(4, 36 + frames * 4, true);
    ascii(8, "WAVE");
    ascii(12, "fmt ");
    view.setUint32(16, 16, true);
    view.setUint16(20, 1, true);
    view.setUint16(22, 2, true);
    view.setUint32(24, 16000, true);
    view.setUint32(28, 64000, true);
    view.setUint16(32, 4, true);
    view.setUint16(34, 16, true);
    ascii(36, "data");
    view.setUint32(40, frames * 4, true);
    const info = parseWavInfo(data);
    expect(info.channels).toBe(2);
    expect(info.frames).toBe(frames);
    expect(info.durationSeconds).toBeCloseTo(frames / 16000, 9);
  });

  it("duration helper matches info", () => {
    const wav = encodeWavPcm16(sine(220, 1.25, 16000), 16000);
    expect(wavDurationSeconds(wav)).toBeCloseTo(1.25, 6);
  });
});
