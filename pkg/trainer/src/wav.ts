/**
 * WAV reading for dataset ingestion. Unlike the detector, the trainer
 * accepts any PCM16 rate/channel layout: clips are downmixed to mono and
 * linearly resampled to the pipeline's 16 kHz.
 */

import * as fs from 'fs';

export const TARGET_RATE = 16000;

export interface WavData {
  samples: Float64Array; // mono, normalized to [-1, 1]
  sampleRate: number;
}

export class MalformedWav extends Error {}

export function decodeWav(buf: Buffer): WavData {
  if (buf.length < 12 || buf.toString('ascii', 0, 4) !== 'RIFF' ||
      buf.toString('ascii', 8, 12) !== 'WAVE') {
    throw new MalformedWav('not a RIFF/WAVE file');
  }
  let pos = 12;
  let channels = 0;
  let rate = 0;
  let bits = 0;
  let fmtSeen = false;
  while (pos + 8 <= buf.length) {
    const id = buf.toString('ascii', pos, pos + 4);
    const size = buf.readUInt32LE(pos + 4);
    pos += 8;
    if (id === 'fmt ') {
      if (size < 16 || pos + 16 > buf.length) throw new MalformedWav('bad fmt chunk');
      const code = buf.readUInt16LE(pos);
      if (code !== 1) throw new MalformedWav(`unsupported format code ${code}`);
      channels = buf.readUInt16LE(pos + 2);
      rate = buf.readUInt32LE(pos + 4);
      bits = buf.readUInt16LE(pos + 14);
      if (bits !== 16) throw new MalformedWav(`expected 16-bit samples, got ${bits}`);
      fmtSeen = true;
    } else if (id === 'data') {
      if (!fmtSeen) throw new MalformedWav('data chunk precedes fmt chunk');
      if (pos + size > buf.length) throw new MalformedWav('truncated data chunk');
      const frames = Math.floor(size / 2 / channels);
      const mono = new Float64Array(frames);
      for (let i = 0; i < frames; i++) {
        let acc = 0;
        for (let c = 0; c < channels; c++) {
          acc += buf.readInt16LE(pos + 2 * (i * channels + c));
        }
        mono[i] = acc / channels / 32768.0;
      }
      return { samples: mono, sampleRate: rate };
    }
    pos += size + (size % 2);
  }
  throw new MalformedWav('no data chunk found');
}

export function readWav(path: string): WavData {
  return decodeWav(fs.readFileSync(path));
}

/** Linear-interpolation resampling; output length = round(n * target/rate). */
export function resampleTo16k(input: WavData): Float64Array {
  if (input.sampleRate === TARGET_RATE) return input.samples;
  const src = input.samples;
  const n = Math.round((src.length * TARGET_RATE) / input.sampleRate);
  const out = new Float64Array(n);
  const step = input.sampleRate / TARGET_RATE;
  for (let i = 0; i < n; i++) {
    const pos = i * step;
    const lo = Math.floor(pos);
    const hi = Math.min(lo + 1, src.length - 1);
    const frac = pos - lo;
    out[i] = src[Math.min(lo, src.length - 1)] * (1 - frac) + src[hi] * frac;
  }
  return out;
}

/** Serialize mono float samples as 16 kHz PCM16 (fixture/testing helper). */
export function encodeWav(samples: ArrayLike<number>, sampleRate = TARGET_RATE,
                          channels = 1): Buffer {
  const frames = Math.floor(samples.length / channels);
  const data = Buffer.alloc(samples.length * 2);
  for (let i = 0; i < samples.length; i++) {
    const v = Math.max(-32768, Math.min(32767, Math.round(samples[i] * 32768)));
    data.writeInt16LE(v, i * 2);
  }
  const header = Buffer.alloc(44);
  header.write('RIFF', 0, 'ascii');
  header.writeUInt32LE(36 + data.length, 4);
  header.write('WAVE', 8, 'ascii');
  header.write('fmt ', 12, 'ascii');
  header.writeUInt32LE(16, 16);
  header.writeUInt16LE(1, 20);
  header.writeUInt16LE(channels, 22);
  header.writeUInt32LE(sampleRate, 24);
  header.writeUInt32LE(sampleRate * channels * 2, 28);
  header.writeUInt16LE(channels * 2, 32);
  header.writeUInt16LE(16, 34);
  header.write('data', 36, 'ascii');
  header.writeUInt32LE(data.length, 40);
  void frames;
  return Buffer.concat([header, data]);
}
