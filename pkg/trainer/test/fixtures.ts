/** Synthetic audio builders shared by the trainer tests. */

import { seededRandom } from '../src/dataset.js';

export const RATE = 16000;

export function silence(seconds = 1): Float64Array {
  return new Float64Array(Math.round(seconds * RATE));
}

export function sine(freqHz: number, seconds = 1, amplitude = 0.5): Float64Array {
  const out = new Float64Array(Math.round(seconds * RATE));
  for (let i = 0; i < out.length; i++) {
    out[i] = amplitude * Math.sin((2 * Math.PI * freqHz * i) / RATE);
  }
  return out;
}

export function chirp(f0: number, f1: number, seconds = 1, amplitude = 0.5): Float64Array {
  const n = Math.round(seconds * RATE);
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    const t = i / RATE;
    const phase = 2 * Math.PI * (f0 * t + ((f1 - f0) * t * t) / (2 * seconds));
    out[i] = amplitude * Math.sin(phase);
  }
  return out;
}

export function noiseBurst(startS: number, lengthS: number, seed = 0,
                           seconds = 1, amplitude = 0.5): Float64Array {
  const rand = seededRandom(seed);
  const out = new Float64Array(Math.round(seconds * RATE));
  const a = Math.round(startS * RATE);
  const b = Math.min(out.length, a + Math.round(lengthS * RATE));
  for (let i = a; i < b; i++) out[i] = amplitude * (2 * rand() - 1);
  return out;
}

/** Cough stand-in: wideband burst with a decaying voiced tail. */
export function coughLike(onsetS = 0.3, seed = 5, seconds = 1): Float64Array {
  const rand = seededRandom(seed);
  const n = Math.round(seconds * RATE);
  const out = new Float64Array(n);
  const a = Math.round(onsetS * RATE);
  const burstLen = Math.round(0.08 * RATE);
  for (let i = 0; i < burstLen && a + i < n; i++) {
    out[a + i] = 0.8 * Math.exp(-i / RATE / 0.02) * (2 * rand() - 1);
  }
  const tailLen = Math.round(0.25 * RATE);
  for (let i = 0; i < tailLen && a + burstLen + i < n; i++) {
    const t = i / RATE;
    out[a + burstLen + i] += 0.25 * Math.exp(-t / 0.1) * Math.sin(2 * Math.PI * 350 * t);
  }
  return out;
}
