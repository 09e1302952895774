/**
 * Mel-cepstral features matching the detector's extractor.
 *
 * The detector and this trainer are built independently, so feature
 * agreement is enforced by a parity test (1e-4 per coefficient) rather
 * than shared code. Every constant here (hop grid, Hann window, FFT
 * sizing, filterbank construction, log floor, cosine transform) mirrors
 * the detector's choices exactly.
 */

export const SAMPLE_RATE = 16000;
export const SEGMENT_SAMPLES = 16000;
export const LOG_ENERGY_FLOOR = 1e-10;

export interface MfccConfig {
  nMfcc: number;
  nMelFilters: number;
  frameLengthMs: number;
  overlapPct: number;
  fminHz: number;
  fmaxHz: number;
}

export const DEFAULT_CONFIG: MfccConfig = {
  nMfcc: 40, nMelFilters: 40, frameLengthMs: 5, overlapPct: 25,
  fminHz: 0, fmaxHz: 8000,
};

export function makeConfig(frameLengthMs: number, overlapPct: number): MfccConfig {
  return { ...DEFAULT_CONFIG, frameLengthMs, overlapPct };
}

export function hopMs(cfg: MfccConfig): number {
  return cfg.frameLengthMs * (1 - cfg.overlapPct / 100);
}

export function nFrames(cfg: MfccConfig): number {
  return Math.ceil(1000 / hopMs(cfg));
}

export function frameLengthSamples(cfg: MfccConfig): number {
  return Math.round((cfg.frameLengthMs * SAMPLE_RATE) / 1000);
}

export function fftSize(cfg: MfccConfig): number {
  let size = 1;
  while (size < frameLengthSamples(cfg)) size *= 2;
  return size;
}

export function hzToMel(f: number): number {
  return 2595 * Math.log10(1 + f / 700);
}

export function melToHz(m: number): number {
  return 700 * (Math.pow(10, m / 2595) - 1);
}

/** In-place iterative radix-2 FFT over interleaved re/im arrays. */
export function fftRadix2(re: Float64Array, im: Float64Array): void {
  const n = re.length;
  if ((n & (n - 1)) !== 0) throw new Error(`FFT size ${n} is not a power of two`);
  for (let i = 1, j = 0; i < n; i++) {
    let bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      [re[i], re[j]] = [re[j], re[i]];
      [im[i], im[j]] = [im[j], im[i]];
    }
  }
  for (let len = 2; len <= n; len <<= 1) {
    const ang = (-2 * Math.PI) / len;
    const wRe = Math.cos(ang);
    const wIm = Math.sin(ang);
    for (let i = 0; i < n; i += len) {
      let curRe = 1;
      let curIm = 0;
      for (let k = 0; k < len / 2; k++) {
        const a = i + k;
        const b = i + k + len / 2;
        const tRe = re[b] * curRe - im[b] * curIm;
        const tIm = re[b] * curIm + im[b] * curRe;
        re[b] = re[a] - tRe;
        im[b] = im[a] - tIm;
        re[a] += tRe;
        im[a] += tIm;
        const nextRe = curRe * wRe - curIm * wIm;
        curIm = curRe * wIm + curIm * wRe;
        curRe = nextRe;
      }
    }
  }
}

/** Magnitude-squared spectrum of a zero-padded frame, bins 0..size/2. */
export function powerSpectrum(frame: Float64Array, size: number): Float64Array {
  const re = new Float64Array(size);
  const im = new Float64Array(size);
  re.set(frame.subarray(0, Math.min(frame.length, size)));
  fftRadix2(re, im);
  const out = new Float64Array(size / 2 + 1);
  for (let k = 0; k <= size / 2; k++) out[k] = re[k] * re[k] + im[k] * im[k];
  return out;
}

/** Periodic Hann window. */
export function hannWindow(n: number): Float64Array {
  const w = new Float64Array(n);
  for (let i = 0; i < n; i++) w[i] = 0.5 - 0.5 * Math.cos((2 * Math.PI * i) / n);
  return w;
}

export class DegenerateFilter extends Error {}

/**
 * Triangular mel filterbank, rows = filters, columns = FFT bins. A filter
 * narrower than the bin spacing snaps weight 1.0 onto the bin nearest its
 * center; two snapped filters on one bin make the bank unusable.
 */
export function melFilterbank(cfg: MfccConfig): Float64Array[] {
  const size = fftSize(cfg);
  const nBins = size / 2 + 1;
  const binHz = SAMPLE_RATE / size;
  const pts = new Float64Array(cfg.nMelFilters + 2);
  const melMin = hzToMel(cfg.fminHz);
  const melMax = hzToMel(cfg.fmaxHz);
  for (let i = 0; i < pts.length; i++) {
    pts[i] = melToHz(melMin + ((melMax - melMin) * i) / (cfg.nMelFilters + 1));
  }
  const bank: Float64Array[] = [];
  const snapped = new Map<number, number>();
  for (let k = 0; k < cfg.nMelFilters; k++) {
    const [left, center, right] = [pts[k], pts[k + 1], pts[k + 2]];
    const row = new Float64Array(nBins);
    let any = false;
    for (let b = 0; b < nBins; b++) {
      const f = b * binHz;
      const w = Math.min((f - left) / (center - left), (right - f) / (right - center));
      if (w > 0) {
        row[b] = w;
        any = true;
      }
    }
    if (!any) {
      const snapBin = Math.min(Math.round(center / binHz), nBins - 1);
      const prior = snapped.get(snapBin);
      if (prior !== undefined) {
        throw new DegenerateFilter(
          `filters ${prior} and ${k} both collapse onto FFT bin ${snapBin}`);
      }
      snapped.set(snapBin, k);
      row[snapBin] = 1.0;
    }
    bank.push(row);
  }
  return bank;
}

/** Cosine transform rows for coefficients 1..nMfcc over N filter bands. */
export function dctBasis(nMfcc: number, nFilters: number): Float64Array[] {
  const rows: Float64Array[] = [];
  for (let i = 1; i <= nMfcc; i++) {
    const row = new Float64Array(nFilters);
    for (let j = 1; j <= nFilters; j++) {
      row[j - 1] = Math.sqrt(2 / nFilters) * Math.cos((i * Math.PI * (j - 0.5)) / nFilters);
    }
    rows.push(row);
  }
  return rows;
}

/**
 * Feature image for one 1 s segment: rows = coefficients, columns =
 * frames, flattened row-major into a Float64Array.
 */
export function mfcc(segment: Float64Array, cfg: MfccConfig,
                     bank?: Float64Array[]): { data: Float64Array; nMfcc: number; nFrames: number } {
  if (segment.length !== SEGMENT_SAMPLES) {
    throw new Error(`expected a ${SEGMENT_SAMPLES}-sample segment, got ${segment.length}`);
  }
  const frames = nFrames(cfg);
  const frameLen = frameLengthSamples(cfg);
  const hopSamples = (hopMs(cfg) * SAMPLE_RATE) / 1000;
  const size = fftSize(cfg);
  const window = hannWindow(frameLen);
  const filterbank = bank ?? melFilterbank(cfg);
  const basis = dctBasis(cfg.nMfcc, cfg.nMelFilters);

  const out = new Float64Array(cfg.nMfcc * frames);
  const frame = new Float64Array(frameLen);
  const logs = new Float64Array(cfg.nMelFilters);
  for (let t = 0; t < frames; t++) {
    const start = Math.round(t * hopSamples);
    frame.fill(0);
    const avail = Math.max(0, Math.min(frameLen, SEGMENT_SAMPLES - start));
    for (let i = 0; i < avail; i++) frame[i] = segment[start + i] * window[i];
    const power = powerSpectrum(frame, size);
    for (let k = 0; k < cfg.nMelFilters; k++) {
      let acc = 0;
      const row = filterbank[k];
      for (let b = 0; b < power.length; b++) acc += row[b] * power[b];
      logs[k] = Math.log(Math.max(acc, LOG_ENERGY_FLOOR));
    }
    for (let i = 0; i < cfg.nMfcc; i++) {
      let acc = 0;
      const row = basis[i];
      for (let j = 0; j < cfg.nMelFilters; j++) acc += row[j] * logs[j];
      out[i * frames + t] = acc;
    }
  }
  return { data: out, nMfcc: cfg.nMfcc, nFrames: frames };
}

/** Cut a stream into 1 s segments, zero-padding the tail. */
export function segmentStream(samples: Float64Array): Float64Array[] {
  if (samples.length === 0) throw new Error('cannot segment an empty stream');
  const out: Float64Array[] = [];
  for (let start = 0; start < samples.length; start += SEGMENT_SAMPLES) {
    const seg = new Float64Array(SEGMENT_SAMPLES);
    seg.set(samples.subarray(start, Math.min(start + SEGMENT_SAMPLES, samples.length)));
    out.push(seg);
  }
  return out;
}
