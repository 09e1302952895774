/**
 * Feature parity against the detector. The two components never share
 * code, so this check runs the detector's `featurize` CLI on a WAV,
 * decodes its binary output, and compares coefficient by coefficient with
 * this package's extractor. Deviation beyond 1e-4 absolute is a contract
 * violation.
 */

import { execFileSync } from 'child_process';
import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';

import { MfccConfig, mfcc, segmentStream } from './mfcc.js';
import { readWav, resampleTo16k } from './wav.js';

export const PARITY_TOLERANCE = 1e-4;

export class ParityViolation extends Error {}

export interface ParityReport {
  fixture: string;
  maxDeviation: number;
  nMfcc: number;
  nFrames: number;
}

const PYTHON = process.env.COUGHDET_PYTHON ?? 'python3';

/** Decode the detector's MFC1 feature binary into a flat row-major array. */
export function decodeFeatureBinary(buf: Buffer): { data: Float64Array; nMfcc: number; nFrames: number } {
  if (buf.length < 16 || buf.toString('ascii', 0, 4) !== 'MFC1') {
    throw new Error('not an MFC1 feature file');
  }
  const nMfcc = buf.readUInt32LE(4);
  const frames = buf.readUInt32LE(8);
  const want = 16 + nMfcc * frames * 4;
  if (buf.length !== want) throw new Error(`expected ${want} bytes, got ${buf.length}`);
  const data = new Float64Array(nMfcc * frames);
  for (let i = 0; i < data.length; i++) data[i] = buf.readFloatLE(16 + i * 4);
  return { data, nMfcc, nFrames: frames };
}

export function detectorFeatures(wavPath: string, cfg: MfccConfig,
                                 segmentIndex = 0): { data: Float64Array; nMfcc: number; nFrames: number } {
  const outPath = path.join(os.tmpdir(), `parity-${process.pid}-${Math.random().toString(36).slice(2)}.bin`);
  try {
    execFileSync(PYTHON, [
      '-m', 'coughdet.cli', 'featurize', wavPath, '-o', outPath,
      '--segment', String(segmentIndex),
      '--set', `frame_length_ms=${cfg.frameLengthMs}`,
      '--set', `overlap_pct=${cfg.overlapPct}`,
      '--set', `n_mfcc=${cfg.nMfcc}`,
      '--set', `n_mel_filters=${cfg.nMelFilters}`,
    ], { stdio: ['ignore', 'pipe', 'pipe'] });
    return decodeFeatureBinary(fs.readFileSync(outPath));
  } finally {
    fs.rmSync(outPath, { force: true });
  }
}

export function checkParity(wavPath: string, cfg: MfccConfig,
                            segmentIndex = 0): ParityReport {
  const theirs = detectorFeatures(wavPath, cfg, segmentIndex);
  const samples = resampleTo16k(readWav(wavPath));
  const segment = segmentStream(samples)[segmentIndex];
  const ours = mfcc(segment, cfg);
  if (theirs.nMfcc !== ours.nMfcc || theirs.nFrames !== ours.nFrames) {
    throw new ParityViolation(
      `shape mismatch: detector (${theirs.nMfcc}, ${theirs.nFrames}) vs trainer (${ours.nMfcc}, ${ours.nFrames})`);
  }
  let maxDeviation = 0;
  for (let i = 0; i < ours.data.length; i++) {
    maxDeviation = Math.max(maxDeviation, Math.abs(ours.data[i] - theirs.data[i]));
  }
  if (maxDeviation > PARITY_TOLERANCE) {
    throw new ParityViolation(
      `${wavPath}: max deviation ${maxDeviation.toExponential(3)} exceeds ${PARITY_TOLERANCE}`);
  }
  return { fixture: wavPath, maxDeviation, nMfcc: ours.nMfcc, nFrames: ours.nFrames };
}
