import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';

import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { EmptyDataset, apportion, entriesFor, ingest,
         stratifiedSplit } from '../src/dataset.js';
import { encodeWav } from '../src/wav.js';
import { coughLike, sine } from './fixtures.js';

let root: string;

beforeAll(() => {
  root = fs.mkdtempSync(path.join(os.tmpdir(), 'trainer-dataset-'));
  fs.mkdirSync(path.join(root, 'cough'));
  fs.mkdirSync(path.join(root, 'unknown'));
  // three 2.5 s cough clips -> ceil(2.5) = 3 segments each
  for (let i = 0; i < 3; i++) {
    const clip = new Float64Array(40000);
    clip.set(coughLike(0.3, i), 0);
    clip.set(coughLike(0.2, 10 + i), 16000);
    fs.writeFileSync(path.join(root, 'cough', `c${i}.wav`), encodeWav(clip));
  }
  // two 1 s unknown clips plus a 44.1 kHz stereo one
  fs.writeFileSync(path.join(root, 'unknown', 'tone.wav'), encodeWav(sine(440)));
  fs.writeFileSync(path.join(root, 'unknown', 'hum.wav'), encodeWav(sine(120)));
  const stereo = new Float64Array(2 * 44100);
  for (let i = 0; i < 44100; i++) {
    const v = 0.4 * Math.sin((2 * Math.PI * 300 * i) / 44100);
    stereo[2 * i] = v;
    stereo[2 * i + 1] = v * 0.5;
  }
  fs.writeFileSync(path.join(root, 'unknown', 'stereo44k.wav'),
                   encodeWav(stereo, 44100, 2));
  // an unreadable file that must be skipped with a warning, not fatal
  fs.writeFileSync(path.join(root, 'cough', 'broken.wav'), Buffer.from('nope'));
});

afterAll(() => {
  fs.rmSync(root, { recursive: true, force: true });
});

describe('ingest', () => {
  it('segments, labels, resamples, and counts skips', () => {
    const manifest = ingest([root]);
    // 3 clips x 3 segments cough; 2 + 1 unknown 1 s entries
    expect(manifest.classCounts.cough).toBe(9);
    expect(manifest.classCounts.unknown).toBe(3);
    expect(manifest.skipped.length).toBe(1);
    expect(manifest.skipped[0]).toContain('broken.wav');
    for (const entry of manifest.entries) {
      expect(entry.samples.length).toBe(16000);
    }
    const stereoEntries = manifest.entries.filter((e) =>
      e.sourcePath.endsWith('stereo44k.wav'));
    expect(stereoEntries.length).toBe(1); // 44100 frames -> 16000 samples -> one segment
  });

  it('honors a sidecar labels.csv over directory names', () => {
    const csvRoot = fs.mkdtempSync(path.join(os.tmpdir(), 'trainer-csv-'));
    try {
      fs.writeFileSync(path.join(csvRoot, 'a.wav'), encodeWav(coughLike()));
      fs.writeFileSync(path.join(csvRoot, 'b.wav'), encodeWav(sine(500)));
      fs.writeFileSync(path.join(csvRoot, 'labels.csv'),
                       'path,label\na.wav,cough\nb.wav,unknown\n');
      const manifest = ingest([csvRoot]);
      expect(manifest.classCounts).toEqual({ cough: 1, unknown: 1 });
    } finally {
      fs.rmSync(csvRoot, { recursive: true, force: true });
    }
  });

  it('raises on a dataset with nothing labeled', () => {
    const empty = fs.mkdtempSync(path.join(os.tmpdir(), 'trainer-empty-'));
    try {
      expect(() => ingest([empty])).toThrow(EmptyDataset);
    } finally {
      fs.rmSync(empty, { recursive: true, force: true });
    }
  });
});

describe('stratified split', () => {
  it('apportions by largest remainder with ties to the larger split', () => {
    expect(apportion(10, [0.72, 0.08, 0.2])).toEqual([7, 1, 2]);
    expect(apportion(100, [0.72, 0.08, 0.2])).toEqual([72, 8, 20]);
    expect(apportion(1, [0.5, 0.25, 0.25])).toEqual([1, 0, 0]);
  });

  it('is deterministic and per-class balanced', () => {
    const manifest = ingest([root]);
    stratifiedSplit(manifest, 42);
    const again = ingest([root]);
    stratifiedSplit(again, 42);
    const key = (m: ReturnType<typeof ingest>) =>
      m.entries.map((e) => `${e.sourcePath}#${e.segmentIndex}:${m.splits.get(e)}`).join('|');
    expect(key(manifest)).toBe(key(again));

    for (const label of ['cough', 'unknown'] as const) {
      const total = manifest.entries.filter((e) => e.label === label).length;
      for (const [split, frac] of [['train', 0.72], ['validation', 0.08], ['test', 0.2]] as const) {
        const got = entriesFor(manifest, split).filter((e) => e.label === label).length;
        expect(Math.abs(got - frac * total)).toBeLessThan(1 + 1e-9);
      }
    }
    const sizes = ['train', 'validation', 'test'] as const;
    const totalAssigned = sizes.reduce((acc, s) => acc + entriesFor(manifest, s).length, 0);
    expect(totalAssigned).toBe(manifest.entries.length);
  });
});
