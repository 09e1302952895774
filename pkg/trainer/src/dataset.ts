/**
 * Dataset ingestion: walk labeled audio trees, resample everything to
 * 16 kHz mono, and cut labeled 1 s segments. Labels come from a sidecar
 * labels.csv (path,label rows) when present, otherwise from the directory
 * convention <root>/cough/ and <root>/unknown/.
 */

import * as fs from 'fs';
import * as path from 'path';

import { segmentStream } from './mfcc.js';
import { readWav, resampleTo16k } from './wav.js';

export type Label = 'cough' | 'unknown';

export interface ManifestEntry {
  sourcePath: string;
  sourceTag: string;
  segmentIndex: number;
  label: Label;
  samples: Float64Array; // 16000 samples
}

export type Split = 'train' | 'validation' | 'test';

export interface TrainingManifest {
  entries: ManifestEntry[];
  splits: Map<ManifestEntry, Split>;
  skipped: string[]; // unreadable files, counted but not fatal
  classCounts: Record<Label, number>;
}

export class EmptyDataset extends Error {}

const LABELS: Label[] = ['cough', 'unknown'];

function labelFromCsv(root: string): Map<string, Label> | null {
  const csvPath = path.join(root, 'labels.csv');
  if (!fs.existsSync(csvPath)) return null;
  const map = new Map<string, Label>();
  const lines = fs.readFileSync(csvPath, 'utf-8').split('\n');
  for (const raw of lines) {
    const line = raw.trim();
    if (!line || line.toLowerCase().startsWith('path,')) continue;
    const comma = line.indexOf(',');
    if (comma < 0) continue;
    const file = line.slice(0, comma).trim();
    const label = line.slice(comma + 1).trim().toLowerCase();
    if (label === 'cough' || label === 'unknown') {
      map.set(file, label);
    } else if (label === 'not-cough') {
      map.set(file, 'unknown');
    }
  }
  return map;
}

function* walkWavs(dir: string): Generator<string> {
  for (const name of fs.readdirSync(dir).sort()) {
    const full = path.join(dir, name);
    const stat = fs.statSync(full);
    if (stat.isDirectory()) {
      yield* walkWavs(full);
    } else if (name.toLowerCase().endsWith('.wav')) {
      yield full;
    }
  }
}

function labelFor(root: string, file: string, csv: Map<string, Label> | null): Label | null {
  if (csv) {
    const rel = path.relative(root, file);
    return csv.get(rel) ?? csv.get(path.basename(file)) ?? null;
  }
  const rel = path.relative(root, file);
  const top = rel.split(path.sep)[0].toLowerCase();
  return (LABELS as string[]).includes(top) ? (top as Label) : null;
}

export function ingest(roots: string[]): TrainingManifest {
  const entries: ManifestEntry[] = [];
  const skipped: string[] = [];
  const classCounts: Record<Label, number> = { cough: 0, unknown: 0 };
  for (const root of roots) {
    if (!fs.existsSync(root)) throw new EmptyDataset(`dataset root not found: ${root}`);
    const csv = labelFromCsv(root);
    const tag = path.basename(root);
    for (const file of walkWavs(root)) {
      const label = labelFor(root, file, csv);
      if (label === null) continue; // unlabeled file, not ours to guess
      let mono: Float64Array;
      try {
        mono = resampleTo16k(readWav(file));
      } catch (err) {
        skipped.push(`${file}: ${(err as Error).message}`);
        continue;
      }
      if (mono.length === 0) {
        skipped.push(`${file}: empty audio`);
        continue;
      }
      segmentStream(mono).forEach((seg, index) => {
        entries.push({ sourcePath: file, sourceTag: tag, segmentIndex: index,
                       label, samples: seg });
        classCounts[label] += 1;
      });
    }
  }
  if (entries.length === 0) {
    throw new EmptyDataset(`no labeled audio found under: ${roots.join(', ')}`);
  }
  return { entries, splits: new Map(), skipped, classCounts };
}

/** Deterministic PRNG (mulberry32) so splits and shuffles reproduce. */
export function seededRandom(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function shuffleInPlace<T>(items: T[], rand: () => number): void {
  for (let i = items.length - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [items[i], items[j]] = [items[j], items[i]];
  }
}

/** Largest-remainder apportionment; ties go to the larger split. */
export function apportion(n: number, fractions: number[]): number[] {
  const quotas = fractions.map((f) => n * f);
  const sizes = quotas.map((q) => Math.floor(q));
  let remaining = n - sizes.reduce((a, b) => a + b, 0);
  const order = quotas
    .map((q, i) => ({ i, frac: q - sizes[i], size: fractions[i] }))
    .sort((a, b) => b.frac - a.frac || b.size - a.size);
  for (const { i } of order) {
    if (remaining <= 0) break;
    sizes[i] += 1;
    remaining -= 1;
  }
  return sizes;
}

export const SPLIT_FRACTIONS = [0.72, 0.08, 0.2];

/** Per-class 72/8/20 partition, deterministic under the seed. */
export function stratifiedSplit(manifest: TrainingManifest, seed: number): void {
  const byClass = new Map<Label, ManifestEntry[]>();
  for (const entry of manifest.entries) {
    const list = byClass.get(entry.label) ?? [];
    list.push(entry);
    byClass.set(entry.label, list);
  }
  const rand = seededRandom(seed);
  const splitNames: Split[] = ['train', 'validation', 'test'];
  for (const label of [...byClass.keys()].sort()) {
    const members = [...byClass.get(label)!];
    shuffleInPlace(members, rand);
    const sizes = apportion(members.length, SPLIT_FRACTIONS);
    let offset = 0;
    splitNames.forEach((split, s) => {
      for (const entry of members.slice(offset, offset + sizes[s])) {
        manifest.splits.set(entry, split);
      }
      offset += sizes[s];
    });
  }
}

export function entriesFor(manifest: TrainingManifest, split: Split): ManifestEntry[] {
  return manifest.entries.filter((e) => manifest.splits.get(e) === split);
}
