#!/usr/bin/env tsx
/**
 * Trainer CLI.
 *
 *   tsx src/cli.ts ingest --data DIR [--data DIR2 ...]
 *   tsx src/cli.ts train  --data DIR --out model.cghw [options]
 *   tsx src/cli.ts parity --wav a.wav [--wav b.wav ...]
 *
 * train options: --frame-ms 5 --overlap 25 --epochs 200 --lr 0.005
 *   --batch 32 --dropout 0.2 --seed 0 --log train_log.json
 */

import * as fs from 'fs';

import { ingest, stratifiedSplit, entriesFor } from './dataset.js';
import { makeConfig, nFrames } from './mfcc.js';
import { encodeWeights } from './cghw.js';
import { parameterCount } from './model.js';
import { checkParity } from './parity.js';
import { DEFAULT_TRAIN_CONFIG, trainFromManifest } from './train.js';

function parseArgs(argv: string[]): { command: string; flags: Map<string, string[]> } {
  const [command, ...rest] = argv;
  const flags = new Map<string, string[]>();
  for (let i = 0; i < rest.length; i++) {
    if (!rest[i].startsWith('--')) throw new Error(`unexpected argument ${rest[i]}`);
    const key = rest[i].slice(2);
    const value = rest[i + 1];
    if (value === undefined || value.startsWith('--')) {
      throw new Error(`flag --${key} needs a value`);
    }
    flags.set(key, [...(flags.get(key) ?? []), value]);
    i++;
  }
  return { command: command ?? '', flags };
}

function one(flags: Map<string, string[]>, key: string, fallback?: string): string {
  const values = flags.get(key);
  if (!values) {
    if (fallback !== undefined) return fallback;
    throw new Error(`missing required flag --${key}`);
  }
  return values[values.length - 1];
}

function cmdIngest(flags: Map<string, string[]>): number {
  const roots = flags.get('data');
  if (!roots) throw new Error('missing required flag --data');
  const manifest = ingest(roots);
  stratifiedSplit(manifest, Number(one(flags, 'seed', '0')));
  const report = {
    segments: manifest.entries.length,
    class_counts: manifest.classCounts,
    split_sizes: {
      train: entriesFor(manifest, 'train').length,
      validation: entriesFor(manifest, 'validation').length,
      test: entriesFor(manifest, 'test').length,
    },
    skipped: manifest.skipped,
  };
  console.log(JSON.stringify(report, null, 2));
  return 0;
}

function cmdTrain(flags: Map<string, string[]>): number {
  const roots = flags.get('data');
  if (!roots) throw new Error('missing required flag --data');
  const outPath = one(flags, 'out');
  const mfccConfig = makeConfig(Number(one(flags, 'frame-ms', '5')),
                                Number(one(flags, 'overlap', '25')));
  const trainConfig = {
    ...DEFAULT_TRAIN_CONFIG,
    learningRate: Number(one(flags, 'lr', '0.005')),
    maxEpochs: Number(one(flags, 'epochs', '200')),
    batchSize: Number(one(flags, 'batch', '32')),
    dropoutRate: Number(one(flags, 'dropout', '0.2')),
    seed: Number(one(flags, 'seed', '0')),
  };

  const manifest = ingest(roots);
  console.error(`ingested ${manifest.entries.length} segments `
    + `(cough ${manifest.classCounts.cough}, unknown ${manifest.classCounts.unknown}; `
    + `${manifest.skipped.length} skipped)`);
  const result = trainFromManifest(manifest, { mfccConfig, trainConfig });
  fs.writeFileSync(outPath, encodeWeights(result.weights));
  const logPath = flags.get('log')?.[0];
  if (logPath) fs.writeFileSync(logPath, JSON.stringify(result.log, null, 2));
  console.error(`best val loss ${result.bestValLoss.toFixed(5)} at epoch ${result.bestEpoch}; `
    + `final train accuracy ${(100 * result.finalTrainAccuracy).toFixed(1)}%`);
  console.log(`wrote ${outPath}: ${parameterCount()} parameters, `
    + `input (40, ${nFrames(mfccConfig)}, 1)`);
  return 0;
}

function cmdParity(flags: Map<string, string[]>): number {
  const wavs = flags.get('wav');
  if (!wavs) throw new Error('missing required flag --wav');
  const cfg = makeConfig(Number(one(flags, 'frame-ms', '5')),
                         Number(one(flags, 'overlap', '25')));
  const reports = wavs.map((wav) => checkParity(wav, cfg));
  for (const r of reports) {
    console.log(`${r.fixture}: max deviation ${r.maxDeviation.toExponential(3)} `
      + `over (${r.nMfcc}, ${r.nFrames})`);
  }
  return 0;
}

async function main(): Promise<number> {
  const { command, flags } = parseArgs(process.argv.slice(2));
  switch (command) {
    case 'ingest':
      return cmdIngest(flags);
    case 'train':
      return cmdTrain(flags);
    case 'parity':
      return cmdParity(flags);
    default:
      console.error('usage: cli.ts <ingest|train|parity> [flags]');
      return 2;
  }
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(`error: ${err.message}`);
    process.exit(2);
  },
);
