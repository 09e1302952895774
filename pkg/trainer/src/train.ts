/**
 * Training loop: Nadam at lr 0.005, binary cross-entropy on the logit,
 * up to 200 epochs. When validation loss stalls for 10 epochs the
 * learning rate drops by a factor of 10. The weights snapshot with the
 * best validation loss is what gets exported.
 */

import * as tf from '@tensorflow/tfjs';

import { ManifestEntry, TrainingManifest, entriesFor, seededRandom,
         shuffleInPlace, stratifiedSplit } from './dataset.js';
import { MfccConfig, mfcc, melFilterbank, nFrames } from './mfcc.js';
import { ExtractedWeights, ModelHandles, buildModel, extractWeights } from './model.js';
import { Nadam } from './nadam.js';

export class DivergedTraining extends Error {}
export class EmptySplit extends Error {}

export interface TrainConfig {
  learningRate: number;
  maxEpochs: number;
  plateauFactor: number;
  plateauPatience: number;
  dropoutRate: number;
  batchSize: number;
  seed: number;
  /** stop early once training accuracy reaches this level (e.g. 1.0) */
  stopAtTrainAccuracy?: number;
}

export const DEFAULT_TRAIN_CONFIG: TrainConfig = {
  learningRate: 0.005,
  maxEpochs: 200,
  plateauFactor: 10,
  plateauPatience: 10,
  dropoutRate: 0.2,
  batchSize: 32,
  seed: 0,
};

export interface EpochLog {
  epoch: number;
  loss: number;
  valLoss: number;
  lr: number;
  trainAccuracy: number;
}

export interface Example {
  features: Float32Array; // row-major (40, nFrames)
  label: 0 | 1;
}

export interface TrainResult {
  weights: ExtractedWeights;
  log: EpochLog[];
  bestValLoss: number;
  bestEpoch: number;
  finalTrainAccuracy: number;
}

export function featurize(entries: ManifestEntry[], cfg: MfccConfig): Example[] {
  const bank = melFilterbank(cfg);
  return entries.map((entry) => ({
    features: Float32Array.from(mfcc(entry.samples, cfg, bank).data),
    label: entry.label === 'cough' ? 1 : 0,
  }));
}

function toTensors(examples: Example[], frames: number): { x: tf.Tensor4D; y: tf.Tensor2D } {
  const n = examples.length;
  const x = new Float32Array(n * 40 * frames);
  const y = new Float32Array(n);
  examples.forEach((ex, i) => {
    x.set(ex.features, i * 40 * frames);
    y[i] = ex.label;
  });
  return {
    x: tf.tensor4d(x, [n, 40, frames, 1]),
    y: tf.tensor2d(y, [n, 1]),
  };
}

function meanLossAndAccuracy(model: tf.LayersModel, examples: Example[],
                             frames: number, batchSize: number): { loss: number; accuracy: number } {
  let lossSum = 0;
  let hits = 0;
  for (let start = 0; start < examples.length; start += batchSize) {
    const batch = examples.slice(start, start + batchSize);
    const { x, y } = toTensors(batch, frames);
    const { lossVal, correct } = tf.tidy(() => {
      const logits = model.apply(x, { training: false }) as tf.Tensor2D;
      const lossVal = tf.losses.sigmoidCrossEntropy(y, logits).dataSync()[0];
      const predicted = logits.greater(0).cast('float32');
      const correct = predicted.equal(y).sum().dataSync()[0];
      return { lossVal, correct };
    });
    lossSum += lossVal * batch.length;
    hits += correct;
    x.dispose();
    y.dispose();
  }
  return { loss: lossSum / examples.length, accuracy: hits / examples.length };
}

export function trainLoop(handles: ModelHandles, trainSet: Example[], valSet: Example[],
                          config: TrainConfig): TrainResult {
  if (trainSet.length === 0) throw new EmptySplit('training split is empty');
  if (valSet.length === 0) throw new EmptySplit('validation split is empty');

  const { model, nFrames: frames } = handles;
  const optimizer = new Nadam(config.learningRate);
  const rand = seededRandom(config.seed + 1);
  const log: EpochLog[] = [];

  let bestValLoss = Infinity;
  let bestEpoch = -1;
  let bestWeights: tf.Tensor[] | null = null;
  let wait = 0;
  let finalTrainAccuracy = 0;

  const order = trainSet.map((_, i) => i);
  for (let epoch = 0; epoch < config.maxEpochs; epoch++) {
    shuffleInPlace(order, rand);
    let lossSum = 0;
    for (let start = 0; start < order.length; start += config.batchSize) {
      const batch = order.slice(start, start + config.batchSize).map((i) => trainSet[i]);
      const { x, y } = toTensors(batch, frames);
      const cost = optimizer.minimize(
        () => tf.losses.sigmoidCrossEntropy(y, model.apply(x, { training: true }) as tf.Tensor),
        true,
      );
      const costVal = cost!.dataSync()[0];
      cost!.dispose();
      x.dispose();
      y.dispose();
      if (!Number.isFinite(costVal)) {
        throw new DivergedTraining(`loss became ${costVal} at epoch ${epoch}`);
      }
      lossSum += costVal * batch.length;
    }

    const trainEval = meanLossAndAccuracy(model, trainSet, frames, config.batchSize);
    const valEval = meanLossAndAccuracy(model, valSet, frames, config.batchSize);
    finalTrainAccuracy = trainEval.accuracy;
    log.push({
      epoch,
      loss: lossSum / trainSet.length,
      valLoss: valEval.loss,
      lr: optimizer.learningRate,
      trainAccuracy: trainEval.accuracy,
    });

    if (valEval.loss < bestValLoss - 1e-9) {
      bestValLoss = valEval.loss;
      bestEpoch = epoch;
      if (bestWeights) bestWeights.forEach((t) => t.dispose());
      bestWeights = model.getWeights().map((t) => t.clone());
      wait = 0;
    } else {
      wait += 1;
      if (wait >= config.plateauPatience) {
        optimizer.setLearningRate(optimizer.learningRate / config.plateauFactor);
        wait = 0;
      }
    }

    if (config.stopAtTrainAccuracy !== undefined &&
        trainEval.accuracy >= config.stopAtTrainAccuracy) {
      break;
    }
  }

  if (bestWeights) {
    model.setWeights(bestWeights);
    bestWeights.forEach((t) => t.dispose());
  }
  optimizer.dispose();
  return {
    weights: extractWeights(handles),
    log,
    bestValLoss,
    bestEpoch,
    finalTrainAccuracy,
  };
}

export interface ManifestTrainOptions {
  mfccConfig: MfccConfig;
  trainConfig: TrainConfig;
}

/** Split, featurize, and train straight from an ingested manifest. */
export function trainFromManifest(manifest: TrainingManifest,
                                  options: ManifestTrainOptions): TrainResult {
  stratifiedSplit(manifest, options.trainConfig.seed);
  const trainSet = featurize(entriesFor(manifest, 'train'), options.mfccConfig);
  const valSet = featurize(entriesFor(manifest, 'validation'), options.mfccConfig);
  const handles = buildModel(nFrames(options.mfccConfig),
                             options.trainConfig.dropoutRate, options.trainConfig.seed);
  return trainLoop(handles, trainSet, valSet, options.trainConfig);
}
