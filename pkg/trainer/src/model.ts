/**
 * The detection network: three stride-2 valid 3x3 conv/ReLU blocks with
 * dropout, global max pooling, batch normalization, and a single-logit
 * dense head. 16,561 parameters for any frame count (16,481 trainable).
 *
 * The dense layer emits a logit; the sigmoid lives in the loss here and
 * in the detector's forward pass, which keeps training numerically stable
 * and the exported weights identical.
 */

import * as tf from '@tensorflow/tfjs';

export const CONV_FILTERS = [16, 32, 40] as const;
export const N_COEFFICIENTS = 40;
export const BN_EPSILON = 1e-3;

export interface ModelHandles {
  model: tf.LayersModel;
  convs: tf.layers.Layer[];
  bn: tf.layers.Layer;
  dense: tf.layers.Layer;
  nFrames: number;
}

export function buildModel(nFrames: number, dropoutRate: number, seed: number): ModelHandles {
  const model = tf.sequential();
  const convs: tf.layers.Layer[] = [];
  CONV_FILTERS.forEach((filters, i) => {
    const conv = tf.layers.conv2d({
      filters,
      kernelSize: 3,
      strides: 2,
      padding: 'valid',
      activation: 'relu',
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + i }),
      ...(i === 0 ? { inputShape: [N_COEFFICIENTS, nFrames, 1] } : {}),
    });
    model.add(conv);
    convs.push(conv);
    model.add(tf.layers.dropout({ rate: dropoutRate, seed: seed + 100 + i }));
  });
  model.add(tf.layers.globalMaxPooling2d({}));
  const bn = tf.layers.batchNormalization({ epsilon: BN_EPSILON });
  model.add(bn);
  const dense = tf.layers.dense({
    units: 1,
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 7 }),
  });
  model.add(dense);
  return { model, convs, bn, dense, nFrames };
}

export interface ExtractedWeights {
  convKernels: Float32Array[];
  convBiases: Float32Array[];
  bnGamma: Float32Array;
  bnBeta: Float32Array;
  bnMovingMean: Float32Array;
  bnMovingVar: Float32Array;
  bnEpsilon: number;
  denseKernel: Float32Array;
  denseBias: Float32Array;
  nFrames: number;
}

export function extractWeights(handles: ModelHandles): ExtractedWeights {
  const convKernels: Float32Array[] = [];
  const convBiases: Float32Array[] = [];
  for (const conv of handles.convs) {
    const [kernel, bias] = conv.getWeights();
    convKernels.push(kernel.dataSync() as Float32Array);
    convBiases.push(bias.dataSync() as Float32Array);
  }
  const [gamma, beta, movingMean, movingVar] = handles.bn.getWeights();
  const [denseKernel, denseBias] = handles.dense.getWeights();
  return {
    convKernels,
    convBiases,
    bnGamma: gamma.dataSync() as Float32Array,
    bnBeta: beta.dataSync() as Float32Array,
    bnMovingMean: movingMean.dataSync() as Float32Array,
    bnMovingVar: movingVar.dataSync() as Float32Array,
    bnEpsilon: BN_EPSILON,
    denseKernel: denseKernel.dataSync() as Float32Array,
    denseBias: denseBias.dataSync() as Float32Array,
    nFrames: handles.nFrames,
  };
}

export function parameterCount(): number {
  const conv = (cin: number, cout: number) => 9 * cin * cout + cout;
  return conv(1, 16) + conv(16, 32) + conv(32, 40) + 4 * 40 + (40 + 1);
}
