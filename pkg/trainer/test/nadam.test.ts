import * as tf from '@tensorflow/tfjs';
import { beforeAll, describe, expect, it } from 'vitest';

import { Nadam } from '../src/nadam.js';

beforeAll(async () => {
  await tf.ready();
});

describe('nadam optimizer', () => {
  it('drives a quadratic to its minimum', () => {
    const x = tf.variable(tf.scalar(5.0));
    const opt = new Nadam(0.1);
    for (let i = 0; i < 300; i++) {
      opt.minimize(() => x.sub(2).square().asScalar());
    }
    expect(Math.abs(x.dataSync()[0] - 2.0)).toBeLessThan(1e-2);
    opt.dispose();
    x.dispose();
  });

  it('matches the hand-computed first update', () => {
    // x0 = 5, L = (x-2)^2, g = 6; with b1=0.9, b2=0.999, lr=0.1, t=1:
    //   m1 = 0.1 g, v1 = 0.001 g^2
    //   mhat = 0.9*m1/(1-0.9^2) + 0.1*g/(1-0.9) = (0.09/0.19 + 1) g
    //   vhat = g^2, so x1 = 5 - 0.1*(0.09/0.19 + 1)*g/(|g| + 1e-8)
    const x = tf.variable(tf.scalar(5.0));
    const opt = new Nadam(0.1);
    opt.minimize(() => x.sub(2).square().asScalar());
    const expected = 5 - (0.1 * (0.09 / 0.19 + 1) * 6) / (6 + 1e-8);
    expect(x.dataSync()[0]).toBeCloseTo(expected, 6);
    opt.dispose();
    x.dispose();
  });

  it('exposes a mutable learning rate for the plateau schedule', () => {
    const opt = new Nadam(0.005);
    expect(opt.learningRate).toBe(0.005);
    opt.setLearningRate(opt.learningRate / 10);
    expect(opt.learningRate).toBeCloseTo(0.0005, 12);
    opt.dispose();
  });
});
