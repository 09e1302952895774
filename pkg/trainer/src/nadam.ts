/**
 * Nadam: Adam with a Nesterov-corrected first moment (Dozat's
 * formulation, without the momentum-schedule warmup). tfjs ships no Nadam
 * optimizer, and the training recipe names it, so it lives here.
 *
 *   m_t = b1 m + (1-b1) g            v_t = b2 v + (1-b2) g^2
 *   mhat = b1 m_t/(1-b1^(t+1)) + (1-b1) g/(1-b1^t)
 *   vhat = v_t/(1-b2^t)
 *   theta -= lr * mhat / (sqrt(vhat) + eps)
 */

import * as tf from '@tensorflow/tfjs';

// structurally matches tfjs-core's NamedTensor, which tfjs does not re-export
interface NamedTensor {
  name: string;
  tensor: tf.Tensor;
}

export class Nadam extends tf.Optimizer {
  static readonly className = 'Nadam';

  private step = 0;
  private moments = new Map<string, { m: tf.Variable; v: tf.Variable }>();

  constructor(
    public learningRate: number,
    private readonly beta1 = 0.9,
    private readonly beta2 = 0.999,
    private readonly epsilon = 1e-8,
  ) {
    super();
  }

  setLearningRate(lr: number): void {
    this.learningRate = lr;
  }

  applyGradients(variableGradients: tf.NamedTensorMap | NamedTensor[]): void {
    this.step += 1;
    const t = this.step;
    const mNext = 1 - Math.pow(this.beta1, t + 1);
    const mCur = 1 - Math.pow(this.beta1, t);
    const vCur = 1 - Math.pow(this.beta2, t);

    const names = Array.isArray(variableGradients)
      ? variableGradients.map((v) => v.name)
      : Object.keys(variableGradients);
    for (const name of names) {
      const variable = tf.engine().registeredVariables[name];
      if (variable == null) throw new Error(`unknown variable ${name}`);
      const gradient = Array.isArray(variableGradients)
        ? variableGradients.find((v) => v.name === name)!.tensor
        : variableGradients[name];
      let slot = this.moments.get(name);
      if (!slot) {
        slot = {
          m: tf.variable(tf.zerosLike(variable), false),
          v: tf.variable(tf.zerosLike(variable), false),
        };
        this.moments.set(name, slot);
      }
      const { m, v } = slot;
      tf.tidy(() => {
        const newM = m.mul(this.beta1).add(gradient.mul(1 - this.beta1));
        const newV = v.mul(this.beta2).add(gradient.square().mul(1 - this.beta2));
        m.assign(newM as tf.Tensor);
        v.assign(newV as tf.Tensor);
        const mHat = newM.mul(this.beta1 / mNext).add(gradient.mul((1 - this.beta1) / mCur));
        const vHat = newV.div(vCur);
        const update = mHat.mul(this.learningRate).div(vHat.sqrt().add(this.epsilon));
        variable.assign(variable.sub(update) as tf.Tensor);
      });
    }
    this.incrementIterations();
  }

  dispose(): void {
    for (const { m, v } of this.moments.values()) {
      m.dispose();
      v.dispose();
    }
    this.moments.clear();
  }

  getConfig(): tf.serialization.ConfigDict {
    return {
      learningRate: this.learningRate,
      beta1: this.beta1,
      beta2: this.beta2,
      epsilon: this.epsilon,
    };
  }
}
