import { Rng } from "./rng.js";

/**
 * Plain fully-connected net: ReLU hidden layers, linear output (the softmax
 * lives in the loss only, so the exported model ends at the final affine
 * layer). Weights are row-major (out x in), matching the weight-file layout.
 */
export class Mlp {
  readonly sizes: number[];
  readonly weights: Float64Array[];
  readonly biases: Float64Array[];

  constructor(sizes: number[], rng: Rng) {
    if (sizes.length < 2) throw new Error("need at least input and output sizes");
    this.sizes = sizes.slice();
    this.weights = [];
    this.biases = [];
    for (let l = 0; l < sizes.length - 1; l++) {
      const fanIn = sizes[l];
      const fanOut = sizes[l + 1];
      const std = Math.sqrt(2.0 / fanIn); // He init for the ReLU stack
      const w = new Float64Array(fanOut * fanIn);
      for (let i = 0; i < w.length; i++) w[i] = rng.gaussian() * std;
      this.weights.push(w);
      this.biases.push(new Float64Array(fanOut));
    }
  }

  get layerCount(): number {
    return this.weights.length;
  }

  /** Post-activation values per layer; activations[0] is the input slice. */
  forward(pixels: Float64Array, offset = 0): Float64Array[] {
    const activations: Float64Array[] = [pixels.subarray(offset, offset + this.sizes[0])];
    for (let l = 0; l < this.layerCount; l++) {
      const fanIn = this.sizes[l];
      const fanOut = this.sizes[l + 1];
      const w = this.weights[l];
      const b = this.biases[l];
      const src = activations[l];
      const out = new Float64Array(fanOut);
      const isHidden = l < this.layerCount - 1;
      for (let i = 0; i < fanOut; i++) {
        let sum = b[i];
        const row = i * fanIn;
        for (let j = 0; j < fanIn; j++) sum += w[row + j] * src[j];
        out[i] = isHidden && sum <= 0 ? 0 : sum;
      }
      activations.push(out);
    }
    return activations;
  }

  logits(pixels: Float64Array, offset = 0): Float64Array {
    const activations = this.forward(pixels, offset);
    return activations[activations.length - 1];
  }

  predict(pixels: Float64Array, offset = 0): number {
    return argmax(this.logits(pixels, offset));
  }
}

/** Smallest index attaining the maximum. */
export function argmax(values: Float64Array): number {
  let best = 0;
  for (let i = 1; i < values.length; i++) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

export interface Gradients {
  weights: Float64Array[];
  biases: Float64Array[];
}

export function zeroGradients(net: Mlp): Gradients {
  return {
    weights: net.weights.map((w) => new Float64Array(w.length)),
    biases: net.biases.map((b) => new Float64Array(b.length)),
  };
}

/**
 * Softmax cross-entropy loss for one sample; accumulates dLoss/dparam into
 * `grads` (scaled by `scale`, normally 1/batchSize) and returns the loss.
 */
export function accumulateGradients(
  net: Mlp,
  pixels: Float64Array,
  offset: number,
  label: number,
  grads: Gradients,
  scale: number,
): number {
  const activations = net.forward(pixels, offset);
  const logits = activations[activations.length - 1];

  // softmax with the usual max shift
  let max = -Infinity;
  for (const v of logits) if (v > max) max = v;
  let sum = 0;
  const probs = new Float64Array(logits.length);
  for (let i = 0; i < logits.length; i++) {
    probs[i] = Math.exp(logits[i] - max);
    sum += probs[i];
  }
  for (let i = 0; i < probs.length; i++) probs[i] /= sum;
  const loss = -Math.log(Math.max(probs[label], 1e-300));

  // delta at the output layer: softmax - onehot
  let delta = new Float64Array(probs);
  delta[label] -= 1.0;

  for (let l = net.layerCount - 1; l >= 0; l--) {
    const fanIn = net.sizes[l];
    const fanOut = net.sizes[l + 1];
    const src = activations[l];
    const gw = grads.weights[l];
    const gb = grads.biases[l];
    for (let i = 0; i < fanOut; i++) {
      const d = delta[i] * scale;
      gb[i] += d;
      const row = i * fanIn;
      for (let j = 0; j < fanIn; j++) gw[row + j] += d * src[j];
    }
    if (l > 0) {
      const w = net.weights[l];
      const next = new Float64Array(fanIn);
      for (let j = 0; j < fanIn; j++) {
        if (src[j] <= 0) continue; // ReLU gate: dead neurons pass no gradient
        let sumDelta = 0;
        for (let i = 0; i < fanOut; i++) sumDelta += delta[i] * w[i * fanIn + j];
        next[j] = sumDelta;
      }
      delta = next;
    }
  }
  return loss;
}
