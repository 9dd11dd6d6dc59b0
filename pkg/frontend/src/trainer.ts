import * as fs from "node:fs";
import * as path from "node:path";

import { Dataset, loadDataset } from "./dataset.js";
import { PIXELS } from "./idx.js";
import { Gradients, Mlp, accumulateGradients, argmax, zeroGradients } from "./mlp.js";
import { Rng } from "./rng.js";

export const ARCHITECTURE = [784, 10, 10, 10, 10];
export const ACCURACY_FLOOR = 0.9;

export interface TrainSpec {
  hiddenSizes: number[];
  epochs: number;
  learningRate: number;
  batchSize: number;
  seed: number;
}

export const DEFAULT_SPEC: TrainSpec = {
  hiddenSizes: [10, 10, 10],
  epochs: 30,
  learningRate: 1e-3,
  batchSize: 32,
  seed: 5,
};

export interface TrainReport {
  trainAccuracy: number;
  testAccuracy: number;
  epochs: number;
  seed: number;
  finalLoss: number;
  outPath: string;
}

export function validateSpec(spec: TrainSpec): void {
  const want = ARCHITECTURE.slice(1, -1);
  if (spec.hiddenSizes.length !== want.length || spec.hiddenSizes.some((s, i) => s !== want[i])) {
    throw new Error(`hidden sizes must be [${want}], got [${spec.hiddenSizes}]`);
  }
  if (spec.epochs < 1 || spec.batchSize < 1 || spec.learningRate <= 0) {
    throw new Error("epochs and batchSize must be >= 1, learningRate > 0");
  }
}

class Adam {
  private m: Gradients;
  private v: Gradients;
  private step = 0;
  private readonly beta1 = 0.9;
  private readonly beta2 = 0.999;
  private readonly eps = 1e-8;

  constructor(net: Mlp, private readonly lr: number) {
    this.m = zeroGradients(net);
    this.v = zeroGradients(net);
  }

  update(net: Mlp, grads: Gradients): void {
    this.step += 1;
    const c1 = 1 - Math.pow(this.beta1, this.step);
    const c2 = 1 - Math.pow(this.beta2, this.step);
    for (let l = 0; l < net.layerCount; l++) {
      this.apply(net.weights[l], grads.weights[l], this.m.weights[l], this.v.weights[l], c1, c2);
      this.apply(net.biases[l], grads.biases[l], this.m.biases[l], this.v.biases[l], c1, c2);
    }
  }

  private apply(
    params: Float64Array, grads: Float64Array,
    m: Float64Array, v: Float64Array, c1: number, c2: number,
  ): void {
    for (let i = 0; i < params.length; i++) {
      const g = grads[i];
      m[i] = this.beta1 * m[i] + (1 - this.beta1) * g;
      v[i] = this.beta2 * v[i] + (1 - this.beta2) * g * g;
      params[i] -= (this.lr * (m[i] / c1)) / (Math.sqrt(v[i] / c2) + this.eps);
    }
  }
}

export function accuracy(net: Mlp, data: Dataset): number {
  let correct = 0;
  for (let i = 0; i < data.count; i++) {
    if (net.predict(data.pixels, i * PIXELS) === data.labels[i]) correct += 1;
  }
  return data.count === 0 ? 0 : correct / data.count;
}

export interface TrainResult {
  net: Mlp;
  finalLoss: number;
}

/** Deterministic minibatch Adam training; same spec + data => same weights. */
export function train(spec: TrainSpec, data: Dataset, log?: (line: string) => void): TrainResult {
  validateSpec(spec);
  const rng = new Rng(spec.seed);
  const inputDim = ARCHITECTURE[0];
  const net = new Mlp(ARCHITECTURE, rng);
  const adam = new Adam(net, spec.learningRate);

  let meanLoss = NaN;
  for (let epoch = 0; epoch < spec.epochs; epoch++) {
    const order = rng.permutation(data.count);
    let lossSum = 0;
    for (let start = 0; start < data.count; start += spec.batchSize) {
      const end = Math.min(start + spec.batchSize, data.count);
      const grads = zeroGradients(net);
      const scale = 1.0 / (end - start);
      for (let k = start; k < end; k++) {
        const sample = order[k];
        lossSum += accumulateGradients(
          net, data.pixels, sample * inputDim, data.labels[sample], grads, scale,
        );
      }
      adam.update(net, grads);
    }
    meanLoss = lossSum / data.count;
    log?.(`epoch ${epoch + 1}/${spec.epochs}: mean loss ${meanLoss.toFixed(4)}`);
  }
  return { net, finalLoss: meanLoss };
}

/** Weight-file JSON understood by the analysis engine (relu hidden, linear last). */
export function exportNetwork(net: Mlp, outPath: string): void {
  const layers = [];
  for (let l = 0; l < net.layerCount; l++) {
    const fanIn = net.sizes[l];
    const fanOut = net.sizes[l + 1];
    const rows: number[][] = [];
    for (let i = 0; i < fanOut; i++) {
      rows.push(Array.from(net.weights[l].subarray(i * fanIn, (i + 1) * fanIn)));
    }
    layers.push({
      weights: rows,
      biases: Array.from(net.biases[l]),
      activation: l === net.layerCount - 1 ? "linear" : "relu",
    });
  }
  fs.mkdirSync(path.dirname(outPath), { recursive: true });
  fs.writeFileSync(outPath, JSON.stringify({ layers }));
}

/** Load a weight-file JSON back into an Mlp (shapes validated). */
export function importNetwork(filePath: string): Mlp {
  const doc = JSON.parse(fs.readFileSync(filePath, "utf-8"));
  if (!doc || !Array.isArray(doc.layers) || doc.layers.length === 0) {
    throw new Error(`${filePath}: expected an object with a non-empty 'layers' array`);
  }
  const sizes = [doc.layers[0].weights[0].length];
  for (const layer of doc.layers) sizes.push(layer.weights.length);
  const net = new Mlp(sizes, new Rng(0));
  doc.layers.forEach((layer: { weights: number[][]; biases: number[] }, l: number) => {
    const fanIn = sizes[l];
    layer.weights.forEach((row, i) => {
      if (row.length !== fanIn) throw new Error(`${filePath}: layer ${l} row ${i} has ${row.length} weights`);
      net.weights[l].set(row, i * fanIn);
    });
    if (layer.biases.length !== sizes[l + 1]) {
      throw new Error(`${filePath}: layer ${l} has ${layer.biases.length} biases`);
    }
    net.biases[l].set(layer.biases);
  });
  return net;
}

/** Train on <dataDir>/train-*, evaluate on <dataDir>/t10k-*, export the net. */
export function trainAndExport(
  spec: TrainSpec, dataDir: string, outPath: string, log: (line: string) => void = console.log,
): TrainReport {
  const trainSet = loadDataset(path.join(dataDir, "train"));
  const testSet = loadDataset(path.join(dataDir, "t10k"));
  log(`training on ${trainSet.count} images, evaluating on ${testSet.count} (seed ${spec.seed})`);

  const { net, finalLoss } = train(spec, trainSet, log);
  const trainAccuracy = accuracy(net, trainSet);
  const testAccuracy = accuracy(net, testSet);
  log(`train accuracy ${(trainAccuracy * 100).toFixed(2)}%`);
  log(`test accuracy ${(testAccuracy * 100).toFixed(2)}%`);
  if (testAccuracy < ACCURACY_FLOOR) {
    log(`warning: test accuracy below ${ACCURACY_FLOOR * 100}% floor; exporting anyway`);
  }

  exportNetwork(net, outPath);
  log(`wrote ${outPath}`);
  return {
    trainAccuracy,
    testAccuracy,
    epochs: spec.epochs,
    seed: spec.seed,
    finalLoss,
    outPath,
  };
}
