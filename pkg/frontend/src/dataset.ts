import { PIXELS, readIdxImages, readIdxLabels } from "./idx.js";

export interface Dataset {
  count: number;
  /** count x 784 row-major, normalized to [0, 1] by /255 (matches the engine). */
  pixels: Float64Array;
  labels: Uint8Array;
}

export function loadDataset(prefix: string): Dataset {
  const images = readIdxImages(`${prefix}-images-idx3-ubyte`);
  const labels = readIdxLabels(`${prefix}-labels-idx1-ubyte`);
  if (images.length !== labels.length) {
    throw new Error(`${prefix}: ${images.length} images but ${labels.length} labels`);
  }
  const pixels = new Float64Array(images.length * PIXELS);
  images.forEach((image, i) => {
    for (let j = 0; j < PIXELS; j++) pixels[i * PIXELS + j] = image[j] / 255.0;
  });
  return { count: images.length, pixels, labels };
}

export function datasetFromArrays(rows: Float64Array[], labels: number[]): Dataset {
  const pixels = new Float64Array(rows.length * PIXELS);
  rows.forEach((row, i) => pixels.set(row, i * PIXELS));
  return { count: rows.length, pixels, labels: Uint8Array.from(labels) };
}
