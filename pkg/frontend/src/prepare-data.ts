/**
 * Materialize MNIST IDX files from the `mnist` npm package's bundled copy of
 * the dataset (10,000 real samples stored as pixel/255 values rounded to 3
 * decimals; rounding v*255 recovers the original bytes exactly).
 *
 * Per class: every sample but the last 100 goes to the training split, the
 * last 100 to the test split. Classes are interleaved 0..9 so any prefix of
 * the training file covers all digits.
 */
import * as fs from "node:fs";
import * as path from "node:path";
import { createRequire } from "node:module";

import { PIXELS, writeIdxImages, writeIdxLabels } from "./idx.js";

const require = createRequire(import.meta.url);

const TEST_PER_CLASS = 100;

interface ClassSamples {
  digit: number;
  images: Uint8Array[];
}

function loadBundledClasses(): ClassSamples[] {
  const classes: ClassSamples[] = [];
  for (let digit = 0; digit <= 9; digit++) {
    const flat: number[] = require(`mnist/src/digits/${digit}.json`).data;
    if (flat.length % PIXELS !== 0) {
      throw new Error(`digit ${digit}: ${flat.length} values is not a multiple of ${PIXELS}`);
    }
    const images: Uint8Array[] = [];
    for (let s = 0; s * PIXELS < flat.length; s++) {
      const image = new Uint8Array(PIXELS);
      for (let j = 0; j < PIXELS; j++) image[j] = Math.round(flat[s * PIXELS + j] * 255);
      images.push(image);
    }
    classes.push({ digit, images });
  }
  return classes;
}

function interleave(classes: ClassSamples[], pick: (images: Uint8Array[], s: number) => Uint8Array | null) {
  const images: Uint8Array[] = [];
  const labels: number[] = [];
  for (let s = 0, more = true; more; s++) {
    more = false;
    for (const cls of classes) {
      const image = pick(cls.images, s);
      if (image === null) continue;
      more = true;
      images.push(image);
      labels.push(cls.digit);
    }
  }
  return { images, labels: Uint8Array.from(labels) };
}

export function prepareData(outDir: string, log: (line: string) => void = console.log): void {
  fs.mkdirSync(outDir, { recursive: true });
  const classes = loadBundledClasses();

  const trainSplit = interleave(classes, (images, s) =>
    s < images.length - TEST_PER_CLASS ? images[s] : null);
  const testSplit = interleave(classes, (images, s) =>
    s < TEST_PER_CLASS ? images[images.length - TEST_PER_CLASS + s] : null);

  writeIdxImages(path.join(outDir, "train-images-idx3-ubyte"), trainSplit.images);
  writeIdxLabels(path.join(outDir, "train-labels-idx1-ubyte"), trainSplit.labels);
  writeIdxImages(path.join(outDir, "t10k-images-idx3-ubyte"), testSplit.images);
  writeIdxLabels(path.join(outDir, "t10k-labels-idx1-ubyte"), testSplit.labels);
  log(`wrote ${trainSplit.images.length} training and ${testSplit.images.length} test images to ${outDir}`);
}
