/** Big-endian MNIST IDX files: magic 2051 for 28x28 images, 2049 for labels. */
import * as fs from "node:fs";

export const IMAGE_MAGIC = 2051;
export const LABEL_MAGIC = 2049;
export const SIDE = 28;
export const PIXELS = SIDE * SIDE;

export function readIdxImages(path: string): Uint8Array[] {
  const buf = fs.readFileSync(path);
  if (buf.length < 16) throw new Error(`${path}: truncated header`);
  const magic = buf.readUInt32BE(0);
  if (magic !== IMAGE_MAGIC) throw new Error(`${path}: bad magic ${magic}, expected ${IMAGE_MAGIC}`);
  const count = buf.readUInt32BE(4);
  const rows = buf.readUInt32BE(8);
  const cols = buf.readUInt32BE(12);
  if (rows !== SIDE || cols !== SIDE) {
    throw new Error(`${path}: unexpected dimensions ${rows}x${cols}`);
  }
  if (buf.length !== 16 + count * PIXELS) {
    throw new Error(`${path}: payload holds ${buf.length - 16} bytes, header promises ${count * PIXELS}`);
  }
  const images: Uint8Array[] = [];
  for (let i = 0; i < count; i++) {
    images.push(new Uint8Array(buf.subarray(16 + i * PIXELS, 16 + (i + 1) * PIXELS)));
  }
  return images;
}

export function readIdxLabels(path: string): Uint8Array {
  const buf = fs.readFileSync(path);
  if (buf.length < 8) throw new Error(`${path}: truncated header`);
  const magic = buf.readUInt32BE(0);
  if (magic !== LABEL_MAGIC) throw new Error(`${path}: bad magic ${magic}, expected ${LABEL_MAGIC}`);
  const count = buf.readUInt32BE(4);
  if (buf.length !== 8 + count) {
    throw new Error(`${path}: payload holds ${buf.length - 8} labels, header promises ${count}`);
  }
  const labels = new Uint8Array(buf.subarray(8));
  for (const label of labels) {
    if (label > 9) throw new Error(`${path}: label ${label} out of range 0..9`);
  }
  return labels;
}

export function writeIdxImages(path: string, images: Uint8Array[]): void {
  const buf = Buffer.alloc(16 + images.length * PIXELS);
  buf.writeUInt32BE(IMAGE_MAGIC, 0);
  buf.writeUInt32BE(images.length, 4);
  buf.writeUInt32BE(SIDE, 8);
  buf.writeUInt32BE(SIDE, 12);
  images.forEach((image, i) => {
    if (image.length !== PIXELS) throw new Error(`image ${i} has ${image.length} pixels`);
    buf.set(image, 16 + i * PIXELS);
  });
  fs.writeFileSync(path, buf);
}

export function writeIdxLabels(path: string, labels: Uint8Array): void {
  const buf = Buffer.alloc(8 + labels.length);
  buf.writeUInt32BE(LABEL_MAGIC, 0);
  buf.writeUInt32BE(labels.length, 4);
  buf.set(labels, 8);
  fs.writeFileSync(path, buf);
}
