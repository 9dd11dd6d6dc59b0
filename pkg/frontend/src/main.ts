import * as path from "node:path";

import { prepareData } from "./prepare-data.js";
import { DEFAULT_SPEC, trainAndExport } from "./trainer.js";

const DEFAULT_DATA_DIR = path.resolve(process.cwd(), "..", "data");

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`expected --flag value pairs, got '${argv.slice(i).join(" ")}'`);
    }
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  return flags;
}

function numberFlag(flags: Map<string, string>, name: string, fallback: number): number {
  const raw = flags.get(name);
  if (raw === undefined) return fallback;
  const value = Number(raw);
  if (!Number.isFinite(value)) throw new Error(`--${name} must be a number, got '${raw}'`);
  return value;
}

function usage(): never {
  console.error("usage: node dist/main.js data  [--out <dir>]");
  console.error("       node dist/main.js train [--data <dir>] [--out <file>]");
  console.error("                               [--epochs N] [--lr X] [--batch N] [--seed N]");
  process.exit(2);
}

function main(argv: string[]): number {
  if (argv.length === 0) usage();
  const command = argv[0];
  const flags = parseFlags(argv.slice(1));

  if (command === "data") {
    prepareData(flags.get("out") ?? DEFAULT_DATA_DIR);
    return 0;
  }
  if (command === "train") {
    const dataDir = flags.get("data") ?? DEFAULT_DATA_DIR;
    const outPath = flags.get("out") ?? path.join(dataDir, "trained-net.json");
    const spec = {
      ...DEFAULT_SPEC,
      epochs: numberFlag(flags, "epochs", DEFAULT_SPEC.epochs),
      learningRate: numberFlag(flags, "lr", DEFAULT_SPEC.learningRate),
      batchSize: numberFlag(flags, "batch", DEFAULT_SPEC.batchSize),
      seed: numberFlag(flags, "seed", DEFAULT_SPEC.seed),
    };
    const report = trainAndExport(spec, dataDir, outPath);
    return report.testAccuracy > 0 ? 0 : 1;
  }
  usage();
}

try {
  process.exit(main(process.argv.slice(2)));
} catch (err) {
  console.error(`error: ${err instanceof Error ? err.message : err}`);
  process.exit(1);
}
