#!/usr/bin/env node
import { readFileSync, writeFileSync } from "node:fs";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { loadCorpus } from "./dataset.js";
import { exportScores, scoreItem } from "./export.js";
import { DEFAULT_MODEL, TinyEncoder, type CheckpointData } from "./model.js";
import { DEFAULT_TRAIN, train, type TrainConfig } from "./train.js";

function loadCheckpoint(path: string): TinyEncoder {
  const data = JSON.parse(readFileSync(path, "utf-8")) as CheckpointData;
  return TinyEncoder.fromCheckpoint(data);
}

function trainConfigFrom(argv: Record<string, unknown>): TrainConfig {
  const fromFile = argv.config
    ? (JSON.parse(readFileSync(String(argv.config), "utf-8")) as Partial<TrainConfig>)
    : {};
  const pick = <K extends keyof TrainConfig>(key: K, flag: unknown): TrainConfig[K] =>
    (flag ?? fromFile[key] ?? DEFAULT_TRAIN[key]) as TrainConfig[K];
  return {
    learningRate: Number(pick("learningRate", argv.lr)),
    batchSize: Number(pick("batchSize", argv.batch)),
    weightDecay: Number(pick("weightDecay", argv.weightDecay)),
    epochs: Number(pick("epochs", argv.epochs)),
    optimizer: pick("optimizer", undefined),
    seed: Number(pick("seed", argv.seed)),
  };
}

await yargs(hideBin(process.argv))
  .scriptName("mcq-scorer")
  .command(
    "train",
    "fine-tune the tiny encoder on a labeled corpus",
    (y) =>
      y
        .option("corpus", { type: "string", demandOption: true })
        .option("out", { type: "string", demandOption: true })
        .option("config", { type: "string", describe: "JSON file mirroring TrainConfig" })
        .option("lr", { type: "number" })
        .option("batch", { type: "number" })
        .option("epochs", { type: "number" })
        .option("weight-decay", { type: "number" })
        .option("seed", { type: "number" })
        .option("dim", { type: "number", default: DEFAULT_MODEL.dim })
        .option("max-len", { type: "number", default: DEFAULT_MODEL.maxLen })
        .option("tag", { type: "string", default: "cli-train" }),
    (argv) => {
      const items = loadCorpus(argv.corpus);
      const config = trainConfigFrom(argv as Record<string, unknown>);
      const result = train(items, config, {
        ...DEFAULT_MODEL,
        dim: argv.dim,
        maxLen: argv["max-len"],
      });
      const checkpoint = result.model.checkpoint();
      checkpoint.scorerId = `tiny-encoder-d${argv.dim}`;
      writeFileSync(argv.out, JSON.stringify(checkpoint), "utf-8");
      const losses = result.epochLosses.map((l) => l.toFixed(4)).join(", ");
      console.log(`trained ${items.length} items for ${config.epochs} epochs`);
      console.log(`epoch losses: ${losses}`);
      console.log(`train accuracy: ${result.trainAccuracy.toFixed(4)}`);
      console.log(`checkpoint written to ${argv.out}`);
    }
  )
  .command(
    "export",
    "score a corpus and write the bridge file",
    (y) =>
      y
        .option("checkpoint", { type: "string", demandOption: true })
        .option("corpus", { type: "string", demandOption: true })
        .option("out", { type: "string", demandOption: true })
        .option("tag", { type: "string", default: "cli-export" }),
    (argv) => {
      const model = loadCheckpoint(argv.checkpoint);
      const items = loadCorpus(argv.corpus);
      const data = JSON.parse(readFileSync(argv.checkpoint, "utf-8")) as CheckpointData;
      exportScores(model, items, argv.out, data.scorerId, argv.tag);
      console.log(`exported ${items.length} records (dimension ${model.config.dim}) to ${argv.out}`);
    }
  )
  .command(
    "score",
    "print confidence vectors for a corpus",
    (y) =>
      y
        .option("checkpoint", { type: "string", demandOption: true })
        .option("corpus", { type: "string", demandOption: true }),
    (argv) => {
      const model = loadCheckpoint(argv.checkpoint);
      for (const item of loadCorpus(argv.corpus)) {
        const scores = scoreItem(model, item)
          .map((s, i) => `${"ABCD"[i]}:${s.toFixed(4)}`)
          .join(" ");
        console.log(`${item.id}\t${scores}`);
      }
    }
  )
  .demandCommand(1)
  .strict()
  .help()
  .parseAsync();
