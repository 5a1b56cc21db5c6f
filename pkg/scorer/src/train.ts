import * as tf from "@tensorflow/tfjs";

import { goldIndex, type MCQItem } from "./dataset.js";
import { meanCrossEntropy } from "./loss.js";
import { mulberry32, TinyEncoder, DEFAULT_MODEL, type ModelConfig } from "./model.js";
import { buildVocab } from "./tokenizer.js";

export interface TrainConfig {
  learningRate: number;
  batchSize: number;
  weightDecay: number;
  epochs: number;
  optimizer: "adamw";
  seed: number;
}

/** Reference fine-tuning settings; tiny test models scale the first two. */
export const DEFAULT_TRAIN: TrainConfig = {
  learningRate: 2e-5,
  batchSize: 1,
  weightDecay: 0.01,
  epochs: 5,
  optimizer: "adamw",
  seed: 0,
};

export class TrainError extends Error {}

export interface TrainResult {
  model: TinyEncoder;
  /** Mean cross-entropy over the whole corpus after each epoch. */
  epochLosses: number[];
  trainAccuracy: number;
}

function validateConfig(config: TrainConfig): void {
  const positive: [string, number][] = [
    ["learningRate", config.learningRate],
    ["batchSize", config.batchSize],
    ["weightDecay", config.weightDecay],
    ["epochs", config.epochs],
  ];
  for (const [name, value] of positive) {
    if (!(value > 0)) throw new TrainError(`${name} must be positive, got ${value}`);
  }
  if (config.optimizer !== "adamw") {
    throw new TrainError(`unsupported optimizer '${config.optimizer}'`);
  }
}

export function corpusLoss(model: TinyEncoder, items: MCQItem[]): number {
  return meanCrossEntropy(model.logitRows(items), items.map(goldIndex));
}

export function trainAccuracy(model: TinyEncoder, items: MCQItem[]): number {
  const rows = model.logitRows(items);
  let correct = 0;
  rows.forEach((row, i) => {
    const best = row.indexOf(Math.max(...row));
    if (best === goldIndex(items[i])) correct += 1;
  });
  return correct / items.length;
}

/**
 * Fine-tune on a fully labeled corpus with AdamW: Adam steps plus a
 * decoupled multiplicative decay on the weight matrices.
 */
export function train(
  items: MCQItem[],
  config: TrainConfig = DEFAULT_TRAIN,
  modelConfig: ModelConfig = DEFAULT_MODEL,
  model?: TinyEncoder
): TrainResult {
  validateConfig(config);
  if (items.length === 0) throw new TrainError("empty training corpus");
  const golds = items.map(goldIndex); // rejects unlabeled items up front

  const encoder = model ?? new TinyEncoder(buildVocab(items), modelConfig, config.seed);
  const optimizer = tf.train.adam(config.learningRate, 0.9, 0.999, 1e-8);
  const decayFactor = 1 - config.learningRate * config.weightDecay;
  const rng = mulberry32(config.seed ^ 0x5f3759df);

  const epochLosses: number[] = [];
  for (let epoch = 0; epoch < config.epochs; epoch++) {
    const order = items.map((_, i) => i);
    for (let i = order.length - 1; i > 0; i--) {
      const j = Math.floor(rng() * (i + 1));
      [order[i], order[j]] = [order[j], order[i]];
    }
    for (let start = 0; start < order.length; start += config.batchSize) {
      const batchIdx = order.slice(start, start + config.batchSize);
      const batch = batchIdx.map((i) => items[i]);
      const labels = tf.oneHot(batchIdx.map((i) => golds[i]), 4);
      optimizer.minimize(
        () => tf.losses.softmaxCrossEntropy(labels, encoder.logits(batch)) as tf.Scalar,
        false,
        encoder.trainableVars()
      );
      labels.dispose();
      tf.tidy(() => {
        for (const variable of encoder.decayedVars()) {
          variable.assign(variable.mul(decayFactor));
        }
      });
    }
    const loss = corpusLoss(encoder, items);
    if (!Number.isFinite(loss)) {
      throw new TrainError(`non-finite loss after epoch ${epoch + 1}: ${loss}`);
    }
    epochLosses.push(loss);
  }
  optimizer.dispose();
  return { model: encoder, epochLosses, trainAccuracy: trainAccuracy(encoder, items) };
}
