import * as tf from "@tensorflow/tfjs";

import type { MCQItem } from "./dataset.js";
import { encodePair, encodeQuestion, vocabSize, type EncodedPair, type Vocab } from "./tokenizer.js";

export interface ModelConfig {
  dim: number;
  heads: number;
  ffnDim: number;
  maxLen: number;
}

export const DEFAULT_MODEL: ModelConfig = { dim: 16, heads: 2, ffnDim: 32, maxLen: 48 };

const LN_EPS = 1e-5;

/** Deterministic 32-bit PRNG so checkpoints are reproducible per seed. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function seededNormal(rng: () => number, shape: number[], stddev: number): tf.Tensor {
  const n = shape.reduce((a, b) => a * b, 1);
  const values = new Float32Array(n);
  for (let i = 0; i < n; i += 2) {
    // Box-Muller transform
    const u = Math.max(rng(), 1e-12);
    const v = rng();
    const r = Math.sqrt(-2 * Math.log(u));
    values[i] = r * Math.cos(2 * Math.PI * v) * stddev;
    if (i + 1 < n) values[i + 1] = r * Math.sin(2 * Math.PI * v) * stddev;
  }
  return tf.tensor(values, shape);
}

export interface CheckpointData {
  format: "mcq-scorer-checkpoint";
  scorerId: string;
  seed: number;
  model: ModelConfig;
  vocab: string[];
  weights: Record<string, { shape: number[]; values: number[] }>;
}

/**
 * One-block transformer encoder with a pairwise scoring head.
 *
 * Layout per (question, option) pair: [CLS] q [SEP] option, composite
 * embedding word + position + segment. The head maps the final [CLS]
 * state to a single logit; four pair logits are softmaxed into the
 * item's confidence vector.
 */
export class TinyEncoder {
  readonly vocab: Vocab;
  readonly config: ModelConfig;
  readonly seed: number;
  readonly vars: Record<string, tf.Variable>;

  constructor(vocab: Vocab, config: ModelConfig = DEFAULT_MODEL, seed = 0) {
    this.vocab = vocab;
    this.config = config;
    this.seed = seed;
    const { dim, ffnDim, maxLen } = config;
    const rng = mulberry32(seed);
    const init = (shape: number[]) => tf.variable(seededNormal(rng, shape, 0.02));
    const zeros = (shape: number[]) => tf.variable(tf.zeros(shape));
    const ones = (shape: number[]) => tf.variable(tf.ones(shape));
    this.vars = {
      wordEmb: init([vocabSize(vocab), dim]),
      posEmb: init([maxLen, dim]),
      segEmb: init([2, dim]),
      wq: init([dim, dim]),
      wk: init([dim, dim]),
      wv: init([dim, dim]),
      wo: init([dim, dim]),
      ln1g: ones([dim]),
      ln1b: zeros([dim]),
      ffnW1: init([dim, ffnDim]),
      ffnB1: zeros([ffnDim]),
      ffnW2: init([ffnDim, dim]),
      ffnB2: zeros([dim]),
      ln2g: ones([dim]),
      ln2b: zeros([dim]),
      // Zero-initialized head: an untrained model scores every option
      // identically and therefore emits uniform confidence vectors.
      headW: zeros([dim, 1]),
      headB: zeros([1]),
    };
  }

  /** Variables subject to decoupled weight decay (matrices only). */
  decayedVars(): tf.Variable[] {
    return ["wq", "wk", "wv", "wo", "ffnW1", "ffnW2", "headW"].map((n) => this.vars[n]);
  }

  trainableVars(): tf.Variable[] {
    return Object.values(this.vars);
  }

  private layerNorm(x: tf.Tensor, gain: tf.Variable, bias: tf.Variable): tf.Tensor {
    const mean = x.mean(-1, true);
    const centered = x.sub(mean);
    const variance = centered.square().mean(-1, true);
    return centered.div(variance.add(LN_EPS).sqrt()).mul(gain).add(bias);
  }

  /** Final hidden states, shape [batch, maxLen, dim]. */
  hidden(encoded: EncodedPair[]): tf.Tensor {
    const { dim, heads, maxLen } = this.config;
    const headDim = dim / heads;
    const batch = encoded.length;
    const ids = tf.tensor2d(encoded.map((e) => e.ids), [batch, maxLen], "int32");
    const segs = tf.tensor2d(encoded.map((e) => e.segments), [batch, maxLen], "int32");
    const mask = tf.tensor2d(encoded.map((e) => e.mask), [batch, maxLen]);

    let x: tf.Tensor = tf
      .gather(this.vars.wordEmb, ids)
      .add(this.vars.posEmb.expandDims(0))
      .add(tf.gather(this.vars.segEmb, segs));

    const split = (w: tf.Variable) =>
      x.matMul(w.expandDims(0).tile([batch, 1, 1]))
        .reshape([batch, maxLen, heads, headDim])
        .transpose([0, 2, 1, 3]); // [batch, heads, len, headDim]
    const q = split(this.vars.wq);
    const k = split(this.vars.wk);
    const v = split(this.vars.wv);
    // Padded keys get a large negative bias so they never receive attention.
    const bias = mask.sub(1).mul(1e9).reshape([batch, 1, 1, maxLen]);
    const scores = q.matMul(k, false, true).div(Math.sqrt(headDim)).add(bias);
    const attended = tf
      .softmax(scores)
      .matMul(v)
      .transpose([0, 2, 1, 3])
      .reshape([batch, maxLen, dim])
      .matMul(this.vars.wo.expandDims(0).tile([batch, 1, 1]));
    x = this.layerNorm(x.add(attended), this.vars.ln1g, this.vars.ln1b);

    const ffn = x
      .matMul(this.vars.ffnW1.expandDims(0).tile([batch, 1, 1]))
      .add(this.vars.ffnB1)
      .relu()
      .matMul(this.vars.ffnW2.expandDims(0).tile([batch, 1, 1]))
      .add(this.vars.ffnB2);
    return this.layerNorm(x.add(ffn), this.vars.ln2g, this.vars.ln2b);
  }

  /** [CLS] states, shape [batch, dim]. */
  pooled(encoded: EncodedPair[]): tf.Tensor {
    const states = this.hidden(encoded);
    return states
      .slice([0, 0, 0], [encoded.length, 1, this.config.dim])
      .reshape([encoded.length, this.config.dim]);
  }

  /** One logit per question-option pair, shape [items, 4]. */
  logits(items: MCQItem[]): tf.Tensor {
    const pairs: EncodedPair[] = [];
    for (const item of items) {
      for (const option of item.options) {
        pairs.push(encodePair(item.question, option, this.vocab, this.config.maxLen));
      }
    }
    return this.pooled(pairs)
      .matMul(this.vars.headW)
      .add(this.vars.headB)
      .reshape([items.length, 4]);
  }

  /** Logit rows read out as plain doubles (f32 values widened exactly). */
  logitRows(items: MCQItem[]): number[][] {
    return tf.tidy(() => this.logits(items).arraySync() as number[][]);
  }

  /** Question embedding: final-layer [CLS] state of the question-only layout. */
  embedQuestions(items: MCQItem[]): number[][] {
    return tf.tidy(() => {
      const encoded = items.map((item) =>
        encodeQuestion(item.question, this.vocab, this.config.maxLen)
      );
      return this.pooled(encoded).arraySync() as number[][];
    });
  }

  checkpoint(scorerId = "tiny-encoder"): CheckpointData {
    const weights: CheckpointData["weights"] = {};
    for (const [name, variable] of Object.entries(this.vars)) {
      weights[name] = {
        shape: variable.shape.slice(),
        values: Array.from(variable.dataSync()),
      };
    }
    return {
      format: "mcq-scorer-checkpoint",
      scorerId,
      seed: this.seed,
      model: { ...this.config },
      vocab: this.vocab.chars.slice(),
      weights,
    };
  }

  static fromCheckpoint(data: CheckpointData): TinyEncoder {
    if (data.format !== "mcq-scorer-checkpoint") {
      throw new Error(`not a scorer checkpoint: format '${(data as any).format}'`);
    }
    const vocab: Vocab = {
      chars: data.vocab.slice(),
      index: new Map(data.vocab.map((ch, i) => [ch, i])),
    };
    const model = new TinyEncoder(vocab, data.model, data.seed);
    for (const [name, variable] of Object.entries(model.vars)) {
      const saved = data.weights[name];
      if (!saved) throw new Error(`checkpoint missing weight '${name}'`);
      variable.assign(tf.tensor(saved.values, saved.shape));
    }
    return model;
  }
}
