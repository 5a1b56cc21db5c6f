import { writeFileSync } from "node:fs";

import type { MCQItem } from "./dataset.js";
import { softmax4 } from "./loss.js";
import type { TinyEncoder } from "./model.js";

/** Per-option confidence vector for one item (Stage I output). */
export function scoreItem(model: TinyEncoder, item: MCQItem): [number, number, number, number] {
  return softmax4(model.logitRows([item])[0]);
}

export function embedQuestion(model: TinyEncoder, item: MCQItem): number[] {
  return model.embedQuestions([item])[0];
}

/**
 * Write confidence vectors and question embeddings for a whole corpus in
 * the pipeline's score-bridge JSONL format: a header record carrying
 * {dimension, scorer_id, checkpoint}, then one record per item.
 */
export function exportScores(
  model: TinyEncoder,
  items: MCQItem[],
  path: string,
  scorerId = "tiny-encoder",
  checkpointTag = "untagged"
): void {
  const rows = model.logitRows(items);
  const embeddings = model.embedQuestions(items);
  const lines = [
    JSON.stringify({
      dimension: model.config.dim,
      scorer_id: scorerId,
      checkpoint: checkpointTag,
    }),
  ];
  items.forEach((item, i) => {
    lines.push(
      JSON.stringify({
        id: item.id,
        confidence: softmax4(rows[i]),
        embedding: embeddings[i],
      })
    );
  });
  writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}
