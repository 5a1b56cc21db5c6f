/**
 * Mean cross-entropy over a batch of 4-option logit rows, computed in
 * double precision with the log-sum-exp trick. This is the loss the
 * training loop records; the test suite checks it against an independently
 * coded softmax-then-log implementation.
 */
export function meanCrossEntropy(logits: number[][], golds: number[]): number {
  if (logits.length === 0) throw new Error("empty batch");
  if (logits.length !== golds.length) {
    throw new Error(`batch mismatch: ${logits.length} logit rows, ${golds.length} labels`);
  }
  let total = 0;
  for (let i = 0; i < logits.length; i++) {
    const row = logits[i];
    const gold = golds[i];
    if (row.length !== 4) throw new Error("each logit row must have 4 entries");
    if (gold < 0 || gold > 3) throw new Error(`gold index out of range: ${gold}`);
    const top = Math.max(...row);
    let sumExp = 0;
    for (const z of row) sumExp += Math.exp(z - top);
    // -log p_gold = log-sum-exp(z) - z_gold
    total += top + Math.log(sumExp) - row[gold];
  }
  const loss = total / logits.length;
  if (!Number.isFinite(loss)) throw new Error(`non-finite loss: ${loss}`);
  return loss;
}

/** Double-precision softmax over one 4-entry logit row. */
export function softmax4(row: number[]): [number, number, number, number] {
  if (row.length !== 4) throw new Error("expected 4 logits");
  const top = Math.max(...row);
  const exps = row.map((z) => Math.exp(z - top));
  const total = exps.reduce((a, b) => a + b, 0);
  return exps.map((e) => e / total) as [number, number, number, number];
}
