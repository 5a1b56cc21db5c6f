import type { MCQItem } from "./dataset.js";

export const PAD = 0;
export const CLS = 1;
export const SEP = 2;
export const UNK = 3;
const RESERVED = ["<pad>", "<cls>", "<sep>", "<unk>"];

export class TokenizerError extends Error {}

/**
 * Character-level vocabulary. Characters are single Unicode scalar values,
 * which maps cleanly onto the mostly-Chinese corpus this scorer targets.
 */
export interface Vocab {
  chars: string[]; // index -> char, including the reserved slots
  index: Map<string, number>;
}

export function buildVocab(items: MCQItem[]): Vocab {
  const seen = new Set<string>();
  for (const item of items) {
    for (const ch of item.question) seen.add(ch);
    for (const option of item.options) for (const ch of option) seen.add(ch);
  }
  const chars = [...RESERVED, ...[...seen].sort()];
  const index = new Map(chars.map((ch, i) => [ch, i]));
  return { chars, index };
}

export function vocabSize(vocab: Vocab): number {
  return vocab.chars.length;
}

function charIds(text: string, vocab: Vocab): number[] {
  return [...text].map((ch) => vocab.index.get(ch) ?? UNK);
}

export interface EncodedPair {
  /** [CLS], q1..qn, [SEP], a1..am, padded with PAD up to maxLen. */
  ids: number[];
  /** Segment ids: 0 through the [SEP], 1 for option tokens, 0 on padding. */
  segments: number[];
  /** 1 on real tokens, 0 on padding. */
  mask: number[];
  /** Unpadded length n + m + 2. */
  length: number;
}

/**
 * Lay out one question-option pair. When the pair overflows maxLen the
 * question tail is truncated; the option is never cut.
 */
export function encodePair(
  question: string,
  option: string,
  vocab: Vocab,
  maxLen: number
): EncodedPair {
  if (!option) throw new TokenizerError("option text must be non-empty");
  if (!question) throw new TokenizerError("question text must be non-empty");
  const optionIds = charIds(option, vocab);
  let questionIds = charIds(question, vocab);
  const budget = maxLen - optionIds.length - 2;
  if (budget < 1) {
    throw new TokenizerError(
      `option of ${optionIds.length} tokens leaves no room for the question (maxLen=${maxLen})`
    );
  }
  if (questionIds.length > budget) {
    questionIds = questionIds.slice(0, budget);
  }
  const ids = [CLS, ...questionIds, SEP, ...optionIds];
  const length = ids.length;
  const segments = new Array(length).fill(0);
  for (let i = questionIds.length + 2; i < length; i++) segments[i] = 1;
  const mask = new Array(length).fill(1);
  while (ids.length < maxLen) {
    ids.push(PAD);
    segments.push(0);
    mask.push(0);
  }
  return { ids, segments, mask, length };
}

/** Question-only layout used for embeddings: [CLS], q1..qn, [SEP]. */
export function encodeQuestion(question: string, vocab: Vocab, maxLen: number): EncodedPair {
  if (!question) throw new TokenizerError("question text must be non-empty");
  let questionIds = charIds(question, vocab);
  if (questionIds.length > maxLen - 2) {
    questionIds = questionIds.slice(0, maxLen - 2);
  }
  const ids = [CLS, ...questionIds, SEP];
  const length = ids.length;
  const segments = new Array(length).fill(0);
  const mask = new Array(length).fill(1);
  while (ids.length < maxLen) {
    ids.push(PAD);
    segments.push(0);
    mask.push(0);
  }
  return { ids, segments, mask, length };
}
