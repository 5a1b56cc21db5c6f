import { readFileSync } from "node:fs";

export const LABELS = ["A", "B", "C", "D"] as const;
export type OptionLabel = (typeof LABELS)[number];

export interface MCQItem {
  id: string;
  question: string;
  options: [string, string, string, string];
  gold: OptionLabel | null;
}

export class CorpusError extends Error {}

/** Load a corpus in the pipeline's native JSONL format. */
export function loadCorpus(path: string): MCQItem[] {
  const items: MCQItem[] = [];
  const seen = new Set<string>();
  const lines = readFileSync(path, "utf-8").split("\n");
  lines.forEach((line, index) => {
    const trimmed = line.trim();
    if (!trimmed) return;
    const where = `${path}:${index + 1}`;
    let rec: any;
    try {
      rec = JSON.parse(trimmed);
    } catch (e) {
      throw new CorpusError(`${where}: malformed JSON record`);
    }
    const options = rec.options;
    if (!Array.isArray(options) || options.length !== 4) {
      throw new CorpusError(`${where}: 'options' must be an array of exactly 4 texts`);
    }
    const id = String(rec.id ?? "");
    if (!id) throw new CorpusError(`${where}: missing item id`);
    if (seen.has(id)) throw new CorpusError(`${where}: duplicate item id '${id}'`);
    seen.add(id);
    let gold: OptionLabel | null = null;
    if (rec.gold != null && rec.gold !== "") {
      const raw = String(rec.gold).trim().toUpperCase();
      if (!LABELS.includes(raw as OptionLabel)) {
        throw new CorpusError(`${where}: gold label must be one of A-D, got '${rec.gold}'`);
      }
      gold = raw as OptionLabel;
    }
    items.push({
      id,
      question: String(rec.question ?? ""),
      options: options.map(String) as MCQItem["options"],
      gold,
    });
  });
  return items;
}

export function goldIndex(item: MCQItem): number {
  if (item.gold === null) {
    throw new CorpusError(`item '${item.id}' has no gold label`);
  }
  return LABELS.indexOf(item.gold);
}
