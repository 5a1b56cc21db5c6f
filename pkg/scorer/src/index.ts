export { loadCorpus, goldIndex, CorpusError, LABELS } from "./dataset.js";
export type { MCQItem, OptionLabel } from "./dataset.js";
export {
  buildVocab,
  encodePair,
  encodeQuestion,
  vocabSize,
  TokenizerError,
  PAD,
  CLS,
  SEP,
  UNK,
} from "./tokenizer.js";
export type { EncodedPair, Vocab } from "./tokenizer.js";
export { TinyEncoder, DEFAULT_MODEL, mulberry32 } from "./model.js";
export type { ModelConfig, CheckpointData } from "./model.js";
export { meanCrossEntropy, softmax4 } from "./loss.js";
export { train, trainAccuracy, corpusLoss, DEFAULT_TRAIN, TrainError } from "./train.js";
export type { TrainConfig, TrainResult } from "./train.js";
export { scoreItem, embedQuestion, exportScores } from "./export.js";
