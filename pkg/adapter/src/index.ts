export { GAMMA, MASK64, mix64, streamFloat, streamU64 } from "./rng";
export {
  CharsetError,
  loadCorpusIds,
  SYMBOLS,
  tokenizeBytes,
  tokenizeText,
  VOCAB_SIZE,
} from "./charset";
export {
  MarkovModel,
  sampleTokens,
  SequenceModel,
  trainMarkov,
  UniformModel,
} from "./markov";
export {
  CAPABILITIES,
  FatalProtocolError,
  MAX_LINE_BYTES,
  PROTOCOL_VERSION,
  serve,
} from "./server";
export { buildModel } from "./cli";
