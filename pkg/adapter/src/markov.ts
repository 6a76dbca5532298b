/**
 * Order-k character chain plus the inverse-CDF sampler, arranged so every
 * float operation lands on the same IEEE-754 double the harness computes.
 *
 * Counts are integer-valued doubles (exact up to 2^53), each probability
 * is one add and one divide, CDFs are sequential left-to-right running
 * sums, and a draw picks the first CDF entry weakly above the stream
 * float. Same inputs, same operations, same rounding — so a wrapped
 * model is indistinguishable, token for token, from the harness running
 * the model in-process.
 */

import { streamFloat } from "./rng";

/** What the request loop needs from a model: exact rows and their CDFs. */
export interface SequenceModel {
  readonly vocabSize: number;
  nextProbs(prefix: ArrayLike<number>): Float64Array;
  nextCdf(prefix: ArrayLike<number>): Float64Array;
}

function cumsum(probs: Float64Array): Float64Array {
  const cdf = new Float64Array(probs.length);
  let acc = 0;
  for (let i = 0; i < probs.length; i++) {
    acc += probs[i];
    cdf[i] = acc;
  }
  return cdf;
}

/**
 * Draw `count` token ids from the distribution given by `cdf`.
 *
 * Draw i uses stream value i of `seed` and selects the first index whose
 * cdf weakly exceeds it; draws beyond the final cdf entry (possible when
 * rounding leaves it slightly under 1) fall into the last bucket.
 */
export function sampleTokens(cdf: Float64Array, count: number, seed: bigint): Int32Array {
  const last = cdf.length - 1;
  const tokens = new Int32Array(count);
  for (let i = 0; i < count; i++) {
    const u = streamFloat(seed, i);
    let t = 0;
    while (t < last && cdf[t] < u) {
      t++;
    }
    tokens[i] = t;
  }
  return tokens;
}

/** I.i.d. uniform over the vocabulary regardless of prefix. */
export class UniformModel implements SequenceModel {
  readonly vocabSize: number;
  private readonly probs: Float64Array;
  private readonly cdf: Float64Array;

  constructor(vocabSize: number) {
    this.vocabSize = vocabSize;
    this.probs = new Float64Array(vocabSize).fill(1 / vocabSize);
    this.cdf = cumsum(this.probs);
  }

  nextProbs(): Float64Array {
    return this.probs;
  }

  nextCdf(): Float64Array {
    return this.cdf;
  }
}

/**
 * Order-k chain: context window -> next-token distribution.
 *
 * Contexts are keyed by their base-|V| code, newest token in the lowest
 * digit. Unseen (or too-short) contexts answer with the fallback row; an
 * order-0 model has no contexts at all and always answers the fallback.
 */
export class MarkovModel implements SequenceModel {
  readonly order: number;
  readonly vocabSize: number;
  private readonly transitions: Map<number, Float64Array>;
  private readonly fallback: Float64Array;
  private readonly cdfCache = new Map<Float64Array, Float64Array>();

  constructor(
    order: number,
    vocabSize: number,
    transitions: Map<number, Float64Array>,
    fallback: Float64Array,
  ) {
    if (order < 0) {
      throw new Error("order must be >= 0");
    }
    if (order === 0 && transitions.size > 0) {
      throw new Error("order-0 model must have empty transitions");
    }
    this.order = order;
    this.vocabSize = vocabSize;
    this.transitions = transitions;
    this.fallback = fallback;
  }

  private contextCode(prefix: ArrayLike<number>): number {
    let code = 0;
    let scale = 1;
    for (let j = 1; j <= this.order; j++) {
      code += prefix[prefix.length - j] * scale;
      scale *= this.vocabSize;
    }
    return code;
  }

  nextProbs(prefix: ArrayLike<number>): Float64Array {
    if (this.order === 0 || prefix.length < this.order) {
      return this.fallback;
    }
    return this.transitions.get(this.contextCode(prefix)) ?? this.fallback;
  }

  nextCdf(prefix: ArrayLike<number>): Float64Array {
    const probs = this.nextProbs(prefix);
    let cdf = this.cdfCache.get(probs);
    if (cdf === undefined) {
      cdf = cumsum(probs);
      this.cdfCache.set(probs, cdf);
    }
    return cdf;
  }
}

/**
 * Fit an order-k chain by counting windows.
 *
 * transitions[c][v] = (count(c->v) + pseudo) / (count(c) + pseudo*|V|)
 * for every context observed in the corpus; unseen contexts fall back to
 * uniform. An order-0 model is the (pseudo-smoothed) unigram frequency
 * vector served as the fallback.
 */
export function trainMarkov(
  ids: ArrayLike<number>,
  order: number,
  pseudo: number,
  vocabSize: number,
): MarkovModel {
  if (order < 0) {
    throw new Error("order must be >= 0");
  }
  if (pseudo < 0) {
    throw new Error("pseudo must be >= 0");
  }
  if (ids.length <= order) {
    throw new Error(`need more than ${order} tokens to fit order ${order}, got ${ids.length}`);
  }
  if (vocabSize ** (order + 1) > Number.MAX_SAFE_INTEGER) {
    throw new Error(`order ${order} context codes exceed exact integer range`);
  }
  for (let i = 0; i < ids.length; i++) {
    const t = ids[i];
    if (!Number.isInteger(t) || t < 0 || t >= vocabSize) {
      throw new Error("corpus token id out of vocabulary range");
    }
  }

  const smooth = (counts: Float64Array): Float64Array => {
    let total = 0;
    for (let i = 0; i < counts.length; i++) {
      total += counts[i];
    }
    const denom = total + pseudo * vocabSize;
    const probs = new Float64Array(counts.length);
    for (let i = 0; i < counts.length; i++) {
      probs[i] = (counts[i] + pseudo) / denom;
    }
    return probs;
  };

  if (order === 0) {
    const counts = new Float64Array(vocabSize);
    for (let i = 0; i < ids.length; i++) {
      counts[ids[i]] += 1;
    }
    return new MarkovModel(0, vocabSize, new Map(), smooth(counts));
  }

  const windows = new Map<number, Float64Array>();
  let code = 0;
  const ctxSpan = vocabSize ** (order - 1);
  for (let j = 0; j < order; j++) {
    code = code * vocabSize + ids[j];
  }
  for (let t = order; t < ids.length; t++) {
    let counts = windows.get(code);
    if (counts === undefined) {
      counts = new Float64Array(vocabSize);
      windows.set(code, counts);
    }
    counts[ids[t]] += 1;
    // Slide the window: drop the oldest digit, append the newest.
    code = (code % ctxSpan) * vocabSize + ids[t];
  }

  const transitions = new Map<number, Float64Array>();
  for (const [ctx, counts] of windows) {
    transitions.set(ctx, smooth(counts));
  }
  const fallback = new Float64Array(vocabSize).fill(1 / vocabSize);
  return new MarkovModel(order, vocabSize, transitions, fallback);
}
