#!/usr/bin/env node
/**
 * Entry point: build the model named on the command line, then hand the
 * process's stdio to the request loop.
 *
 *   pygen-adapter uniform
 *   pygen-adapter markov:order=2:train=corpus.txt
 *   pygen-adapter markov:order=2:train=corpus.txt:pseudo=0.5
 *
 * The markov form fits the chain on the whole training file at startup,
 * exactly as the harness's builtin trainer does, which is what makes the
 * two ends of a round trip interchangeable. Default pseudo-count is 1.0
 * (Laplace), again matching the harness's trained-oracle default.
 */

import process from "node:process";

import { loadCorpusIds, VOCAB_SIZE } from "./charset";
import { MarkovModel, SequenceModel, trainMarkov, UniformModel } from "./markov";
import { FatalProtocolError, serve } from "./server";

const DEFAULT_PSEUDO = 1.0;

export function buildModel(spec: string): SequenceModel {
  if (spec === "uniform") {
    return new UniformModel(VOCAB_SIZE);
  }
  if (spec.startsWith("markov:")) {
    let order: number | null = null;
    let trainPath: string | null = null;
    let pseudo = DEFAULT_PSEUDO;
    for (const field of spec.slice("markov:".length).split(":")) {
      const eq = field.indexOf("=");
      if (eq < 0) {
        throw new Error(`bad model spec field '${field}' in '${spec}'`);
      }
      const key = field.slice(0, eq);
      const value = field.slice(eq + 1);
      if (key === "order") {
        order = Number.parseInt(value, 10);
      } else if (key === "train") {
        trainPath = value;
      } else if (key === "pseudo") {
        pseudo = Number.parseFloat(value);
      } else {
        throw new Error(`unknown model spec key '${key}' in '${spec}'`);
      }
    }
    if (order === null || Number.isNaN(order) || trainPath === null) {
      throw new Error(`markov spec needs order= and train=: '${spec}'`);
    }
    return trainMarkov(loadCorpusIds(trainPath), order, pseudo, VOCAB_SIZE) as MarkovModel;
  }
  throw new Error(`unrecognized model spec '${spec}' (expected 'uniform' or 'markov:...')`);
}

async function main(): Promise<void> {
  const args = process.argv.slice(2);
  if (args.length !== 1) {
    process.stderr.write("usage: pygen-adapter <uniform | markov:order=<k>:train=<path>[:pseudo=<f>]>\n");
    process.exit(1);
  }
  let model: SequenceModel;
  try {
    model = buildModel(args[0]);
  } catch (err) {
    process.stderr.write(`pygen-adapter: ${err instanceof Error ? err.message : String(err)}\n`);
    process.exit(1);
    return;
  }
  // The harness owns our stdout; if it goes away mid-write, just stop.
  process.stdout.on("error", () => process.exit(1));
  try {
    await serve({ model, input: process.stdin, output: process.stdout });
  } catch (err) {
    if (err instanceof FatalProtocolError) {
      process.stderr.write(`pygen-adapter: ${err.message}\n`);
      process.exit(1);
    }
    throw err;
  }
}

if (require.main === module) {
  main().catch((err) => {
    process.stderr.write(`pygen-adapter: ${err instanceof Error ? err.stack ?? err.message : String(err)}\n`);
    process.exit(1);
  });
}
