/**
 * The stdio request loop: newline-delimited JSON, one message per line.
 *
 *   <- {"type":"hello","vocab":[...symbols...],"protocol":1}
 *   -> {"type":"ready","capabilities":["sample","dist"]}
 *   <- {"type":"sample","id":k,"prefix":[ids],"count":n,"seed":u64}
 *   -> {"type":"samples","id":k,"tokens":[n ids]}
 *   <- {"type":"dist","id":k,"prefix":[ids]}
 *   -> {"type":"distribution","id":k,"probs":[|V| reals]}
 *   -> {"type":"error","id":k?,"message":...}
 *
 * Requests are handled one at a time in arrival order, so replies carry
 * the request id and preserve request order by construction. A request
 * the loop can't make sense of gets an error reply and the stream keeps
 * going; a broken handshake or an oversized line is unrecoverable and
 * ends the process with a nonzero status. No line may exceed 10 MiB in
 * either direction. stdin closing is the normal shutdown signal.
 *
 * One wire subtlety: seeds are uint64, and values above 2^53 lose bits
 * if read off the parsed JSON as a double. The loop re-extracts the seed
 * digits from the raw line and converts them to BigInt directly.
 */

import { SYMBOLS } from "./charset";
import { sampleTokens, SequenceModel } from "./markov";
import { MASK64 } from "./rng";

export const PROTOCOL_VERSION = 1;
export const MAX_LINE_BYTES = 10 * 1024 * 1024;
export const CAPABILITIES: readonly string[] = ["sample", "dist"];

/** Largest count served in one reply; keeps the reply line under the cap. */
const MAX_COUNT_PER_REQUEST = 1_000_000;

const SEED_PATTERN = /"seed"\s*:\s*(\d+)/;

export class FatalProtocolError extends Error {}

interface ServeOptions {
  model: SequenceModel;
  input: NodeJS.ReadableStream;
  output: NodeJS.WritableStream;
}

/**
 * Split a byte stream into newline-delimited lines, enforcing the line
 * cap while buffering so a hostile peer can't balloon memory.
 */
async function* byteLines(input: NodeJS.ReadableStream): AsyncGenerator<Buffer> {
  const pending: Buffer[] = [];
  let pendingBytes = 0;
  for await (const chunk of input) {
    let buf = typeof chunk === "string" ? Buffer.from(chunk, "utf-8") : (chunk as Buffer);
    while (true) {
      const nl = buf.indexOf(0x0a);
      if (nl < 0) {
        break;
      }
      pending.push(buf.subarray(0, nl));
      pendingBytes += nl;
      if (pendingBytes > MAX_LINE_BYTES) {
        throw new FatalProtocolError("received a line over 10 MiB");
      }
      yield Buffer.concat(pending);
      pending.length = 0;
      pendingBytes = 0;
      buf = buf.subarray(nl + 1);
    }
    pending.push(buf);
    pendingBytes += buf.length;
    if (pendingBytes > MAX_LINE_BYTES) {
      throw new FatalProtocolError("received a line over 10 MiB");
    }
  }
  if (pendingBytes > 0) {
    yield Buffer.concat(pending);
  }
}

function writeLine(output: NodeJS.WritableStream, payload: unknown): void {
  output.write(JSON.stringify(payload) + "\n");
}

function writeError(output: NodeJS.WritableStream, id: unknown, message: string): void {
  if (typeof id === "number" || typeof id === "string") {
    writeLine(output, { type: "error", id, message });
  } else {
    writeLine(output, { type: "error", message });
  }
}

function parseMessage(text: string): Record<string, unknown> | null {
  let msg: unknown;
  try {
    msg = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null || Array.isArray(msg)) {
    return null;
  }
  return msg as Record<string, unknown>;
}

function checkPrefix(value: unknown, vocabSize: number): number[] | null {
  if (!Array.isArray(value)) {
    return null;
  }
  for (const t of value) {
    if (!Number.isInteger(t) || (t as number) < 0 || (t as number) >= vocabSize) {
      return null;
    }
  }
  return value as number[];
}

function handleHello(msg: Record<string, unknown>): void {
  if (msg.type !== "hello") {
    throw new FatalProtocolError(`expected a 'hello' handshake, got ${JSON.stringify(msg.type)}`);
  }
  if (msg.protocol !== PROTOCOL_VERSION) {
    throw new FatalProtocolError(
      `unsupported protocol version ${JSON.stringify(msg.protocol)} (this peer speaks ${PROTOCOL_VERSION})`,
    );
  }
  const vocab = msg.vocab;
  const matches =
    Array.isArray(vocab) &&
    vocab.length === SYMBOLS.length &&
    vocab.every((s, i) => s === SYMBOLS[i]);
  if (!matches) {
    const got = Array.isArray(vocab) ? `${vocab.length} symbols` : "no symbol list";
    throw new FatalProtocolError(`vocab mismatch: this peer serves ${SYMBOLS.length} symbols, harness sent ${got}`);
  }
}

function handleSample(
  model: SequenceModel,
  output: NodeJS.WritableStream,
  msg: Record<string, unknown>,
  raw: string,
): void {
  const id = msg.id;
  const prefix = checkPrefix(msg.prefix, model.vocabSize);
  if (prefix === null) {
    writeError(output, id, "sample needs a prefix of in-vocabulary token ids");
    return;
  }
  const count = msg.count;
  if (!Number.isInteger(count) || (count as number) < 1) {
    writeError(output, id, "sample needs an integer count >= 1");
    return;
  }
  if ((count as number) > MAX_COUNT_PER_REQUEST) {
    writeError(output, id, `count ${count} exceeds the per-request limit ${MAX_COUNT_PER_REQUEST}`);
    return;
  }
  const seedDigits = SEED_PATTERN.exec(raw);
  if (seedDigits === null) {
    writeError(output, id, "sample needs a non-negative integer seed");
    return;
  }
  const seed = BigInt(seedDigits[1]) & MASK64;
  const tokens = sampleTokens(model.nextCdf(prefix), count as number, seed);
  writeLine(output, { type: "samples", id, tokens: Array.from(tokens) });
}

function handleDist(
  model: SequenceModel,
  output: NodeJS.WritableStream,
  msg: Record<string, unknown>,
): void {
  const id = msg.id;
  const prefix = checkPrefix(msg.prefix, model.vocabSize);
  if (prefix === null) {
    writeError(output, id, "dist needs a prefix of in-vocabulary token ids");
    return;
  }
  writeLine(output, { type: "distribution", id, probs: Array.from(model.nextProbs(prefix)) });
}

/**
 * Run the protocol until stdin closes. Throws FatalProtocolError when the
 * stream is beyond saving (bad handshake, oversized line); the caller is
 * expected to report it and exit nonzero.
 */
export async function serve({ model, input, output }: ServeOptions): Promise<void> {
  let shookHands = false;
  for await (const line of byteLines(input)) {
    const raw = line.toString("utf-8");
    if (!shookHands) {
      const msg = parseMessage(raw);
      if (msg === null) {
        throw new FatalProtocolError("handshake line is not a JSON object");
      }
      try {
        handleHello(msg);
      } catch (err) {
        if (err instanceof FatalProtocolError) {
          writeError(output, msg.id, err.message);
        }
        throw err;
      }
      writeLine(output, { type: "ready", capabilities: CAPABILITIES });
      shookHands = true;
      continue;
    }

    const msg = parseMessage(raw);
    if (msg === null) {
      writeError(output, undefined, "request line is not a JSON object");
      continue;
    }
    try {
      switch (msg.type) {
        case "sample":
          handleSample(model, output, msg, raw);
          break;
        case "dist":
          handleDist(model, output, msg);
          break;
        default:
          writeError(output, msg.id, `unknown request type ${JSON.stringify(msg.type)}`);
      }
    } catch (err) {
      // A model bug shouldn't kill the stream; report it on this id.
      writeError(output, msg.id, `request failed: ${err instanceof Error ? err.message : String(err)}`);
    }
  }
}
