/**
 * The 27-symbol character set: `a`..`z` at ids 0..25, space at 26.
 *
 * Token ids, not characters, are what travels over the wire; the symbol
 * list itself only appears in the handshake, where the harness sends its
 * vocabulary and the adapter refuses to serve any other.
 */

import fs from "node:fs";

export const SYMBOLS: readonly string[] = [..."abcdefghijklmnopqrstuvwxyz", " "];
export const VOCAB_SIZE = SYMBOLS.length;

const CODE_A = 0x61;
const CODE_Z = 0x7a;
const CODE_SPACE = 0x20;

export class CharsetError extends Error {}

/** Map raw bytes to token ids, rejecting anything outside the charset. */
export function tokenizeBytes(data: Buffer): Int32Array {
  const ids = new Int32Array(data.length);
  for (let i = 0; i < data.length; i++) {
    const b = data[i];
    if (b >= CODE_A && b <= CODE_Z) {
      ids[i] = b - CODE_A;
    } else if (b === CODE_SPACE) {
      ids[i] = 26;
    } else {
      const hex = b.toString(16).padStart(2, "0");
      throw new CharsetError(`disallowed byte 0x${hex} at offset ${i}`);
    }
  }
  return ids;
}

/** Tokenize a UTF-8 string (convenience for tests and literals). */
export function tokenizeText(text: string): Int32Array {
  return tokenizeBytes(Buffer.from(text, "utf-8"));
}

/** Read a corpus file and tokenize the whole thing. */
export function loadCorpusIds(path: string): Int32Array {
  return tokenizeBytes(fs.readFileSync(path));
}
