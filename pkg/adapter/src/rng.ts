/**
 * Counter-based splitmix64 streams, bit-compatible with the harness.
 *
 * Every random quantity is a pure function of (seed, index): draw i of
 * seed s is mix64(s + (i+1)*GAMMA) mod 2^64, and a unit float is the top
 * 53 bits of that word scaled by 2^-53. All integer work is done on
 * BigInt and masked to 64 bits, which reproduces the harness's uint64
 * arithmetic exactly; the final scale is a single IEEE-754 multiply, so
 * the floats (and everything sampled from them) match bit for bit.
 */

export const MASK64 = (1n << 64n) - 1n;
export const GAMMA = 0x9e3779b97f4a7c15n;

const MUL1 = 0xbf58476d1ce4e5b9n;
const MUL2 = 0x94d049bb133111ebn;
const FLOAT_SCALE = 2 ** -53;

/** The splitmix64 finalizer: avalanche a 64-bit word. */
export function mix64(z: bigint): bigint {
  z &= MASK64;
  z = ((z ^ (z >> 30n)) * MUL1) & MASK64;
  z = ((z ^ (z >> 27n)) * MUL2) & MASK64;
  return z ^ (z >> 31n);
}

/** Stream value `index` of `seed`, as a uint64. */
export function streamU64(seed: bigint, index: number): bigint {
  return mix64((seed + (BigInt(index) + 1n) * GAMMA) & MASK64);
}

/** Stream value `index` of `seed`, as a float in [0, 1). */
export function streamFloat(seed: bigint, index: number): number {
  return Number(streamU64(seed, index) >> 11n) * FLOAT_SCALE;
}
