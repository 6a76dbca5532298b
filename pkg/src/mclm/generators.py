"""Next-token generator contract, builtin analytic oracles, and the bridge
client for external generator processes.

A generator is anything that can draw N tokens for a given prefix. The
evaluation harness treats it as a black box; builtin Markov/uniform
oracles additionally expose their exact conditional distribution so the
Monte-Carlo estimate can be checked against ground truth.

Seeding scheme (normative, implemented identically by external peers):

* ``sample_next(prefix, count, seed)`` returns tokens where token ``i``
  is stream draw ``i`` of ``seed`` (see ``rng``), mapped through the
  inverse CDF of the model's next-token distribution. The CDF is the
  left-to-right float64 cumulative sum; a draw selects the first index
  whose cumulative weakly exceeds it.
* Hence sampling ``count`` tokens equals concatenating chunks where the
  chunk starting at offset ``o`` uses seed ``stream_skip(seed, o)``. The
  bridge batches large requests this way, and the approximator shards
  work across threads the same way, without changing a single token.
* Callers give each evaluation position its own stream via
  ``derive_seed(global_seed, position)``.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    CategoricalDistribution,
    MclmError,
    TokenSequence,
    Vocabulary,
    VocabMismatch,
    as_token_array,
)
from .rng import derive_seed, stream_skip

#: Protocol constants shared with external peers.
PROTOCOL_VERSION = 1
MAX_LINE_BYTES = 10 * 1024 * 1024
DEFAULT_BATCH_LIMIT = 4096
DEFAULT_TIMEOUT = 30.0


class GeneratorError(MclmError):
    """A generator failed while producing samples."""


class CorpusTooShort(MclmError):
    """Training corpus shorter than order + 1."""


class UnsupportedCapability(MclmError):
    """The generator does not expose its exact next-token distribution."""


class BridgeProtocolError(GeneratorError):
    """An external peer violated the wire protocol; carries the bad line."""

    def __init__(self, message: str, line: str | None = None):
        super().__init__(message if line is None else f"{message}: {line!r}")
        self.line = line


class GeneratorHandle:
    """Contract implemented by every generator (builtin or external)."""

    vocabulary: Vocabulary

    def sample_next(
        self, prefix: TokenSequence, count: int, seed: int
    ) -> np.ndarray:
        """Draw ``count`` next-token ids (int32), deterministic in ``seed``."""
        raise NotImplementedError

    @property
    def supports_true_dist(self) -> bool:
        return False

    def true_next_dist(self, prefix: TokenSequence) -> CategoricalDistribution:
        raise UnsupportedCapability(
            f"{type(self).__name__} does not expose exact distributions"
        )

    def close(self) -> None:
        """Release any owned resources (no-op for builtin generators)."""

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class _CdfGenerator(GeneratorHandle):
    """Shared sampling path for builtin oracles: exact dist -> inverse CDF."""

    def _next_probs(self, prefix: TokenSequence) -> np.ndarray:
        raise NotImplementedError

    def _next_cdf(self, prefix: TokenSequence) -> np.ndarray:
        return np.cumsum(self._next_probs(prefix))

    def sample_next(self, prefix, count: int, seed: int) -> np.ndarray:
        if count < 0:
            raise GeneratorError(f"negative sample count {count}")
        return kernels.sample_tokens(self._next_cdf(prefix), count, seed)

    @property
    def supports_true_dist(self) -> bool:
        return True

    def true_next_dist(self, prefix) -> CategoricalDistribution:
        return CategoricalDistribution(self._next_probs(prefix))


class UniformGenerator(_CdfGenerator):
    """I.i.d. uniform over the vocabulary regardless of prefix.

    Its exact BPC on any text over the vocabulary is log2 |V|; the
    classic guessing baseline.
    """

    def __init__(self, vocab: Vocabulary):
        self.vocabulary = vocab
        self._probs = np.full(vocab.size, 1.0 / vocab.size)
        self._cdf = np.cumsum(self._probs)

    def _next_probs(self, prefix) -> np.ndarray:
        return self._probs

    def _next_cdf(self, prefix) -> np.ndarray:
        return self._cdf


def make_uniform_generator(vocab: Vocabulary) -> UniformGenerator:
    return UniformGenerator(vocab)


@dataclass(frozen=True)
class MarkovModel:
    """Order-k character chain: context window -> next-token distribution.

    ``transitions`` maps k-token contexts to probability vectors;
    ``fallback`` serves unseen (or too-short) contexts. An order-0 model
    has no contexts at all and always answers with ``fallback``.
    """

    order: int
    vocab_size: int
    transitions: dict[tuple[int, ...], np.ndarray]
    fallback: np.ndarray

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be >= 0")
        if self.order == 0 and self.transitions:
            raise ValueError("order-0 model must have empty transitions")

    def next_probs(self, prefix: TokenSequence) -> np.ndarray:
        if self.order == 0 or len(prefix) < self.order:
            return self.fallback
        context = tuple(int(t) for t in prefix[-self.order :])
        return self.transitions.get(context, self.fallback)


def train_markov(
    corpus: TokenSequence,
    order: int,
    pseudo_count: float = 0.0,
    *,
    vocab_size: int,
) -> MarkovModel:
    """Fit an order-k chain by counting windows.

    transitions[c][v] = (count(c->v) + pseudo) / (count(c) + pseudo*|V|)
    for every context observed in the corpus; unseen contexts fall back
    to uniform. An order-0 model is the (pseudo-smoothed) unigram
    frequency vector served as the fallback.
    """
    ids = as_token_array(corpus)
    if order < 0:
        raise ValueError("order must be >= 0")
    if pseudo_count < 0:
        raise ValueError("pseudo_count must be >= 0")
    if len(ids) <= order:
        raise CorpusTooShort(
            f"need more than {order} tokens to fit order {order}, got {len(ids)}"
        )
    v = vocab_size
    if len(ids) and (ids.min() < 0 or ids.max() >= v):
        raise ValueError("corpus token id out of vocabulary range")

    if order == 0:
        counts = np.bincount(ids, minlength=v).astype(np.float64)
        fallback = (counts + pseudo_count) / (counts.sum() + pseudo_count * v)
        return MarkovModel(0, v, {}, _freeze(fallback))

    # Encode each (context, next) window as one integer for fast counting.
    codes = ids[order:].astype(np.int64)
    for j in range(1, order + 1):
        codes += ids[order - j : len(ids) - j].astype(np.int64) * v**j
    pair_ids, pair_counts = np.unique(codes, return_counts=True)
    ctx_codes = pair_ids // v
    next_ids = pair_ids % v

    transitions: dict[tuple[int, ...], np.ndarray] = {}
    boundaries = np.flatnonzero(np.diff(ctx_codes)) + 1
    for lo, hi in zip(
        np.concatenate(([0], boundaries)),
        np.concatenate((boundaries, [len(ctx_codes)])),
    ):
        counts = np.zeros(v)
        counts[next_ids[lo:hi]] = pair_counts[lo:hi]
        probs = (counts + pseudo_count) / (counts.sum() + pseudo_count * v)
        transitions[_decode_context(int(ctx_codes[lo]), order, v)] = _freeze(probs)

    fallback = _freeze(np.full(v, 1.0 / v))
    return MarkovModel(order, v, transitions, fallback)


def _decode_context(code: int, order: int, vocab_size: int) -> tuple[int, ...]:
    digits = []
    for _ in range(order):
        code, d = divmod(code, vocab_size)
        digits.append(d)
    return tuple(reversed(digits))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


class MarkovGenerator(_CdfGenerator):
    """Analytic oracle wrapping a MarkovModel; caches per-context CDFs."""

    def __init__(self, model: MarkovModel, vocab: Vocabulary):
        if model.vocab_size != vocab.size:
            raise VocabMismatch(
                f"model over {model.vocab_size} symbols, vocabulary has {vocab.size}"
            )
        self.vocabulary = vocab
        self.model = model
        self._cdf_cache: dict[int, np.ndarray] = {}

    def _next_probs(self, prefix) -> np.ndarray:
        return self.model.next_probs(prefix)

    def _next_cdf(self, prefix) -> np.ndarray:
        probs = self._next_probs(prefix)
        key = id(probs)  # model arrays are frozen; identity is stable
        cdf = self._cdf_cache.get(key)
        if cdf is None:
            cdf = np.cumsum(probs)
            self._cdf_cache[key] = cdf
        return cdf


def make_markov_generator(model: MarkovModel, vocab: Vocabulary) -> MarkovGenerator:
    return MarkovGenerator(model, vocab)


def sample_sequence(
    gen: GeneratorHandle, length: int, seed: int, prefix: TokenSequence | None = None
) -> np.ndarray:
    """Roll out a sequence by feeding the generator its own outputs.

    One token per step; step t uses stream ``derive_seed(seed, t)``. This
    is generation (not evaluation — the harness itself never feeds model
    output back as context).
    """
    out = list(as_token_array(prefix if prefix is not None else []))
    start = len(out)
    for t in range(start, start + length):
        ctx = as_token_array(out)
        token = gen.sample_next(ctx, 1, derive_seed(seed, t))
        out.append(int(token[0]))
    return as_token_array(out[start:])


class ExternalGenerator(GeneratorHandle):
    """Bridge client driving a peer process over the wire protocol.

    Protocol (version 1): newline-delimited JSON over stdio, one object
    per line, no line over 10 MiB. stderr is the peer's to log on.

      -> {"type":"hello","vocab":[...symbols...],"protocol":1}
      <- {"type":"ready","capabilities":["sample"(,"dist")]}
      -> {"type":"sample","id":k,"prefix":[ids],"count":n,"seed":u64}
      <- {"type":"samples","id":k,"tokens":[n ids]}
      -> {"type":"dist","id":k,"prefix":[ids]}
      <- {"type":"distribution","id":k,"probs":[|V| reals]}
      <- {"type":"error","id":k?,"message":...}   (peer-side failure)

    Replies carry the request id and arrive in request order. Requests
    larger than ``batch_limit`` are split into chunks whose seeds are
    skip-ahead offsets of the request seed (see module docstring), so
    any batch size yields the identical token stream.
    """

    def __init__(
        self,
        command: str,
        vocab: Vocabulary,
        batch_limit: int = DEFAULT_BATCH_LIMIT,
        timeout: float = DEFAULT_TIMEOUT,
    ):
        if batch_limit < 1:
            raise ValueError("batch_limit must be >= 1")
        self.vocabulary = vocab
        self.command = command
        self.batch_limit = batch_limit
        self.timeout = timeout
        self._lock = threading.Lock()
        self._next_id = 0
        self._capabilities: tuple[str, ...] = ()
        self._proc = subprocess.Popen(
            command,
            shell=True,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=None,
        )
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        self._handshake()

    # -- line transport ----------------------------------------------------

    def _read_loop(self):
        stream = self._proc.stdout
        while True:
            try:
                raw = stream.readline(MAX_LINE_BYTES + 1)
            except ValueError:  # stream closed under us
                raw = b""
            if not raw:
                self._lines.put(None)  # EOF
                return
            if len(raw) > MAX_LINE_BYTES:
                self._lines.put(OverflowError(len(raw)))
                return
            self._lines.put(raw)

    def _send(self, obj: dict) -> None:
        line = json.dumps(obj, separators=(",", ":")) + "\n"
        try:
            self._proc.stdin.write(line.encode("utf-8"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise BridgeProtocolError(f"peer closed stdin ({e})") from e

    def _recv(self) -> dict:
        try:
            raw = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise BridgeProtocolError(
                f"no reply within {self.timeout}s (peer hung?)"
            ) from None
        if raw is None:
            code = self._proc.poll()
            raise BridgeProtocolError(f"peer closed its stdout (exit code {code})")
        if isinstance(raw, OverflowError):
            raise BridgeProtocolError("peer sent a line over 10 MiB")
        text = raw.decode("utf-8", errors="replace").rstrip("\n")
        try:
            msg = json.loads(text)
        except json.JSONDecodeError:
            raise BridgeProtocolError("peer sent malformed JSON", text) from None
        if not isinstance(msg, dict) or "type" not in msg:
            raise BridgeProtocolError("peer sent a non-message object", text)
        return msg

    def _request(self, obj: dict, expect: str) -> dict:
        self._send(obj)
        msg = self._recv()
        if msg.get("type") == "error":
            raise BridgeProtocolError(
                f"peer error: {msg.get('message', '<no message>')}"
            )
        if msg.get("type") != expect:
            raise BridgeProtocolError(
                f"expected {expect!r} reply", json.dumps(msg)
            )
        if msg.get("id") != obj["id"]:
            raise BridgeProtocolError(
                f"reply id {msg.get('id')!r} does not match request id {obj['id']}",
                json.dumps(msg),
            )
        return msg

    # -- protocol ----------------------------------------------------------

    def _handshake(self):
        try:
            self._send(
                {
                    "type": "hello",
                    "vocab": list(self.vocabulary.symbols),
                    "protocol": PROTOCOL_VERSION,
                }
            )
            msg = self._recv()
        except BridgeProtocolError:
            self.close()
            raise
        if msg.get("type") == "error":
            self.close()
            message = str(msg.get("message", ""))
            if "vocab" in message.lower():
                raise VocabMismatch(f"peer rejected handshake: {message}")
            raise BridgeProtocolError(f"peer rejected handshake: {message}")
        if msg.get("type") != "ready":
            self.close()
            raise BridgeProtocolError("expected 'ready' handshake", json.dumps(msg))
        caps = msg.get("capabilities", [])
        if not isinstance(caps, list) or "sample" not in caps:
            self.close()
            raise BridgeProtocolError(
                "peer must advertise the 'sample' capability", json.dumps(msg)
            )
        self._capabilities = tuple(str(c) for c in caps)

    def sample_next(self, prefix, count: int, seed: int) -> np.ndarray:
        if count < 0:
            raise GeneratorError(f"negative sample count {count}")
        prefix_ids = [int(t) for t in prefix]
        out = np.empty(count, dtype=np.int32)
        with self._lock:
            offset = 0
            while offset < count:
                chunk = min(self.batch_limit, count - offset)
                self._next_id += 1
                msg = self._request(
                    {
                        "type": "sample",
                        "id": self._next_id,
                        "prefix": prefix_ids,
                        "count": chunk,
                        "seed": stream_skip(seed, offset),
                    },
                    expect="samples",
                )
                tokens = msg.get("tokens")
                if not isinstance(tokens, list) or len(tokens) != chunk:
                    raise BridgeProtocolError(
                        f"expected {chunk} tokens", json.dumps(msg)
                    )
                arr = np.asarray(tokens)
                if arr.size and (
                    not np.issubdtype(arr.dtype, np.integer)
                    or arr.min() < 0
                    or arr.max() >= self.vocabulary.size
                ):
                    raise BridgeProtocolError(
                        "peer returned out-of-vocabulary token", json.dumps(msg)
                    )
                out[offset : offset + chunk] = arr.astype(np.int32)
                offset += chunk
        return out

    @property
    def supports_true_dist(self) -> bool:
        return "dist" in self._capabilities

    def true_next_dist(self, prefix) -> CategoricalDistribution:
        if not self.supports_true_dist:
            raise UnsupportedCapability(
                "peer did not advertise the 'dist' capability"
            )
        with self._lock:
            self._next_id += 1
            msg = self._request(
                {
                    "type": "dist",
                    "id": self._next_id,
                    "prefix": [int(t) for t in prefix],
                },
                expect="distribution",
            )
        probs = msg.get("probs")
        if not isinstance(probs, list) or len(probs) != self.vocabulary.size:
            raise BridgeProtocolError(
                f"expected {self.vocabulary.size} probabilities", json.dumps(msg)
            )
        try:
            return CategoricalDistribution(np.asarray(probs, dtype=np.float64))
        except (ValueError, TypeError) as e:
            raise BridgeProtocolError(f"peer sent an invalid distribution ({e})")

    def close(self) -> None:
        proc = getattr(self, "_proc", None)
        if proc is None:
            return
        try:
            if proc.stdin and not proc.stdin.closed:
                proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def make_external_generator(
    command: str,
    vocab: Vocabulary,
    batch_limit: int = DEFAULT_BATCH_LIMIT,
    timeout: float = DEFAULT_TIMEOUT,
) -> ExternalGenerator:
    return ExternalGenerator(command, vocab, batch_limit=batch_limit, timeout=timeout)


#: Default pseudo-count for CLI-trained Markov oracles. Laplace smoothing
#: keeps every transition strictly positive so the oracle's own exact BPC
#: is finite on held-out text.
DEFAULT_SPEC_PSEUDO = 1.0


def parse_generator_spec(
    spec: str,
    vocab: Vocabulary,
    *,
    batch_limit: int = DEFAULT_BATCH_LIMIT,
    timeout: float = DEFAULT_TIMEOUT,
) -> GeneratorHandle:
    """Build a generator from a CLI spec string.

    Grammar:
      builtin:uniform
      builtin:markov:order=<k>:train=<path>[:pseudo=<float>]
      external:cmd=<shell command>
    """
    if spec == "builtin:uniform":
        return make_uniform_generator(vocab)
    if spec.startswith("builtin:markov:"):
        fields = spec[len("builtin:markov:") :].split(":")
        order: int | None = None
        train_path: str | None = None
        pseudo = DEFAULT_SPEC_PSEUDO
        for f in fields:
            key, sep, value = f.partition("=")
            if not sep:
                raise ValueError(f"bad generator spec field {f!r} in {spec!r}")
            if key == "order":
                order = int(value)
            elif key == "train":
                train_path = value
            elif key == "pseudo":
                pseudo = float(value)
            else:
                raise ValueError(f"unknown generator spec key {key!r} in {spec!r}")
        if order is None or train_path is None:
            raise ValueError(f"markov spec needs order= and train=: {spec!r}")
        from .corpus import load_char_corpus

        train_corpus = load_char_corpus(train_path)
        if train_corpus.vocab.symbols != vocab.symbols:
            raise VocabMismatch("training corpus vocabulary differs")
        model = train_markov(
            train_corpus.data, order, pseudo, vocab_size=vocab.size
        )
        return make_markov_generator(model, vocab)
    if spec.startswith("external:cmd="):
        command = spec[len("external:cmd=") :]
        if not command:
            raise ValueError("external spec needs a command")
        return make_external_generator(
            command, vocab, batch_limit=batch_limit, timeout=timeout
        )
    raise ValueError(f"unrecognized generator spec {spec!r}")
