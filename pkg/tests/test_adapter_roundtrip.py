"""Cross-process round trip through the reference adapter.

The adapter is a separate Node package that serves a character n-gram
model over the wire protocol. When both ends wrap the same model file,
evaluation through the bridge must equal evaluation in-process down to
the last bit — same tokens, same distributions, same report bytes.

These tests skip cleanly when the adapter is not built, so the core
suite never depends on it.
"""

import shutil
from pathlib import Path

import numpy as np
import pytest

from mclm.cli import main
from mclm.core import Vocabulary
from mclm.corpus import TEXT8_VOCAB, generate_demo_text, tokenize_text
from mclm.generators import (
    VocabMismatch,
    make_external_generator,
    make_markov_generator,
    train_markov,
)
from mclm.metrics import EvalConfig, evaluate, evaluate_true

ADAPTER_CLI = Path(__file__).resolve().parent.parent / "adapter" / "dist" / "cli.js"

pytestmark = pytest.mark.skipif(
    shutil.which("node") is None or not ADAPTER_CLI.exists(),
    reason="reference adapter not built (npm install && npm test in adapter/)",
)


@pytest.fixture()
def train_file(tmp_path):
    path = tmp_path / "train.txt"
    path.write_text(generate_demo_text(900, 2024))
    return path


def adapter_cmd(spec: str) -> str:
    return f"node {ADAPTER_CLI} {spec}"


def external(spec: str, **kwargs):
    return make_external_generator(adapter_cmd(spec), TEXT8_VOCAB, **kwargs)


# -- sample and dist equality -------------------------------------------------


def test_adapter_uniform_matches_builtin_bit_for_bit():
    gen = external("uniform")
    try:
        from mclm.generators import make_uniform_generator

        builtin = make_uniform_generator(TEXT8_VOCAB)
        prefix = np.array([1, 2, 3], dtype=np.int32)
        assert np.array_equal(
            gen.sample_next(prefix, 500, 424242), builtin.sample_next(prefix, 500, 424242)
        )
        theirs = gen.true_next_dist(prefix).probs
        ours = builtin.true_next_dist(prefix).probs
        assert theirs.tobytes() == ours.tobytes()
    finally:
        gen.close()


def test_adapter_markov_matches_builtin_bit_for_bit(train_file):
    model = train_markov(tokenize_text(train_file.read_text()), 2, 0.5, vocab_size=27)
    builtin = make_markov_generator(model, TEXT8_VOCAB)
    gen = external(f"markov:order=2:train={train_file}:pseudo=0.5")
    try:
        prefix = tokenize_text("the quick")
        assert np.array_equal(
            gen.sample_next(prefix, 1000, 99), builtin.sample_next(prefix, 1000, 99)
        )
        theirs = gen.true_next_dist(prefix).probs
        ours = builtin.true_next_dist(prefix).probs
        assert theirs.tobytes() == ours.tobytes()
    finally:
        gen.close()


def test_adapter_chunked_batches_match_one_shot(train_file):
    model = train_markov(tokenize_text(train_file.read_text()), 1, 1.0, vocab_size=27)
    builtin = make_markov_generator(model, TEXT8_VOCAB)
    prefix = tokenize_text("dog")
    want = builtin.sample_next(prefix, 100, 12345)
    for batch_limit in (7, 64, 4096):
        gen = external(f"markov:order=1:train={train_file}", batch_limit=batch_limit)
        try:
            assert np.array_equal(gen.sample_next(prefix, 100, 12345), want)
        finally:
            gen.close()


def test_adapter_default_pseudo_matches_builtin_default(train_file):
    # Both ends default to Laplace smoothing (pseudo = 1.0); leaving the
    # field off either spec must not change a single token.
    from mclm.generators import parse_generator_spec

    builtin = parse_generator_spec(f"builtin:markov:order=2:train={train_file}", TEXT8_VOCAB)
    gen = external(f"markov:order=2:train={train_file}")
    try:
        prefix = tokenize_text("a")
        assert np.array_equal(
            gen.sample_next(prefix, 200, 777), builtin.sample_next(prefix, 200, 777)
        )
    finally:
        gen.close()


def test_adapter_rejects_foreign_vocab(train_file):
    tiny = Vocabulary(("a", "b", "c", "d", "e"))
    with pytest.raises(VocabMismatch, match="vocab"):
        make_external_generator(adapter_cmd("uniform"), tiny)


# -- whole-pipeline equality ----------------------------------------------------


def test_evaluation_through_adapter_is_byte_identical(train_file):
    ids = tokenize_text(train_file.read_text())
    gold = ids[:40]
    cfg = EvalConfig(n_samples=200, smoothing_eta=1e-3, prefix_window=8, seed=7)

    model = train_markov(ids, 2, 1.0, vocab_size=27)
    builtin = make_markov_generator(model, TEXT8_VOCAB)
    ours = evaluate(builtin, gold, cfg)
    ours_true = evaluate_true(builtin, gold, cfg)

    gen = external(f"markov:order=2:train={train_file}")
    try:
        theirs = evaluate(gen, gold, cfg)
        theirs_true = evaluate_true(gen, gold, cfg)
    finally:
        gen.close()

    assert theirs == ours
    assert theirs.to_json() == ours.to_json()
    assert theirs_true == ours_true
    assert theirs_true.to_json() == ours_true.to_json()


def test_cli_round_trip_reports_byte_identical(capsys, train_file, tmp_path):
    reports = {}
    specs = {
        "builtin": f"builtin:markov:order=2:train={train_file}",
        "external": f"external:cmd={adapter_cmd(f'markov:order=2:train={train_file}')}",
    }
    for name, spec in specs.items():
        out_path = tmp_path / f"{name}.json"
        code = main(
            [
                "evaluate",
                "--generator", spec,
                "--corpus", str(train_file),
                "--n", "150",
                "--seed", "1729",
                "--true-bpc",
                "--out", str(out_path),
            ]
        )
        capsys.readouterr()
        assert code == 0
        true_path = out_path.with_suffix(".true.json")
        reports[name] = (out_path.read_bytes(), true_path.read_bytes())

    ok = reports["builtin"] == reports["external"]
    detail = "EvalReport and exact-column twin files equal byte for byte"
    line = f"[acceptance] cross-process-round-trip: {'PASS' if ok else 'FAIL'} ({detail})"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line
