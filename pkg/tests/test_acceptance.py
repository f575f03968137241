"""One test per acceptance criterion, at the stated tolerances.

Each test prints a single PASS line when it succeeds; the session summary
repeats the verdicts under "acceptance criteria".
"""

from __future__ import annotations

import random
import statistics
import time

import pytest

from dualtrace.analyzer import Category, analyze, build_tree, classify_alphabetic, decompose_timing, filter_outliers, locate_confirmations
from dualtrace.fixtures import FIGURE1_TEXT, figure1_keys, load_script
from dualtrace.hybridizer import hybridize
from dualtrace.segmentation import ForwardMaxMatch, make_segmenter
from dualtrace.simulator import random_edit_script, random_ime_session, run_session
from dualtrace.snapshot_logger import apply_delta, diff, reconstruct
from dualtrace.trace_model import Status, parse_keystroke_log, parse_text_log


def _identity(k):
    return k.id, k.kind, k.key, k.t


def _report(n: int, text: str) -> None:
    print(f"criterion {n}: PASS  {text}")


def test_criterion_1_dsw_six_pass():
    start = time.perf_counter()
    config, actions = load_script("six_pass")
    session = run_session(actions, None, config)
    got = [(s.pass_id, s.text, s.dsw_left, s.dsw_right, s.offset) for s in session.snapshots]
    assert got == [
        (0, "A joirney o", 0, 11, 0),
        # pass 1 took no snapshot
        (2, "f a t", 11, 16, 5),
        (3, "rney of a t", 5, 16, 0),
        (4, "u", 4, 5, 0),
        (5, "journey", 2, 9, 0),
        (6, "travel ", 2, 9, -1),
    ]
    assert reconstruct(session.snapshots)[-1] == (6, "A travel of a t")
    assert time.perf_counter() - start < 1.0
    _report(1, "six-pass window sequence and final text 'A travel of a t'")


def test_criterion_2_coherence_fixture(fixtures_dir):
    keys = parse_keystroke_log((fixtures_dir / "dianretan_keys.jsonl").read_bytes())
    snaps = parse_text_log((fixtures_dir / "dianretan_text.jsonl").read_bytes())
    assert [k.key for k in keys] == list("dianretan") + ["SPACEBAR"]
    result = hybridize(keys, snaps)
    windows = [(w.start_id, w.end_id, w.coherent) for w in result.windows]
    assert [w[:2] for w in windows if w[2]] == [(266, 269), (271, 271), (273, 274)]
    assert [w[:2] for w in windows if not w[2]] == [(270, 270), (272, 272), (275, 275)]
    assert sorted((m.event_id, m.rule) for m in result.matches) == [
        (270, "syllabic_division"),
        (272, "syllabic_division"),
        (275, "ime_confirmation"),
    ]
    last = result.events[-1]
    assert last.ime is not None and last.ime.text == "电热毯" and last.ime.pinyin == "dian're'tan"
    _report(2, "windows, 2 syllabic_division + 1 ime_confirmation, 电热毯 / dian're'tan")


def test_criterion_3_laozi_counts(lexicon):
    config, actions = load_script("laozi")
    session = run_session(actions, lexicon, config)
    result = hybridize(session.keys, session.snapshots, strict=True)
    report = analyze(result.events, make_segmenter("fmm", lexicon))
    counts = report.counts()
    got = {c.value: counts[c.value] for c in (
        Category.LATIN_LETTER, Category.PINYIN_SYLLABLE, Category.WORD, Category.IME_BEFORE, Category.IME_AFTER
    )}
    assert got == {"latin_letter": 16, "pinyin_syllable": 2, "word": 5, "ime_before": 2, "ime_after": 1}
    _report(3, "Laozi category counts 16/2/5/2/1")


def test_criterion_4_figure1():
    samples = classify_alphabetic(figure1_keys(), FIGURE1_TEXT)
    between = [s.value for s in samples[Category.BETWEEN_WORD]]
    within = [s.value for s in samples[Category.WITHIN_WORD]]
    assert len(between) == 10
    assert abs(statistics.fmean(between) - 556) <= 1
    assert abs(statistics.pstdev(between) - 233) <= 3
    assert len(within) == 27
    assert abs(statistics.fmean(within[:-1]) - 258) <= 1
    _report(4, f"between n=10 mean={statistics.fmean(between):.1f} sd={statistics.pstdev(between):.2f}; within n=27")


def test_criterion_5_segmentation_tree(lexicon):
    config, actions = load_script("zhechanpin")
    session = run_session(actions, lexicon, config)
    events = hybridize(session.keys, session.snapshots, strict=True).events
    (span,) = locate_confirmations(events)
    tree = build_tree(span.event, span.letters, ForwardMaxMatch(lexicon.words))
    assert [w.content for w in tree.children] == ["这", "产品"]
    assert [s.content for w in tree.children for s in w.children] == ["zhe", "chan", "pin"]
    assert (tree.start_t, tree.end_t) == (span.letters[0].t, span.letters[-1].t)
    _report(5, "这产品 → [zhe, chan, pin], [这, 产品], root span = first..last letter")


def test_criterion_6_reconstruction_oracle():
    start = time.perf_counter()
    mismatches = 0
    for seed in range(1000):
        config, actions = random_edit_script(random.Random(seed))
        session = run_session(actions, None, config)
        rebuilt = dict(reconstruct(session.snapshots))
        state = None
        for pass_id, truth in session.truth.pass_states:
            state = rebuilt.get(pass_id, state)  # passes without a snapshot keep the last state
            mismatches += state != truth
    assert mismatches == 0
    assert time.perf_counter() - start < 30
    _report(6, "1000 random edit scripts, zero mismatches")


def test_criterion_7_diff_round_trip():
    rng = random.Random(7)
    alphabet = "abcde 电热毯千里之行"
    failures = 0
    for _ in range(10_000):
        old = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 200)))
        new = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 200)))
        failures += apply_delta(old, diff(new, old)) != new
    assert failures == 0
    _report(7, "10000 random pairs round-trip")


def test_criterion_8_hybridizer_completeness(lexicon):
    causes = set()
    for seed in range(500):
        config, actions = random_ime_session(random.Random(seed), lexicon)
        session = run_session(actions, lexicon, config)
        result = hybridize(session.keys, session.snapshots, strict=True)
        # the solver may correct positions but never adds, drops or reorders keys
        assert [_identity(e.base) for e in result.events] == [_identity(k) for k in session.keys]
        resolved = {e.id: e.rule for e in result.events if e.base.is_down and e.status is Status.RESOLVED}
        assert resolved == session.truth.causes, f"seed {seed}"
        annotated = [(e.id, e.ime.text, e.ime.pinyin, e.ime.start, e.ime.end) for e in result.events if e.ime]
        truth = [(c.id, c.text, c.pinyin, c.start, c.end) for c in session.truth.confirmations]
        assert annotated == truth, f"seed {seed}"
        causes.update(session.truth.causes.values())
    assert causes == {"syllabic_division", "separator_deletion", "chinese_punctuation", "ime_confirmation"}
    _report(8, "500 sessions, all four causes, precision = recall = 100%")


def test_criterion_9_timing_decomposition(lexicon):
    for seed in range(200):
        config, actions = random_ime_session(random.Random(seed), lexicon, n_words=3)
        session = run_session(actions, lexicon, config)
        timing = decompose_timing(session.keys)
        scripted = session.truth.timings
        gaps = [k.gap for k in scripted[1:]]
        assert timing.dwell == [k.dwell for k in scripted]
        assert timing.positive_iki == [g for g in gaps if g >= 0]
        assert timing.rollover == [g for g in gaps if g < 0]
        assert len(timing.positive_iki) + len(timing.rollover) == len(scripted) - 1
    _report(9, "dwell, positive and rollover lists equal the scripted values")


def test_criterion_10_outlier_filter():
    rng = random.Random(10)
    for _ in range(2000):
        xs = [rng.gauss(300, 80) if rng.random() < 0.9 else rng.uniform(1000, 5000) for _ in range(rng.randint(2, 60))]
        mu, s = statistics.fmean(xs), statistics.pstdev(xs)
        kept, removed = filter_outliers(xs)
        assert all(abs(x - mu) > 2 * s for x in removed)
        assert all(abs(x - mu) <= 2 * s for x in kept)
        assert sorted(kept + removed) == sorted(xs)
    # one pass removes 5000; the survivors would lose 1000 to a second pass
    sample = [100, 110, 90, 105, 95, 100, 102, 98, 1000, 5000]
    kept, removed = filter_outliers(sample)
    assert removed == [5000] and 1000 in kept
    assert filter_outliers(kept)[1] == [1000]
    _report(10, "removed values lie outside mean ± 2 SD; single pass leaves 1000 in place")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
