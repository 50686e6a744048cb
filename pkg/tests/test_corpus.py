import json
import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opinion_detect.corpus import (
    CorpusError,
    FunnelConfig,
    KeywordSet,
    TweetRecord,
    dedup,
    filter_influential,
    has_engagement,
    influence_score,
    is_persian,
    load_keywords,
    match_keywords,
    parse_corpus,
    read_corpus,
    run_funnel,
    write_corpus,
)
from opinion_detect.labels import CLASS_ORDER, OpinionLabel, SuperCategory

KW = KeywordSet.from_strings(["آب", "خشکسالی", "سیل"])


def rec(rid, text="خشکسالی در ایران است", likes=300, comments=100, retweets=100, lang=None):
    return TweetRecord(rid, text, likes, comments, retweets, lang)


def line(**fields):
    return json.dumps(fields, ensure_ascii=False)


class TestLabels:
    def test_super_categories(self):
        assert OpinionLabel.GAIN.super_category is SuperCategory.PROACTIVE
        assert OpinionLabel.NON_GAIN.super_category is SuperCategory.PROACTIVE
        assert OpinionLabel.NON_LOSSES.super_category is SuperCategory.PREVENTIVE
        assert OpinionLabel.LOSSES.super_category is SuperCategory.PREVENTIVE

    def test_order_and_parse(self):
        assert CLASS_ORDER == ("gain", "non-gain", "non-losses", "losses")
        assert OpinionLabel.parse("non-losses") is OpinionLabel.NON_LOSSES
        with pytest.raises(ValueError, match="gains"):
            OpinionLabel.parse("gains")


class TestParse:
    def test_three_lines_in_order(self):
        lines = [line(id=str(i), text="آب", likes=i, comments=0, retweets=0) for i in range(3)]
        records = parse_corpus(lines)
        assert [r.id for r in records] == ["0", "1", "2"]
        assert records[2].likes == 2

    def test_negative_count_names_line(self):
        lines = [line(id="a", text="آب"), line(id="b", text="آب", likes=-1)]
        with pytest.raises(CorpusError, match="line 2") as err:
            parse_corpus(lines)
        assert err.value.lineno == 2

    def test_empty(self):
        assert parse_corpus([]) == []
        assert parse_corpus(["", "\n"]) == []

    @pytest.mark.parametrize(
        "bad, message",
        [
            ({"text": "آب"}, "missing field 'id'"),
            ({"id": "a"}, "missing field 'text'"),
            ({"id": "a", "text": "  "}, "text is empty"),
            ({"id": "a", "text": "آب", "likes": 1.5}, "likes must be an integer"),
            ({"id": "a", "text": "آب", "retweets": "3"}, "retweets must be an integer"),
            ({"id": "a", "text": "آب", "comments": True}, "comments must be an integer"),
            ({"id": "a", "text": "آب", "created_at": "yesterday"}, "ISO-8601"),
        ],
    )
    def test_schema_errors(self, bad, message):
        with pytest.raises(CorpusError, match=message):
            parse_corpus([json.dumps(bad)])

    def test_invalid_json(self):
        with pytest.raises(CorpusError, match="line 1: invalid JSON"):
            parse_corpus(["{not json"])

    def test_lenient_skips_with_warning(self, caplog):
        lines = [line(id="a", text="آب"), line(id="b", text="آب", likes=-1), line(id="c", text="سیل")]
        with caplog.at_level(logging.WARNING):
            records = parse_corpus(lines, strict=False)
        assert [r.id for r in records] == ["a", "c"]
        assert "line 2" in caplog.text

    def test_optional_fields_and_numeric_id(self):
        [r] = parse_corpus([line(id=12, text="آب", lang="fa", created_at="2022-03-01T10:00:00Z", user_id=7)])
        assert (r.id, r.lang, r.created_at, r.user_id) == ("12", "fa", "2022-03-01T10:00:00Z", "7")

    def test_write_read_roundtrip(self, tmp_path):
        records = [rec("a"), rec("b", "سیل آمد", lang="fa")]
        write_corpus(records, tmp_path / "c.jsonl")
        assert read_corpus(tmp_path / "c.jsonl") == records


class TestInfluence:
    def test_examples(self):
        assert influence_score(rec("a", likes=100, comments=100, retweets=100)) == 600
        assert influence_score(rec("a", likes=0, comments=0, retweets=0)) == 0
        assert influence_score(rec("a", likes=10, comments=20, retweets=30)) == 140

    @given(st.integers(0, 2**31 - 1), st.integers(0, 2**31 - 1), st.integers(0, 2**31 - 1))
    def test_matches_formula(self, likes, comments, retweets):
        assert influence_score(rec("a", likes=likes, comments=comments, retweets=retweets)) == (
            likes + 2 * comments + 3 * retweets
        )

    def test_threshold_boundary(self):
        at = rec("a", likes=100, comments=100, retweets=100)
        below = rec("b", likes=99, comments=100, retweets=100)
        assert filter_influential([at, below], 600) == [at]
        assert filter_influential([at, below], 0) == [at, below]
        with pytest.raises(ValueError):
            filter_influential([at], -1)

    @settings(deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 300), st.integers(0, 300), st.integers(0, 300)), max_size=30))
    def test_monotone_in_threshold(self, counts):
        corpus = [rec(str(i), likes=a, comments=b, retweets=c) for i, (a, b, c) in enumerate(counts)]
        sizes = [len(filter_influential(corpus, t)) for t in range(0, 2000, 50)]
        assert sizes == sorted(sizes, reverse=True)


class TestPredicates:
    def test_engagement(self):
        assert not has_engagement(rec("a", likes=0, comments=0, retweets=0))
        assert has_engagement(rec("a", likes=1, comments=0, retweets=0))
        assert has_engagement(rec("a", likes=0, comments=0, retweets=1))

    def test_is_persian(self):
        assert not is_persian(rec("a", "Water crisis in the south"))
        assert is_persian(rec("a", "Water crisis", lang="fa"))
        assert is_persian(rec("a", "خشکسالی گسترده است"))
        # Arabic: Arabic script but no Persian marker.
        assert not is_persian(rec("a", "الماء في العراق مهم جدا"))
        # Persian without پ چ ژ گ but with a function word.
        assert is_persian(rec("a", "آب را ذخیره کنید"))
        # Mostly Latin with one Persian word.
        assert not is_persian(rec("a", "drought is severe this year in گ"))

    def test_match_keywords(self):
        assert match_keywords(rec("a", "خشکسالی بزرگ"), KeywordSet.from_strings(["خشکسالی"])) == {"خشکسالی"}
        assert match_keywords(rec("a", "هوا گرم است"), KW) == set()
        assert match_keywords(rec("a", "آب و سیل"), KW) == {"آب", "سیل"}
        # Substring match survives ZWNJ compounds and Arabic code points.
        assert match_keywords(rec("a", "آب‌ها"), KW) == {"آب"}
        assert match_keywords(rec("a", "خشكسالي"), KW) == {"خشکسالی"}

    def test_keyword_set_invariants(self, tmp_path):
        with pytest.raises(ValueError):
            KeywordSet(("آب", "آب"))
        with pytest.raises(ValueError):
            KeywordSet(("",))
        path = tmp_path / "kw.txt"
        path.write_text("آب\n# comment\n\nآب\nخشكسالي\n", encoding="utf-8")
        assert load_keywords(path).keywords == ("آب", "خشکسالی")


class TestDedup:
    def test_keep_first_text(self):
        assert [r.id for r in dedup([rec("a", "x"), rec("b", "x")])] == ["a"]

    def test_id(self):
        assert [r.id for r in dedup([rec("a", "x"), rec("a", "y")])] == ["a"]

    def test_empty(self):
        assert dedup([]) == []

    def test_whitespace_and_normalization(self):
        out = dedup([rec("a", "آب  و خاک"), rec("b", " آب و خاک "), rec("c", "علي"), rec("d", "علی")])
        assert [r.id for r in out] == ["a", "c"]

    @settings(deadline=None)
    @given(st.lists(st.tuples(st.sampled_from("abcde"), st.sampled_from(["آب", "آب ", "سیل", "x", "X"])), max_size=20))
    def test_idempotent_and_distinct(self, pairs):
        corpus = [rec(i, t) for i, t in pairs]
        once = dedup(corpus)
        assert dedup(once) == once
        assert len({r.id for r in once}) == len(once)
        assert len({" ".join(r.text.split()) for r in once}) == len(once)


class TestFunnel:
    def test_all_pass(self):
        corpus = [rec("a", "خشکسالی است"), rec("b", "آب نیست")]
        out, report = run_funnel(corpus, KW)
        assert out == corpus
        assert [(s.n_in, s.n_out) for s in report.stages] == [(2, 2)] * 5

    def test_ten_record_example(self):
        corpus = [
            rec("r1", "خشکسالی امسال شدید است"),
            rec("r2", "آب سد کم است"),
            rec("r3", "سیل در راه است"),
            rec("r4", "آب و خشکسالی است"),
            rec("r1", "something else entirely"),  # duplicate id
            rec("r6", "آب سد کم است"),  # duplicate text
            rec("r7", "drought and water", lang="en"),  # not Persian
            rec("r8", "خشکسالی جدی است", likes=0, comments=0, retweets=0),  # no engagement
            rec("r9", "هوای امروز گرم است"),  # no keyword
            rec("r10", "آب گران شد", likes=99, comments=100, retweets=100),  # 599
        ]
        out, report = run_funnel(corpus, KW)
        assert [r.id for r in out] == ["r1", "r2", "r3", "r4"]
        assert [(s.name, s.n_in, s.n_out) for s in report.stages] == [
            ("dedup", 10, 8),
            ("language", 8, 7),
            ("engagement", 7, 6),
            ("keywords", 6, 5),
            ("influence", 5, 4),
        ]
        assert report.keyword_frequencies == {"آب": 2, "خشکسالی": 2, "سیل": 1}

    def test_empty_corpus(self, caplog):
        with caplog.at_level(logging.WARNING):
            out, report = run_funnel([], KW)
        assert out == []
        assert all(s.n_in == s.n_out == 0 for s in report.stages)
        assert report.final_count == 0
        assert "no records" in caplog.text

    def test_threshold_config(self):
        corpus = [rec("a", "آب است", likes=1, comments=0, retweets=0)]
        assert run_funnel(corpus, KW)[0] == []
        assert run_funnel(corpus, KW, FunnelConfig(threshold=0))[0] == corpus

    def test_report_text_shape(self):
        _, report = run_funnel([rec("a", "آب است")], KW)
        text = report.to_text()
        assert text.splitlines()[0] == "Stage\tIn\tOut"
        assert "Keyword\tNumber" in text and text.rstrip().endswith("Total\t1")
        assert report.to_dict()["keyword_frequencies"][0] == {"keyword": "آب", "count": 1}


records_strategy = st.lists(
    st.builds(
        rec,
        st.sampled_from(["a", "b", "c", "d", "e", "f"]),
        st.sampled_from(["آب است", "سیل آمد", "water", "خشکسالی", "گرم است", "آب  است"]),
        st.integers(0, 400),
        st.integers(0, 150),
        st.integers(0, 150),
        st.sampled_from([None, "fa", "en"]),
    ),
    max_size=25,
)


@settings(max_examples=300, deadline=None)
@given(records_strategy, st.integers(0, 900))
def test_stage_counts_chain(corpus, threshold):
    out, report = run_funnel(corpus, KW, FunnelConfig(threshold=threshold))
    for a, b in zip(report.stages, report.stages[1:]):
        assert a.n_out == b.n_in
    assert all(s.n_out <= s.n_in for s in report.stages)
    assert report.stages[0].n_in == len(corpus) and report.final_count == len(out) <= len(corpus)


@settings(max_examples=500, deadline=None)
@given(records_strategy, st.integers(0, 900))
def test_dedup_last_never_keeps_fewer(corpus, threshold):
    # Filters are per-record predicates, so deduplicating after them can only
    # keep as many records as the fixed dedup-first order, or more.
    fixed, _ = run_funnel(corpus, KW, FunnelConfig(threshold=threshold))
    survivors = [
        t for t in corpus
        if is_persian(t) and has_engagement(t) and match_keywords(t, KW) and influence_score(t) >= threshold
    ]
    assert len(dedup(survivors)) >= len(fixed)


def test_dedup_first_can_drop_an_engaged_duplicate():
    # The first copy fails the engagement filter and shadows the later copy.
    corpus = [rec("a", "آب است", 0, 0, 0), rec("b", "آب است", 300, 100, 100)]
    fixed, _ = run_funnel(corpus, KW)
    assert fixed == []
    assert [t.id for t in dedup([t for t in corpus if has_engagement(t)])] == ["b"]
