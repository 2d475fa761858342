"""Vocabulary loading and phrase matching vs a naive positional oracle."""

import pytest

from rimap import sdg_tagger as st
from rimap.fixtures import make_documents


def naive_scan(text: str, vocab: st.SdgVocabulary):
    """Position-by-position comparison of every phrase at every offset."""
    tokens = st.raw_tokens(text)
    lower = [t.lower() for t in tokens]
    out = {}
    for entry in vocab.entries:
        if entry.case_sensitive:
            hay, needle = tokens, list(entry.tokens)
        else:
            hay, needle = lower, [t.lower() for t in entry.tokens]
        positions = tuple(
            i for i in range(len(hay) - len(needle) + 1)
            if hay[i:i + len(needle)] == needle
        )
        if positions:
            out[(entry.sdg, entry.phrase)] = positions
    return out


def tagger_result(tagger: st.SdgTagger, text: str):
    return {(m.sdg, m.phrase): m.positions for m in tagger.tag_text(text)}


def vocab_from(rows: list[str], tmp_path):
    f = tmp_path / "vocab.csv"
    f.write_text("sdg,phrase,caseSensitive\n" + "".join(r + "\n" for r in rows),
                 encoding="utf-8")
    return st.load_vocabulary(f)


def test_load_basic_entry(tmp_path):
    vocab = vocab_from(["13,climate change,false"], tmp_path)
    assert vocab.entries[0].sdg == 13
    assert vocab.entries[0].tokens == ("climate", "change")


def test_bad_sdg_number(tmp_path):
    with pytest.raises(st.BadSdgNumber):
        vocab_from(["18,out of range,false"], tmp_path)
    with pytest.raises(st.BadSdgNumber):
        vocab_from(["0,zero,false"], tmp_path)


def test_duplicate_entry(tmp_path):
    with pytest.raises(st.DuplicateEntry):
        vocab_from(["6,clean water,false", "6,Clean Water,false"], tmp_path)


def test_shipped_vocabulary_loads(fixture_paths):
    vocab = st.load_vocabulary(fixture_paths.vocabulary)
    assert len(vocab) >= 150
    assert vocab.sdgs() == set(range(1, 18))


def test_simple_match(tmp_path):
    vocab = vocab_from(["13,climate change,false"], tmp_path)
    tagger = st.SdgTagger(vocab)
    matches = tagger.tag_text("Mitigating climate change impacts on farming.")
    assert len(matches) == 1
    assert matches[0].sdg == 13 and matches[0].count == 1
    assert matches[0].positions == (1,)


def test_token_boundary(tmp_path):
    vocab = vocab_from(["13,change,false"], tmp_path)
    tagger = st.SdgTagger(vocab)
    assert tagger.tag_text("goods exchanged daily") == []
    assert len(tagger.tag_text("a change of pace")) == 1


def test_two_phrases_twice_each(tmp_path):
    vocab = vocab_from(["6,clean water,false", "6,sanitation,false"], tmp_path)
    tagger = st.SdgTagger(vocab)
    text = ("clean water and sanitation: improving clean water access "
            "through rural sanitation programmes")
    result = tagger_result(tagger, text)
    assert result == naive_scan(text, vocab)
    assert len(result[(6, "clean water")]) == 2
    assert len(result[(6, "sanitation")]) == 2


def test_overlapping_matches_all_reported(tmp_path):
    vocab = vocab_from(["7,solar power,false", "7,power grid,false"], tmp_path)
    tagger = st.SdgTagger(vocab)
    result = tagger_result(tagger, "new solar power grid capacity")
    assert result == {(7, "solar power"): (1,), (7, "power grid"): (2,)}


def test_case_sensitive_entry(tmp_path):
    vocab = vocab_from(["17,ODA,true", "17,oda,false"], tmp_path)
    tagger = st.SdgTagger(vocab)
    result = tagger_result(tagger, "ODA flows and the oda register and Oda village")
    assert result[(17, "ODA")] == (0,)
    # the folded entry matches every casing
    assert result[(17, "oda")] == (0, 4, 7)


def test_monotonicity_adding_entry_never_removes_matches(tmp_path, fixture_paths):
    base = st.load_vocabulary(fixture_paths.vocabulary)
    extended = st.SdgVocabulary(entries=base.entries + [
        st.VocabularyEntry(sdg=9, phrase="platform", case_sensitive=False)
    ])
    t1, t2 = st.SdgTagger(base), st.SdgTagger(extended)
    for doc in make_documents(60, seed=5):
        r1, r2 = tagger_result(t1, doc), tagger_result(t2, doc)
        assert set(r1) <= set(r2)
        for key in r1:
            assert r1[key] == r2[key]


def test_oracle_equivalence_on_fixture_docs(fixture_paths):
    vocab = st.load_vocabulary(fixture_paths.vocabulary)
    tagger = st.SdgTagger(vocab)
    for doc in make_documents(200, seed=11):
        assert tagger_result(tagger, doc) == naive_scan(doc, vocab)


def test_apply_tags_distinct_sdgs(tmp_path):
    from decimal import Decimal

    from rimap.model import Project, Source

    vocab = vocab_from(["6,clean water,false", "6,sanitation,false",
                        "13,climate change,false"], tmp_path)
    project = Project(
        project_id="X", source=Source.EU_FP, acronym="", title="Clean water",
        abstract="sanitation and climate change and clean water",
        programme="", instrument="", call_topic_code="", start_year=2020,
        end_year=2021, total_cost=Decimal("0"), funder_contribution=Decimal("0"),
    )
    matches = st.tag(project, vocab)
    st.apply_tags(project, matches)
    assert set(project.enrichment.sdg_tags) == {6, 13}
    assert project.enrichment.sdg_tags[6] == ("clean water", "sanitation")
