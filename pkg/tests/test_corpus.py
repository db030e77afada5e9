import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metapattern.corpus import (
    Corpus,
    Kind,
    Sentence,
    Token,
    classify_word,
    entity,
    format_sentence,
    format_token,
    load_ontology,
    parse_typed_corpus,
    tag_data_types,
    word,
    write_corpus,
)
from metapattern.errors import EmptyCorpus, InvalidOntology, InvalidTypePath, ParseError, ValidationError


def test_parse_single_sentence(ontology):
    line = "E|United_States|United States|LOCATION>COUNTRY W|president E|Barack_Obama|Barack Obama|PERSON>POLITICIAN"
    c = parse_typed_corpus(line, ontology)
    assert len(c) == 1
    assert c.total_tokens == 3
    us, pres, obama = c.sentences[0].tokens
    assert us.kind is Kind.ENTITY and us.mention == "United States" and us.type_path == ("LOCATION", "COUNTRY")
    assert pres == word("president")
    assert obama.type_path == ("PERSON", "POLITICIAN")


def test_empty_stream_is_empty_corpus():
    with pytest.raises(EmptyCorpus):
        parse_typed_corpus("")
    with pytest.raises(EmptyCorpus):
        parse_typed_corpus("\n\n")


def test_child_before_parent_is_invalid(ontology):
    with pytest.raises(InvalidTypePath):
        parse_typed_corpus("E|Obama|Obama|POLITICIAN>PERSON W|x", ontology)


def test_unknown_type_is_validation_error(ontology):
    with pytest.raises(ValidationError):
        parse_typed_corpus("E|Mars|Mars|LOCATION>PLANET", ontology)


@pytest.mark.parametrize("line", ["X|foo", "W|a|b", "E|x|y", "D|55|NUMBER"])
def test_malformed_lines_carry_line_number(line):
    with pytest.raises(ParseError, match="line 2"):
        parse_typed_corpus("W|ok\n" + line + "\n")


def test_token_invariants():
    with pytest.raises(ValidationError):
        Token(Kind.WORD, "x", mention="y")
    with pytest.raises(ValidationError):
        Token(Kind.ENTITY, "x", "x", ())
    with pytest.raises(ValidationError):
        Token(Kind.WORD, "")


def test_escaping_round_trip():
    s = Sentence((Token(Kind.WORD, "a|b"), Token(Kind.PUNCT, "\\"), entity("A|B", "A | B\\", "PERSON")), "doc", 0)
    c = parse_typed_corpus(format_sentence(s))
    assert c.sentences[0] == s


def test_doc_ids_number_sentences_per_document():
    c = parse_typed_corpus("a\tW|x\nb\tW|y\na\tW|z\n")
    assert [s.key for s in c] == [("a", 0), ("b", 0), ("a", 1)]


def test_spec_token_examples():
    c = parse_typed_corpus("W|president E|Barack_Obama|Barack Obama|PERSON>POLITICIAN D|55|DIGIT M|, P|prime_minister")
    kinds = [t.kind for t in c.sentences[0].tokens]
    assert kinds == [Kind.WORD, Kind.ENTITY, Kind.DATA, Kind.PUNCT, Kind.PHRASE]
    assert c.sentences[0].tokens[2].data_type == "DIGIT"


# ---- ontology


def test_ontology_height():
    o = load_ontology("ROOT\tLOCATION\nLOCATION\tCOUNTRY\nLOCATION\tCITY\n")
    assert o.height == 2
    assert o.root == "ROOT"
    assert o.subtypes("LOCATION") == ("COUNTRY", "CITY")
    assert o.siblings("CITY") == ("COUNTRY",)


@pytest.mark.parametrize("text", [
    "A\tA\n",
    "R1\tA\nR2\tB\n",
    "R\tA\nA\tB\nB\tA\n",
    "R\tA\nR\tB\nA\tC\nB\tC\n",
    "R A\n",
])
def test_bad_ontologies(text):
    with pytest.raises(InvalidOntology):
        load_ontology(text)


def test_ontology_round_trip(ontology):
    again = load_ontology("\n".join(ontology.to_lines()))
    assert again == ontology


# ---- data types


@pytest.mark.parametrize("surface,expected", [
    ("55", "DIGIT"), ("3.5", "DIGIT"), ("1,000", "DIGIT"),
    ("percent", "DIGITUNIT"), ("%", "DIGITUNIT"), ("hundred", "DIGITUNIT"), ("thousand", "DIGITUNIT"),
    ("first", "DIGITRANK"), ("1st", "DIGITRANK"), ("second", "DIGITRANK"), ("2nd", "DIGITRANK"), ("44th", "DIGITRANK"),
    ("January", "MONTH"), ("Jan", "MONTH"), ("May", "MONTH"), ("may", None),
    ("1931", "YEAR"), ("hello", None),
])
def test_classify_word(surface, expected):
    assert classify_word(surface) == expected


def test_tagging_rewrites_words_only():
    s = Sentence((word("55"), word("percent"), word("44th"), word("hello"), entity("55", "55", "PERSON")))
    out = tag_data_types(s)
    assert [t.data_type for t in out.tokens[:3]] == ["DIGIT", "DIGITUNIT", "DIGITRANK"]
    assert out.tokens[3] == word("hello")
    assert out.tokens[4] == s.tokens[4]
    assert [t.surface for t in out.tokens] == [t.surface for t in s.tokens]


def test_day_next_to_month():
    s = Sentence((word("6"), word("May"), word("1931"), word("on"), word("6")))
    out = tag_data_types(s)
    assert [t.data_type for t in out.tokens] == ["DAY", "MONTH", "YEAR", None, "DIGIT"]


_words = st.sampled_from(["55", "6", "May", "may", "June", "1931", "44th", "first", "percent", "hello", "the", "32"])


@given(st.lists(_words, min_size=1, max_size=10))
@settings(max_examples=200, deadline=None)
def test_tagging_is_idempotent(ws):
    s = Sentence(tuple(word(w) for w in ws))
    once = tag_data_types(s)
    assert tag_data_types(once) == once


_surface = st.text(alphabet=st.sampled_from("ab|\\$.,_xY"), min_size=1, max_size=5)


@st.composite
def tokens(draw):
    k = draw(st.sampled_from(list(Kind)))
    surf = draw(_surface)
    if k is Kind.ENTITY:
        mention = draw(st.text(alphabet=st.sampled_from("ab |\\X"), min_size=1, max_size=6).filter(lambda m: m.strip() == m and m.strip()))
        path = draw(st.sampled_from([("PERSON",), ("PERSON", "POLITICIAN"), ("LOCATION", "CITY")]))
        return Token(k, surf, mention, path)
    if k is Kind.DATA:
        return Token(k, surf, data_type=draw(st.sampled_from(["DIGIT", "YEAR", "DAY"])))
    return Token(k, surf)


@given(sents=st.lists(st.lists(tokens(), min_size=1, max_size=6), min_size=1, max_size=4))
@settings(max_examples=150, deadline=None)
def test_serialize_parse_round_trip(sents, ontology):
    corpus = Corpus(tuple(Sentence(tuple(ts), "doc", k) for k, ts in enumerate(sents)))
    buf = io.StringIO()
    write_corpus(corpus, buf)
    again = parse_typed_corpus(buf.getvalue(), ontology)
    assert again == corpus
    assert again.total_tokens == sum(len(ts) for ts in sents)
    assert all(format_token(t) for s in again for t in s.tokens)
