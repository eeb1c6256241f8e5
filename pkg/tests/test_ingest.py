import json

import pytest

from decide.ingest import (
    IngestError,
    RawPost,
    StreamStats,
    compile_patterns,
    default_dl_tags,
    default_patterns,
    extract_paragraphs,
    filter_relevant,
    parse_post_stream,
    strip_html,
)

THREE_ROW_XML = """<?xml version="1.0" encoding="utf-8"?>
<posts>
  <row Id="10" PostTypeId="1" AcceptedAnswerId="11" Score="5" Body="&lt;p&gt;how?&lt;/p&gt;" Tags="&lt;tensorflow&gt;&lt;cuda&gt;" />
  <row Id="11" PostTypeId="2" ParentId="10" Score="3" Body="&lt;p&gt;use cuda 10.0&lt;/p&gt;" />
  <row Id="12" PostTypeId="2" ParentId="10" Score="0" Body="&lt;p&gt;no idea&lt;/p&gt;" />
</posts>
"""


def write(tmp_path, name, content):
    path = tmp_path / name
    path.write_text(content, encoding="utf-8")
    return path


class TestParsePostStream:
    def test_field_mapping(self, tmp_path):
        path = write(tmp_path, "posts.xml", THREE_ROW_XML)
        posts = list(parse_post_stream(path, "xml"))
        assert [p.post_id for p in posts] == [10, 11, 12]
        answer = posts[1]
        assert answer.post_type == "answer"
        assert answer.score == 3
        assert answer.parent_id == 10

    def test_answers_inherit_question_tags(self, tmp_path):
        path = write(tmp_path, "posts.xml", THREE_ROW_XML)
        posts = list(parse_post_stream(path, "xml"))
        assert posts[1].tags == {"tensorflow", "cuda"}
        assert posts[2].tags == {"tensorflow", "cuda"}

    def test_accepted_resolved_from_question(self, tmp_path):
        path = write(tmp_path, "posts.xml", THREE_ROW_XML)
        posts = list(parse_post_stream(path, "xml"))
        assert posts[1].accepted is True
        assert posts[2].accepted is False

    def test_malformed_row_skipped_with_count(self, tmp_path):
        xml = THREE_ROW_XML.replace(
            '<row Id="12" PostTypeId="2" ParentId="10" Score="0" Body="&lt;p&gt;no idea&lt;/p&gt;" />',
            '<row Id="12" PostTypeId="2" ParentId="10" Score="0" />',
        )
        path = write(tmp_path, "posts.xml", xml)
        stats = StreamStats()
        posts = list(parse_post_stream(path, "xml", stats=stats))
        assert len(posts) == 2
        assert stats.skipped_rows == 1

    def test_jsonl_round(self, tmp_path):
        lines = [
            '{"post_id": 1, "post_type": "question", "score": 4, "body_html": "<p>q</p>", "tags": ["pytorch"]}',
            '{"post_id": 2, "post_type": "answer", "parent_id": 1, "score": 2, "accepted": true, "body_html": "<p>a</p>"}',
        ]
        path = write(tmp_path, "posts.jsonl", "\n".join(lines) + "\n")
        posts = list(parse_post_stream(path, "jsonl"))
        assert posts[1].tags == {"pytorch"}
        assert posts[1].accepted is True

    def test_unknown_format_rejected(self, tmp_path):
        path = write(tmp_path, "posts.xml", THREE_ROW_XML)
        with pytest.raises(IngestError):
            list(parse_post_stream(path, "csv"))

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(IngestError):
            list(parse_post_stream(tmp_path / "nope.xml", "xml"))


def post(body, post_id=7, score=5, accepted=False, tags=("tensorflow",), post_type="answer"):
    return RawPost(
        post_id=post_id,
        post_type=post_type,
        parent_id=1,
        score=score,
        accepted=accepted,
        body_html=body,
        tags=frozenset(tags),
    )


class TestExtractParagraphs:
    def test_pre_block_removed(self):
        paragraphs = extract_paragraphs(post("<p>use cuda 10.0</p><pre>pip install x</pre>"))
        assert [p.text for p in paragraphs] == ["use cuda 10.0"]

    def test_inline_code_kept(self):
        paragraphs = extract_paragraphs(
            post("<p>run <code>pip install tensorflow==1.5.0</code> now</p>")
        )
        assert [p.text for p in paragraphs] == ["run pip install tensorflow==1.5.0 now"]

    def test_only_code_blocks_give_nothing(self):
        assert extract_paragraphs(post("<pre><code>a = 1</code></pre>")) == []

    def test_code_inside_pre_removed(self):
        paragraphs = extract_paragraphs(
            post("<p>text</p><pre><code>import tensorflow</code></pre>")
        )
        assert [p.text for p in paragraphs] == ["text"]
        assert all("import" not in p.text for p in paragraphs)

    def test_entities_decoded(self):
        paragraphs = extract_paragraphs(post("<p>numpy &gt;= 1.16 &amp; scipy</p>"))
        assert paragraphs[0].text == "numpy >= 1.16 & scipy"

    def test_split_on_blocks_and_newlines(self):
        body = "<p>first block</p><ul><li>item one</li><li>item two</li></ul><p>third\nfourth</p>"
        texts = [p.text for p in extract_paragraphs(post(body))]
        assert texts == ["first block", "item one", "item two", "third", "fourth"]

    def test_indices_are_ordinal(self):
        body = "<p>a one</p><p>b two</p>"
        paragraphs = extract_paragraphs(post(body))
        assert [p.index for p in paragraphs] == [0, 1]
        assert all(p.post_id == 7 for p in paragraphs)


class TestFilterRelevant:
    tags = frozenset({"tensorflow", "cuda"})
    patterns = compile_patterns([r"doesn't\s+work\s+with", r"compatible"])

    def test_matching_accepted_answer(self):
        p = post("<p>tensorflow 1.13 doesn't work with cuda 10.1</p>", accepted=True, score=0)
        assert filter_relevant(p, self.tags, self.patterns)

    def test_low_score_unaccepted_rejected(self):
        p = post("<p>tensorflow 1.13 doesn't work with cuda 10.1</p>", accepted=False, score=1)
        assert not filter_relevant(p, self.tags, self.patterns)

    def test_no_dl_tag_rejected(self):
        p = post("<p>tensorflow 1.13 doesn't work with cuda 10.1</p>", accepted=True, tags=("php",))
        assert not filter_relevant(p, self.tags, self.patterns)

    def test_no_pattern_rejected(self):
        p = post("<p>have you tried turning it off and on</p>", accepted=True)
        assert not filter_relevant(p, self.tags, self.patterns)

    def test_score_above_one_without_accept(self):
        p = post("<p>they are compatible</p>", accepted=False, score=2)
        assert filter_relevant(p, self.tags, self.patterns)

    def test_pure_predicate(self):
        p = post("<p>compatible versions</p>", accepted=True)
        results = {filter_relevant(p, self.tags, self.patterns) for _ in range(10)}
        assert results == {True}


class TestDefaultConfigs:
    def test_published_pattern_rows_fire_on_their_examples(self):
        patterns = default_patterns()

        def hits(text):
            return any(p.search(text) for p in patterns)

        assert hits("I am using cuda 9.0 as 9.1 is not yet compatible with tensorflow's binary")
        assert hits("tensorflow 1.13 doesn't work with cuda 10.1 because of the following")
        assert hits("support for fftw was removed in versions of scipy >= 0.7")
        assert hits("downgrade numpy version from 1.17.2 to 1.16.4 will resolve issue")
        assert hits("the latest version of numpy requires python 3.5+, hence the error")

    def test_pattern_count(self):
        assert len(default_patterns()) == 22

    def test_tag_list_has_46_entries(self):
        assert len(default_dl_tags()) == 46

    def test_strip_html(self):
        assert strip_html("<p>a &amp; b</p><pre>kept</pre>") == "a & b kept"


class TestOrphanAnswers:
    def test_answer_without_parent_keeps_flowing_with_empty_tags(self, tmp_path):
        xml = (
            '<?xml version="1.0" encoding="utf-8"?>\n<posts>\n'
            '  <row Id="55" PostTypeId="2" ParentId="54" Score="9" Body="&lt;p&gt;an orphan&lt;/p&gt;" />\n'
            "</posts>\n"
        )
        path = tmp_path / "posts.xml"
        path.write_text(xml)
        (post,) = parse_post_stream(path, "xml")
        assert post.tags == frozenset()
        assert not filter_relevant(post, frozenset({"tensorflow"}), compile_patterns(["orphan"]))

    def test_jsonl_orphan_with_own_tags_survives(self, tmp_path):
        line = json.dumps(
            {
                "post_id": 55,
                "post_type": "answer",
                "parent_id": 54,
                "score": 9,
                "accepted": False,
                "body_html": "<p>tensorflow 2.0 is not compatible with cuda 9.0</p>",
                "tags": ["tensorflow"],
            }
        )
        path = tmp_path / "posts.jsonl"
        path.write_text(line + "\n")
        (post,) = parse_post_stream(path, "jsonl")
        assert filter_relevant(
            post, frozenset({"tensorflow"}), compile_patterns(["not compatible"])
        )
