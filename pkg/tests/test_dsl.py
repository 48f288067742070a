import json
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from relfacts import dsl
from relfacts.assignments import ghz_constraints
from relfacts.dsl import (
    ConstraintDecl,
    ContextBlock,
    Interact,
    Measure,
    ObserverDecl,
    ParseError,
    Prepare,
    ScenarioAst,
    SemanticError,
    SystemDecl,
    Undo,
    format_ast,
    parse,
)
from relfacts.perspective import builtin_contexts, exact_distribution
from relfacts.scenario import full_protocol

INVALID = Path(__file__).parent / "fixtures" / "invalid"
EXPECTED = json.loads((INVALID / "expected.json").read_text())

HEADER = """\
system S1
system S2
system S3
observer A1
observer B1
prepare ghz S1 S2 S3
"""


class TestParse:
    def test_bundled_file(self):
        ast = parse(dsl.builtin_source())
        assert len(ast.of_type(Interact)) + len(ast.of_type(Undo)) == 9
        assert len(ast.of_type(ContextBlock)) == 4
        assert len(ast.of_type(ConstraintDecl)) == 4

    def test_duplicate_declaration(self):
        with pytest.raises(ParseError) as exc:
            parse("system S1\nsystem S1")
        assert exc.value.line == 2

    @pytest.mark.parametrize("source", ["", "\n\n", "# only a comment\n", "  \n\t# x\n"])
    def test_empty(self, source):
        assert parse(source) == ScenarioAst(())

    def test_crlf_and_comments(self):
        source = "system S1  # first\r\n\r\nobserver A1\r\n"
        assert parse(source) == ScenarioAst((SystemDecl("S1"), ObserverDecl("A1")))

    def test_spans(self):
        ast = parse("\n  system S1\n")
        assert (ast.declarations[0].span.line, ast.declarations[0].span.column) == (2, 3)

    def test_measure_after_end(self):
        ast = parse(HEADER + "context C {\n\n  measure B1 as B1^W after end\n\n}\n")
        (block,) = ast.of_type(ContextBlock)
        assert block.measures == (Measure("B1", "B1^W", None),)

    def test_last_statement_without_newline(self):
        ast = parse(HEADER + "constraint i: A1*B1*A1 = -1")
        assert ast.of_type(ConstraintDecl)[0].parity == -1

    def test_parse_error_fields(self):
        with pytest.raises(ParseError) as exc:
            parse(HEADER + "interact A1 S1 on Y\n")
        err = exc.value
        assert (err.line, err.column) == (7, 16)
        assert err.expected == ["'in'"]


class TestCompile:
    def test_bundled_matches_programmatic(self, encoding):
        schedule, contexts, constraints = dsl.compile(parse(dsl.builtin_source()), encoding)
        assert schedule == full_protocol(encoding)
        assert contexts == builtin_contexts(encoding)
        assert constraints == ghz_constraints()

    def test_bundled_distributions_identical(self, encoding):
        _, contexts, _ = dsl.compile(parse(dsl.builtin_source()), encoding)
        for a, b in zip(contexts, builtin_contexts(encoding)):
            assert exact_distribution(a) == exact_distribution(b)

    def test_unmatched_undo(self):
        with pytest.raises(SemanticError, match="does not follow"):
            dsl.compile(parse(HEADER + "undo A1 S1\ninteract A1 S1 in Y\n"))

    def test_measure_system(self):
        source = HEADER.replace("system S2\n", "system S2\nobserver A2\n") + "context C {\n  measure S2 as x after 0\n}\n"
        with pytest.raises(SemanticError, match="system S2"):
            dsl.compile(parse(source))

    def test_empty_ast(self):
        with pytest.raises(SemanticError, match="prepare"):
            dsl.compile(parse(""))

    def test_partial_register(self):
        schedule, contexts, constraints = dsl.compile(
            parse(HEADER + "interact A1 S1 in Y\ncontext C {\n  measure A1 as a after 1\n}\n")
        )
        assert schedule.layout.num_qubits == 5
        dist = exact_distribution(contexts[0])
        assert dist.probability((1,)) == pytest.approx(0.5, abs=1e-12)
        assert constraints == []

    def test_load_reads_crlf_file(self, tmp_path):
        path = tmp_path / "crlf.rfs"
        path.write_bytes(dsl.builtin_source().replace("\n", "\r\n").encode())
        schedule, contexts, _ = dsl.load(path)
        assert schedule == full_protocol() and contexts == builtin_contexts()


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_invalid_corpus(name):
    expected = EXPECTED[name]
    source = (INVALID / name).read_text(encoding="utf-8")
    with pytest.raises(dsl.ScenarioError) as exc:
        dsl.compile(parse(source))
    err = exc.value
    assert err.kind == expected["kind"]
    assert (err.line, err.column) == (expected["line"], expected["column"])
    assert expected["match"] in str(err)


def test_corpus_is_complete():
    files = {p.name for p in INVALID.glob("*.rfs")}
    assert files == set(EXPECTED)
    assert len(files) >= 10


class TestRoundTrip:
    def test_bundled(self):
        ast = parse(dsl.builtin_source())
        assert parse(format_ast(ast)) == ast
        assert format_ast(parse(format_ast(ast))) == format_ast(ast)

    @given(st.data())
    def test_generated(self, data):
        systems = ["S1", "S2", "S3"]
        observers = data.draw(st.lists(st.sampled_from(["A1", "A2", "A3", "B1", "B2", "B3"]), unique=True, min_size=1))
        names = systems + observers
        decls = [SystemDecl(s) for s in systems] + [ObserverDecl(o) for o in observers]
        decls.append(Prepare(tuple(data.draw(st.permutations(systems)))))
        ident = st.sampled_from(names)
        label = st.builds(lambda a, b: a + (f"^{b}" if b else ""), ident, st.sampled_from(["", "W", "x1"]))
        for i in range(data.draw(st.integers(0, 6))):
            kind = data.draw(st.sampled_from(["interact", "undo", "context", "constraint"]))
            if kind == "interact":
                decls.append(Interact(data.draw(ident), data.draw(ident), data.draw(st.sampled_from("XY"))))
            elif kind == "undo":
                decls.append(Undo(data.draw(ident), data.draw(ident)))
            elif kind == "context":
                labels = data.draw(st.lists(label, unique=True, max_size=3))
                after = st.one_of(st.none(), st.integers(0, 20))
                decls.append(ContextBlock(f"C{i}", tuple(Measure(data.draw(ident), l, data.draw(after)) for l in labels)))
            else:
                decls.append(
                    ConstraintDecl(f"k{i}", (data.draw(ident), data.draw(ident), data.draw(ident)), data.draw(st.sampled_from([1, -1])))
                )
        ast = ScenarioAst(tuple(decls))
        assert parse(format_ast(ast)) == ast
