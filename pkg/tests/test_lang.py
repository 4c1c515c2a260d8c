from __future__ import annotations

import pytest

from ebf.lang import (GlobalInt, KindError, ParseError, ResolveError,
                      SourceProgram, parse, parse_text, pretty_print,
                      structure)

from conftest import task_ast


def test_minimal_program():
    ast = parse_text("int x; void main() { x = 1; }")
    assert len(ast.globals_) == 1
    assert len(ast.functions) == 1
    assert isinstance(ast.globals_[0], GlobalInt)
    assert ast.main.name == "main"


def test_undeclared_identifier_location():
    with pytest.raises(ResolveError) as exc:
        parse_text("void main() { x = 1; }")
    assert exc.value.name == "x"
    assert exc.value.loc.line == 1


def test_every_error_loc_within_bounds():
    broken = [
        "void main() { x = ; }",
        "int 3x;",
        "void main() { if (1) { } else }",
        "void main() { y = thread_create(nope); }",
        "mutex m; void main() { m = 3; }",
        "int a[4]; void main() { a = 1; }",
    ]
    for text in broken:
        with pytest.raises((ParseError, ResolveError, KindError)) as exc:
            parse_text(text)
        loc = exc.value.loc
        lines = text.split("\n")
        assert 1 <= loc.line <= len(lines)
        assert loc.column >= 1


def test_kind_errors():
    with pytest.raises(KindError):
        parse_text("mutex m; void main() { lock(m); m = 1; }")
    with pytest.raises(KindError):
        parse_text("int x; void main() { lock(x); }")
    with pytest.raises(KindError):
        parse_text("mutex m; void main() { int y; y = m + 1; }")


def test_exactly_one_main():
    with pytest.raises(ResolveError):
        parse_text("int x;")
    with pytest.raises(ResolveError):
        parse_text("void a() { } void b() { }")


def test_duplicate_declarations_rejected():
    with pytest.raises(ResolveError):
        parse_text("int x; int x; void main() { }")
    with pytest.raises(ResolveError):
        parse_text("void main() { int y; int y; }")


def test_recursive_thread_creation_rejected():
    src = """
    int t;
    void spin() { t = thread_create(spin); }
    void main() { t = thread_create(spin); }
    """
    with pytest.raises(ResolveError):
        parse_text(src)


def test_thread_create_param_arity():
    with pytest.raises(KindError):
        parse_text("int t; void w() { } void main() { t = thread_create(w, 3); }")
    ast = parse_text("int t; void w(int n) { } void main() { t = thread_create(w, 3); }")
    assert ast.function("w").param == "n"


def test_parse_is_deterministic():
    text = "int x; void main() { x = (1 + 2) * 3; assert(x == 9); }"
    assert structure(parse_text(text)) == structure(parse_text(text))


def test_pretty_print_round_trip_nested():
    src = """
    int x;
    int a[3];
    mutex m;
    void main() {
      int i;
      i = 0;
      while (i < 3) {
        if (i % 2 == 0) {
          a[i] = i * 2 + 1;
        } else {
          a[i] = -i;
        }
        i = i + 1;
      }
      assert(a[0] == 1 && (a[1] == -1 || a[2] != 0));
    }
    """
    ast = parse_text(src)
    printed = pretty_print(ast)
    assert structure(parse(printed)) == structure(ast)


def test_pretty_print_round_trip_corpus(corpus_tasks):
    for task in corpus_tasks.values():
        ast = task_ast(task)
        printed = pretty_print(ast, path=str(task.path))
        reparsed = parse(printed)
        assert structure(reparsed) == structure(ast), task.name


def test_racy_counter_shape(corpus_tasks):
    ast = task_ast(corpus_tasks["racy_counter"])
    names = [f.name for f in ast.functions]
    assert names == ["w1", "w2", "main"]


def test_precedence_matches_c():
    ast = parse_text("int x; void main() { x = 1 + 2 * 3 - 4 / 2; }")
    # structure should read as ((1 + (2*3)) - (4/2))
    assign = ast.main.body[0]
    assert structure(assign.value)[1] == "-"


def test_int_literal_range():
    parse_text("int x; void main() { x = 2147483647; }")
    with pytest.raises(ParseError):
        parse_text("int x; void main() { x = 2147483648; }")


def test_comments_and_extension():
    ast = parse_text("int x; // counter\nvoid main() { x = 1; // set\n}")
    assert len(ast.main.body) == 1
    src = SourceProgram("t.mcl", "void main() { }")
    assert parse(src).main.body == ()
