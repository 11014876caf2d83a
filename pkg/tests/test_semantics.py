import pytest

from pnd.categories import Signature
from pnd.errors import OracleCapExceeded
from pnd.kernel import check_text
from pnd.parser import parse_category as C, parse_formula
from pnd.semantics import (
    Evaluator, domain_of, domain_size, eval_formula, find_countermodel, validate_development,
)
from pnd.syntax import BASE


def F(sig, text):
    return parse_formula(text, constants=sig)


@pytest.mark.parametrize("cat, size", [
    ("s", 2), ("s/(s)", 4), ("s/(s,s)", 16), ("(s/(s))/(s)", 16), ("s/(s/(s))", 16),
    ("(s/(s,s))/(s/(s,s))", 2 ** 64),
])
def test_domain_size(cat, size):
    assert domain_size(C(cat)) == size


def test_domain_size_is_none_when_astronomical():
    assert domain_size(C("s/(s/(s/(s/(s,s,s))))")) is None


def test_domain_elements_are_functions():
    dom = domain_of(C("s/(s)"))
    assert dom.elements == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert dom.index[(0, 1)] == 1


def test_cap():
    with pytest.raises(OracleCapExceeded):
        domain_of(C("s/(s,s)"), cap=8)


def test_bicond_table():
    sig = Signature()
    assert [eval_formula(F(sig, "(p <=> q)"), sig, {"p": (BASE, a), "q": (BASE, b)})
            for a in (0, 1) for b in (0, 1)] == [1, 0, 0, 1]


@pytest.mark.parametrize("text, value", [
    ("[p](p)", 0),
    ("[p](p <=> p)", 1),
    ("[p q](p <=> q)", 0),
    ("[f](f(q) <=> f(q))", 1),
    ("[f]([p](f(p)) <=> f(q))", 0),
])
def test_quantifiers(text, value):
    sig = Signature()
    assert eval_formula(F(sig, text), sig, {"q": (BASE, 1)}) == value


def test_defined_constants(core_dev):
    sig = core_dev.signature
    for text, value in [("Vr", 1), ("Fl", 0), ("not(Fl)", 1), ("not(Vr)", 0),
                        ("and(Vr, Vr)", 1), ("and(Vr, Fl)", 0), ("and(Fl, Vr)", 0),
                        ("and(Fl, Fl)", 0)]:
        assert eval_formula(F(sig, text), sig) == value, text


def test_multi_link_constant_table():
    dev = check_text('dev "t"\nthm 1: [p q](K(p)(q) <=> (q <=> p)) by def\n')
    ev = Evaluator(dev.signature)
    cat, table = ev.constant("K")
    assert str(cat) == "(s/(s))/(s)"
    assert table == ((1, 0), (0, 1))


def test_find_countermodel():
    sig = Signature()
    assert find_countermodel(F(sig, "[p q]((p <=> q) <=> (q <=> p))"), sig) is None
    assert find_countermodel(F(sig, "[p q](p <=> q)"), sig) == {"p": 0, "q": 1}
    assert find_countermodel(F(sig, "[p](p) "), sig) == {"p": 0}


def test_validate_development(core_dev):
    report = validate_development(core_dev)
    assert report.ok and report.checked == 24 and not report.skipped


SKIP_SCRIPT = """\
dev "t"
q: quant f
  1.1: hyp [p q](f(p, q) <=> (p <=> q))
    1.2: [p q](f(p, q) <=> (p <=> q)) by 1.1
  1.3: ([p q](f(p, q) <=> (p <=> q)) <=> [p q](f(p, q) <=> (p <=> q))) by eqi 1.1 1.1
thm 2: [f]([p q](f(p, q) <=> (p <=> q)) <=> [p q](f(p, q) <=> (p <=> q))) by gen q
"""


def test_validate_skips_over_cap():
    dev = check_text(SKIP_SCRIPT)
    assert dev.ok, [(r.label, r.message) for r in dev.failures]
    report = validate_development(dev, cap=8)
    assert report.checked == 0 and [label for label, _ in report.skipped] == ["2"]
    assert validate_development(dev).ok


def test_printed_axiom_four_needs_its_parenthesis_moved():
    sig = Signature()
    valid = "[f]((f([p](p)) <=> f(([p](p) <=> [p](p)))) <=> [q](f([p](p)) <=> f(q)))"
    assert find_countermodel(F(sig, valid), sig) is None
    # both groupings of the printed three-way biconditional are the same function
    for literal in (
        "[f]((f([p](p)) <=> (f([p](p)) <=> [p](p))) <=> [q](f([p](p)) <=> f(q)))",
        "[f](f([p](p)) <=> ((f([p](p)) <=> [p](p)) <=> [q](f([p](p)) <=> f(q))))",
    ):
        assert find_countermodel(F(sig, literal), sig) is not None
