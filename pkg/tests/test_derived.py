import pytest

from pnd.derived import check_instantiable, expand_derived, extract_rule, match_schema
from pnd.errors import CaptureError, ExtractError, ReplayError, RuleMismatch
from pnd.kernel import check_text
from pnd.parser import parse_formula
from pnd.syntax import BASE, Var, alpha_eq


def F(dev, text):
    return parse_formula(text, constants=dev.signature)


def test_extracted_schemas(core_dev):
    shown = {name: str(s) for name, s in core_dev.rules.items()}
    assert shown == {
        "com": "com: (p <=> q) |- (q <=> p)",
        "syll": "syll: (p <=> q), (q <=> r) |- (p <=> r)",
        "assd": "assd: ((p <=> q) <=> r) |- (p <=> (q <=> r))",
        "conj": "conj: p, q |- (p <=> q)",
        "bote": "bote: Fl |- q",
        "boti": "boti: p, not(p) |- Fl",
        "nni": "nni: p |- not(not(p))",
        "nne": "nne: not(not(p)) |- p",
    }


def test_schema_parameters_and_provenance(core_dev):
    syll = core_dev.rules["syll"]
    assert syll.params == (("p", BASE), ("q", BASE), ("r", BASE))
    assert syll.provenance.premise_labels == ("2.1", "2.2")
    assert syll.provenance.conclusion_label == "2.13"
    bote = core_dev.rules["bote"]
    assert bote.provenance.theorem_deps == ("6",)


def test_match_schema_any_premise_order(core_dev):
    syll = core_dev.rules["syll"]
    a, b = F(core_dev, "(Vr <=> Fl)"), F(core_dev, "(Fl <=> [p](p))")
    for premises in ([a, b], [b, a]):
        sigma, concl = match_schema(syll, premises)
        assert alpha_eq(concl, F(core_dev, "(Vr <=> [p](p))"))


def test_match_schema_needs_statement_for_free_conclusion(core_dev):
    bote = core_dev.rules["bote"]
    with pytest.raises(RuleMismatch):
        match_schema(bote, [F(core_dev, "Fl")])
    sigma, concl = match_schema(bote, [F(core_dev, "Fl")], F(core_dev, "(Vr <=> Fl)"))
    assert alpha_eq(concl, F(core_dev, "(Vr <=> Fl)"))


def test_match_schema_category_check(core_dev):
    bote = core_dev.rules["bote"]
    with pytest.raises(RuleMismatch):
        match_schema(bote, [F(core_dev, "Fl")], F(core_dev, "not"),
                     category_of=lambda f: core_dev.signature.category("not"))


def test_match_schema_wrong_arity(core_dev):
    with pytest.raises(RuleMismatch):
        match_schema(core_dev.rules["com"], [])


def test_expand_derived_replays_instance(core_dev):
    sigma = {"p": F(core_dev, "Vr"), "q": F(core_dev, "[p](p)")}
    lines = expand_derived(core_dev, "com", sigma)
    assert alpha_eq(lines[-1][1], F(core_dev, "([p](p) <=> Vr)"))


def test_expand_derived_nested_use(core_dev):
    # assd is extracted from a sub-deduction that itself uses com and syll.
    sigma = {"p": Var("x"), "q": Var("y"), "r": F(core_dev, "Fl")}
    lines = expand_derived(core_dev, "assd", sigma, {"x": BASE, "y": BASE})
    assert alpha_eq(lines[-1][1], F(core_dev, "(x <=> (y <=> Fl))"))


def test_expand_derived_detects_wrong_statement(core_dev):
    sigma = {"p": F(core_dev, "Vr"), "q": F(core_dev, "Fl")}
    with pytest.raises(ReplayError):
        expand_derived(core_dev, "com", sigma, stated=F(core_dev, "(Vr <=> Fl)"))


@pytest.mark.parametrize("name, sigma, premises", [
    ("boti", {"p": "Vr"}, ["Vr", "not(Vr)"]),
    ("nni", {"p": "Fl"}, ["Fl"]),
    ("nne", {"p": "[p](p)"}, ["not(not([p](p)))"]),
])
def test_uncited_rules_replay(core_dev, name, sigma, premises):
    schema = core_dev.rules[name]
    sigma = {k: F(core_dev, v) for k, v in sigma.items()}
    _, concl = match_schema(schema, [F(core_dev, p) for p in premises])
    lines = expand_derived(core_dev, name, sigma)
    assert alpha_eq(lines[-1][1], concl)


def test_check_instantiable_rejects_capture():
    text = '''dev "t"
q0: quant p
  0.1: hyp p
    0.2: p by 0.1
  0.3: (p <=> p) by eqi 0.1 0.1
thm 1: [p](p <=> p) by gen q0
q1: quant p
  1.1: hyp p
    q2: quant q
      2.1: (q <=> q) by 1; sub p := q
    1.2: p by 1.1
derive keep from 1.1
'''
    dev = check_text(text)
    assert dev.ok, [(r.label, r.message) for r in dev.failures]
    schema = dev.rules["keep"]
    check_instantiable(schema, {"p": parse_formula("(r <=> r)")})
    with pytest.raises(CaptureError):
        check_instantiable(schema, {"p": Var("q")})


def test_extraction_refuses_escaping_citation():
    text = '''dev "t"
q1: quant p q
  1.1: hyp p
    1.2: hyp q
      1.3: p by 1.1
    derive bad from 1.2
'''
    dev = check_text(text)
    r = dev.failures[0]
    assert (r.label, r.error) == ("bad", "ExtractError")


def test_extract_rule_unknown_label(core_dev):
    with pytest.raises(ExtractError):
        extract_rule(core_dev, "nope", "x")


def test_derived_rule_use_is_recorded(core_dev):
    rec = core_dev.lines["0.10"]
    (app,) = rec.applications
    assert app.rule == "com" and alpha_eq(app.conclusion, rec.formula)
