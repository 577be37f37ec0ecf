from hypothesis import given, settings

from parsingdst.filtering import filter_system_json
from parsingdst.schema import SystemJson
from parsingdst.update import UpdateOutcome, apply_system_json

from strategies import states, system_jsons


def test_non_entity_unchanged_removed(ontology):
    sys = SystemJson(info={"hotel": {"price_range": ["cheap"]}})
    assert filter_system_json(sys, UpdateOutcome({}), ontology) == SystemJson()


def test_entity_retained(ontology):
    sys = SystemJson(info={"restaurant": {"full_name": ["nandos"]}})
    assert filter_system_json(sys, UpdateOutcome({}), ontology) == sys


def test_empty_identity(ontology):
    assert filter_system_json(SystemJson(), UpdateOutcome({}), ontology) == SystemJson()


def test_updated_non_entity_retained_and_actions_emptied(ontology):
    state = {"hotel": {"pricerange": "cheap"}}
    sys = SystemJson(info={"hotel": {"price_range": ["moderate"], "direction": ["north"]}},
                     ask_for={"hotel": ["star_rating"]}, not_available={"hotel": {"full_name": ["x"]}})
    out = filter_system_json(sys, apply_system_json(state, sys, ontology), ontology)
    assert out == SystemJson(info={"hotel": {"price_range": ["moderate"]}})


@settings(max_examples=300)
@given(state=states(), sys=system_jsons)
def test_filter_properties(ontology, state, sys):
    outcome = apply_system_json(state, sys, ontology)
    once = filter_system_json(sys, outcome, ontology)
    assert filter_system_json(once, outcome, ontology) == once
    for d, slots in once.info.items():
        for s, values in slots.items():
            assert values == sys.info[d][s]
            sd = ontology.slot(d, s)
            assert sd.is_entity or (d, sd.canonical) in outcome.changed
    assert not once.ask_for and not once.not_available
