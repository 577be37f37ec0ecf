import pytest

from parsingdst.errors import FixtureMiss, MalformedPayload, PipelineError
from parsingdst.ontology import DELETE, materialize
from parsingdst.pipeline import PipelineDeps, run_dialogue, run_turn
from parsingdst.schema import EMPTY_SYSTEM
from parsingdst.update import replay_updates

EMPTY_USER = '{"user": {"reject": {}, "request": {}}}'


class Scripted:
    """Answers system-side and user-side prompts from two queues."""

    def __init__(self, system=(), user=()):
        self.queues = {"system": list(system), "user": list(user)}
        self.prompts = []

    def translate(self, prompt):
        self.prompts.append(prompt)
        side = "system" if prompt.startswith("translate system") else "user"
        return self.queues[side].pop(0)


def _deps(ontology, examples, templates, backend, domains=("restaurant",), **kw):
    return PipelineDeps(ontology=ontology, examples=examples, backend=backend, domains=domains,
                        templates=templates, **kw)


def test_first_turn_starts_at_user_step(ontology, examples, templates):
    backend = Scripted(user=['{"user": {"reject": {}, "request": {"restaurant": {"direction": ["centre"], '
                             '"price_range": ["cheap"]}}}}\n[END]'])
    rec = run_turn({}, "", "i want a place to eat . in the city centre . with cheap price",
                   _deps(ontology, examples, templates, backend))
    assert rec.final_state == {"restaurant": {"area": "centre", "pricerange": "cheap"}}
    assert rec.system_json == EMPTY_SYSTEM and rec.temp_state == {}
    assert len(backend.prompts) == 1 and backend.prompts[0].startswith("translate user")


def test_rejected_hotel_golden_label(ontology, examples, templates, rejected_hotel_turns, rejected_hotel_backend):
    deps = _deps(ontology, examples, templates, rejected_hotel_backend, domains=("hotel", "attraction"))
    run = run_dialogue(rejected_hotel_turns, deps)
    assert run.error is None
    final = run.turns[-1].final_state
    assert final["hotel"]["name"] == DELETE
    assert "pricerange" not in final["hotel"]
    assert final["attraction"] == {"name": "nusha"}
    assert materialize(final) == {"hotel": {"area": "north"}, "attraction": {"name": "nusha"}}
    # the temporary state holds the offered hotel; the filter drops the price range
    turn2 = run.turns[1]
    assert turn2.temp_state == {"hotel": {"area": "north", "name": "acorn guest house"}}


@pytest.mark.parametrize("flags,leaked", [
    ({"use_filter": False}, {"pricerange": "moderate", "name": DELETE}),
    ({"use_framework": False}, {"pricerange": "moderate", "name": "acorn guest house"}),
])
def test_rejected_hotel_ablations_leak(ontology, examples, templates, rejected_hotel_turns, rejected_hotel_backend, flags, leaked):
    deps = _deps(ontology, examples, templates, rejected_hotel_backend, domains=("hotel", "attraction"), **flags)
    run = run_dialogue(rejected_hotel_turns, deps)
    assert run.error is None
    hotel = run.turns[-1].final_state["hotel"]
    for slot, value in leaked.items():
        assert hotel[slot] == value


def test_malformed_system_payload_tagged(ontology, examples, templates):
    backend = Scripted(system=["sorry, I cannot help"], user=[EMPTY_USER])
    prev = {"restaurant": {"area": "centre"}}
    with pytest.raises(PipelineError) as exc:
        run_turn(prev, "hello there", "hi", _deps(ontology, examples, templates, backend), turn_index=3)
    assert (exc.value.turn, exc.value.step) == (3, 1)
    assert isinstance(exc.value.cause, MalformedPayload)
    assert prev == {"restaurant": {"area": "centre"}}


def test_user_side_failure_is_step_4(ontology, examples, templates):
    backend = Scripted(user=["{}"])
    with pytest.raises(PipelineError) as exc:
        run_turn({}, "", "hi", _deps(ontology, examples, templates, backend))
    assert exc.value.step == 4


def test_two_turn_booking_accumulates(ontology, examples, templates):
    backend = Scripted(
        system=['{"system": {"not_available": {}, "info": {"restaurant": {"full_name": ["nandos"], '
                '"clock_book": ["10:00"], "week_day": ["sunday"]}}, "ask_for": {}}}'],
        user=['{"user": {"reject": {}, "request": {"restaurant": {"cuisine": ["portuguese"], "num_people": ["4"]}}}}',
              '{"user": {"reject": {}, "request": {"restaurant": {"direction": ["centre"]}}}}'],
    )
    run = run_dialogue([("", "i want portuguese food for 4"),
                        ("the booking at nandos for 10:00 on sunday was successful", "is it in the centre ?")],
                       _deps(ontology, examples, templates, backend))
    # by hand: name is an entity (written), time and day are neither entities nor in context (ignored)
    assert run.turns[-1].final_state == {
        "restaurant": {"food": "portuguese", "book people": "4", "name": "nandos", "area": "centre"}}
    # the filter kept only the entity slot for the user-side context
    assert '{"system": {"not_available": {}, "info": {"restaurant": {"full_name": ["nandos"]}}, "ask_for": {}}}' \
        in backend.prompts[-1]


def test_preconditions(ontology, examples, templates):
    deps = _deps(ontology, examples, templates, Scripted())
    with pytest.raises(ValueError):
        run_dialogue([], deps)
    with pytest.raises(ValueError):
        run_dialogue([("hello", "hi")], deps)
    with pytest.raises(ValueError):
        run_turn({}, "", "", deps)


def test_run_stops_at_first_error(ontology, examples, templates, rejected_hotel_turns, tmp_path):
    from parsingdst.backend import ReplayBackend

    path = tmp_path / "empty.ndjson"
    path.write_text("")
    deps = _deps(ontology, examples, templates, ReplayBackend(path), domains=("hotel", "attraction"))
    run = run_dialogue(rejected_hotel_turns, deps)
    assert run.turns == [] and isinstance(run.error.cause, FixtureMiss)


def test_mid_dialogue_empty_system_utterance(ontology, examples, templates):
    backend = Scripted(user=[EMPTY_USER, '{"user": {"reject": {}, "request": {"restaurant": {"cuisine": ["thai"]}}}}'])
    run = run_dialogue([("", "hi"), ("", "thai food")], _deps(ontology, examples, templates, backend))
    assert run.turns[1].system_json == EMPTY_SYSTEM
    assert run.turns[1].final_state == {"restaurant": {"food": "thai"}}


def test_context_length_flag(ontology, examples, templates):
    backend = Scripted(user=[EMPTY_USER])
    rec = run_turn({"restaurant": {"area": "centre"}}, "", "hi",
                   _deps(ontology, examples, templates, backend, max_context_chars=10))
    assert any("context is" in w for w in rec.warnings)


def test_run_invariants(ontology, examples, templates, rejected_hotel_turns, rejected_hotel_backend):
    deps = _deps(ontology, examples, templates, rejected_hotel_backend, domains=("hotel", "attraction"))
    first = run_dialogue(rejected_hotel_turns, deps)
    second = run_dialogue(rejected_hotel_turns, deps)
    assert [t.to_dict() for t in first.turns] == [t.to_dict() for t in second.turns]
    prev = {}
    for i, rec in enumerate(first.turns, 1):
        assert rec.turn_index == i
        assert rec.input_state == prev
        assert replay_updates(rec.input_state, rec.system_json, rec.user_json, ontology) == \
            (rec.temp_state, rec.final_state)
        prev = rec.final_state
