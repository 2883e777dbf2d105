import pytest

from duetsim.acts import DialogueAct
from duetsim.system import SystemAgent, SystemState, system_turn

from conftest import act


def turn(state, user_acts, ontology, entities):
    acts, utterance, state = system_turn(state, user_acts, ontology, entities)
    return acts, utterance, state


class TestPolicy:
    def test_informs_come_from_database(self, ontology, entities):
        state = SystemState()
        acts, _, state = turn(state,
                              [act("inform", "restaurant", "name", "ugly duckling"),
                               act("request", "restaurant", "phone")],
                              ontology, entities)
        assert DialogueAct("inform", "restaurant", "phone", "01223176749") in acts

    def test_nooffer_on_zero_matches(self, ontology, entities):
        state = SystemState()
        acts, _, _ = turn(state,
                          [act("inform", "restaurant", "food", "martian")],
                          ontology, entities)
        assert acts == [DialogueAct("nooffer", "restaurant")]

    def test_request_when_underdetermined(self, ontology, entities):
        acts, _, _ = turn(SystemState(),
                          [act("inform", "restaurant", "pricerange", "moderate")],
                          ontology, entities)
        assert len(acts) == 1
        assert acts[0].intent == "request"
        assert acts[0].domain == "restaurant"

    def test_recommend_when_narrowed(self, ontology, entities):
        acts, _, _ = turn(SystemState(),
                          [act("inform", "restaurant", "name", "ugly duckling")],
                          ontology, entities)
        assert acts == [DialogueAct("recommend", "restaurant", "name",
                                    "ugly duckling")]

    def test_booking_returns_ref_and_name(self, ontology, entities):
        state = SystemState()
        _, _, state = turn(state,
                           [act("inform", "restaurant", "name", "ugly duckling")],
                           ontology, entities)
        acts, _, state = turn(state,
                              [act("book", "restaurant", "book day", "tuesday"),
                               act("book", "restaurant", "book people", "2"),
                               act("book", "restaurant", "book time", "18:00")],
                              ontology, entities)
        slots = {a.slot: a for a in acts}
        assert all(a.intent == "offer_booked" for a in acts)
        assert slots["name"].value == "ugly duckling"
        ref = slots["ref"].value
        assert len(ref) == 8 and ref.isalnum() and ref == ref.upper()

    def test_invalid_booking_slot_gives_nobook(self, ontology, entities):
        state = SystemState()
        _, _, state = turn(state,
                           [act("inform", "restaurant", "name", "ugly duckling")],
                           ontology, entities)
        acts, _, _ = turn(state,
                          [act("book", "restaurant", "book stay", "3")],
                          ontology, entities)
        assert acts == [DialogueAct("nobook", "restaurant")]

    def test_bye_answered_with_bye(self, ontology, entities):
        acts, _, _ = turn(SystemState(), [act("bye", "general")],
                          ontology, entities)
        assert acts == [DialogueAct("bye", "general")]

    def test_unknown_domain_noffer(self, ontology, entities):
        acts, _, _ = turn(SystemState(),
                          [act("inform", "attraction", "area", "centre")],
                          ontology, entities)
        assert acts == [DialogueAct("nooffer", "attraction")]

    def test_dontcare_constraint_ignored_in_query(self, ontology, entities):
        state = SystemState()
        _, _, state = turn(state, [act("inform", "restaurant", "food", "martian")],
                           ontology, entities)
        acts, _, _ = turn(state,
                          [act("inform", "restaurant", "food", "dontcare"),
                           act("inform", "restaurant", "name", "ugly duckling")],
                          ontology, entities)
        assert acts[0].intent == "recommend"

    def test_empty_user_turn_reqmore(self, ontology, entities):
        acts, _, _ = turn(SystemState(), [], ontology, entities)
        assert acts == [DialogueAct("reqmore", "general")]


class TestDeterminism:
    def test_same_seed_same_refs(self, ontology, entities):
        script = [[act("inform", "restaurant", "name", "ugly duckling")],
                  [act("book", "restaurant", "book day", "tuesday")]]
        outputs = []
        for _ in range(2):
            agent = SystemAgent(ontology, entities, seed=7)
            outputs.append([agent.respond(user_acts) for user_acts in script])
        assert outputs[0] == outputs[1]

    def test_utterance_matches_acts(self, ontology, entities):
        agent = SystemAgent(ontology, entities)
        acts, utterance = agent.respond(
            [act("inform", "restaurant", "name", "ugly duckling"),
             act("request", "restaurant", "phone")])
        assert "01223176749" in utterance


class TestHonesty:
    def test_all_informed_values_in_database(self, ontology, entities):
        from duetsim.agenda import AgendaUserSimulator
        from duetsim.loop import run_dialogue
        from duetsim.world import generate_goal

        lookup = {}
        for e in entities:
            for slot, value in e.attributes.items():
                lookup.setdefault((e.domain, slot), set()).add(value)
        for seed in range(20):
            goal = generate_goal(seed, ontology, entities)
            log = run_dialogue(goal, AgendaUserSimulator(goal),
                               SystemAgent(ontology, entities, seed=seed))
            for t in log.turns:
                if t.speaker != "system":
                    continue
                for a in t.acts:
                    if a.intent == "inform" and a.value:
                        assert a.value in lookup[(a.domain, a.slot)]
