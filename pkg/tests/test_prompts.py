import pytest

from duetsim.acts import DialogueAct, DialogueContext
from duetsim.errors import EmptyActList, EmptyUtterance, MissingPriorStep
from duetsim.prompts import (
    DEFAULT_GENERATOR_REQUIREMENTS,
    DEFAULT_VERIFIER_REQUIREMENTS,
    Feedback,
    NO_PRIOR_TURNS,
    PromptConfig,
    act_to_utterance_prompt,
    enhance_utterance_prompt,
    generator_step_prompt,
    lint_all_templates,
    verifier_prompt,
)

from conftest import act, make_turns, simple_goal

GOAL = simple_goal(info={"name": "ugly duckling"}, reqt=("phone", "food"))

CTX = DialogueContext(turns=make_turns(
    ("user", [act("inform", "restaurant", "name", "ugly duckling")],
     "I'm after a place called ugly duckling."),
    ("system", [act("inform", "restaurant", "food", "chinese")],
     "It serves chinese food."),
))


class TestGeneratorStep:
    def test_intent_step_sections(self):
        p = generator_step_prompt(GOAL, DialogueContext(),
                                  DEFAULT_GENERATOR_REQUIREMENTS, "intent", {})
        assert "ugly duckling" in p.user_text
        for r in DEFAULT_GENERATOR_REQUIREMENTS.items:
            assert r.text in p.user_text
        assert "FEEDBACK" not in p.user_text

    def test_missing_prior_step(self):
        with pytest.raises(MissingPriorStep):
            generator_step_prompt(GOAL, CTX, DEFAULT_GENERATOR_REQUIREMENTS,
                                  "slot", {"intent": "inform"})

    def test_feedback_is_last(self):
        fb = Feedback("V3", "contradicts the stated booking day")
        p = generator_step_prompt(GOAL, CTX, DEFAULT_GENERATOR_REQUIREMENTS,
                                  "value",
                                  {"intent": "inform", "domain": "restaurant",
                                   "slot": "food"},
                                  feedback=fb)
        assert p.user_text.strip().endswith(fb.text)

    def test_pure_function(self):
        args = (GOAL, CTX, DEFAULT_GENERATOR_REQUIREMENTS, "intent", {})
        assert generator_step_prompt(*args) == generator_step_prompt(*args)

    def test_partial_rendered_in_order(self):
        p = generator_step_prompt(GOAL, CTX, DEFAULT_GENERATOR_REQUIREMENTS,
                                  "slot",
                                  {"intent": "request", "domain": "restaurant"})
        body = p.user_text
        assert body.index("intent: request") < body.index("domain: restaurant")


class TestAblation:
    def test_omit_goal_removes_only_goal(self):
        full = generator_step_prompt(GOAL, CTX, DEFAULT_GENERATOR_REQUIREMENTS,
                                     "intent", {})
        without = generator_step_prompt(GOAL, CTX, DEFAULT_GENERATOR_REQUIREMENTS,
                                        "intent", {},
                                        config=PromptConfig(omit_goal=True))
        assert "GOAL:" in full.user_text and "GOAL:" not in without.user_text
        assert "CONVERSATION SO FAR:" in without.user_text
        assert "REQUIREMENTS:" in without.user_text

    def test_omit_history_removes_only_context(self):
        without = generator_step_prompt(GOAL, CTX, DEFAULT_GENERATOR_REQUIREMENTS,
                                        "intent", {},
                                        config=PromptConfig(omit_history=True))
        assert "CONVERSATION SO FAR:" not in without.user_text
        assert "GOAL:" in without.user_text

    def test_render_mode_variants(self):
        as_text = generator_step_prompt(GOAL, CTX, DEFAULT_GENERATOR_REQUIREMENTS,
                                        "intent", {},
                                        config=PromptConfig(render_mode="utterances"))
        as_acts = generator_step_prompt(GOAL, CTX, DEFAULT_GENERATOR_REQUIREMENTS,
                                        "intent", {},
                                        config=PromptConfig(render_mode="acts"))
        assert "I'm after a place called ugly duckling." in as_text.user_text
        assert "[['inform', 'restaurant', 'name', 'ugly duckling']]" in as_acts.user_text


class TestVerifierPrompt:
    DRAFT = [act("request", "restaurant", "phone")]

    def test_lists_every_requirement_id_once(self):
        p = verifier_prompt(GOAL, CTX, DEFAULT_VERIFIER_REQUIREMENTS, self.DRAFT)
        for r in DEFAULT_VERIFIER_REQUIREMENTS.items:
            assert p.user_text.count(f"{r.id}. ") == 1

    def test_draft_in_canonical_form(self):
        p = verifier_prompt(GOAL, CTX, DEFAULT_VERIFIER_REQUIREMENTS, self.DRAFT)
        assert "[['request', 'restaurant', 'phone', '']]" in p.user_text

    def test_empty_context_placeholder(self):
        p = verifier_prompt(GOAL, DialogueContext(),
                            DEFAULT_VERIFIER_REQUIREMENTS, self.DRAFT)
        assert NO_PRIOR_TURNS in p.user_text


class TestNLGPrompts:
    def test_worked_example_embedded(self):
        p = act_to_utterance_prompt([act("request", "restaurant", "phone")])
        assert "[['inform', 'restaurant', 'book day', 'Tuesday']]" in p.user_text
        assert "The restaurant is booked on Tuesday." in p.user_text
        assert p.user_text.strip().endswith(
            "Please translate the list into natural language.")

    def test_empty_acts(self):
        with pytest.raises(EmptyActList):
            act_to_utterance_prompt([])

    def test_enhance_sections_in_order(self):
        p = enhance_utterance_prompt("USER: hi", "I want food.")
        body = p.user_text
        assert body.index("[CONVERSATION]") < body.index("[SENTENCE]")
        assert "play the role of CUSTOMER" in body

    def test_enhance_empty_conversation(self):
        p = enhance_utterance_prompt("", "I want food.")
        assert "[SENTENCE]" in p.user_text

    def test_enhance_empty_utterance(self):
        with pytest.raises(EmptyUtterance):
            enhance_utterance_prompt("USER: hi", "")


def test_template_lint_passes():
    lint_all_templates()
