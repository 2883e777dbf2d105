"""Chain-of-thought act generation and two-step utterance realization.

Dialogue acts are drafted through four sequential completions (intent,
domain, slot, value), each conditioned on the outputs of the prior steps.
Utterances are then realized in two passes: a literal translation of the
act list followed by a conversational rewrite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .acts import DialogueAct, DialogueContext, INTENTS, SOCIAL_INTENTS, validate_acts
from .backend import CompletionRequest
from .errors import EmptyTranslation, StepParseFailure
from .prompts import (
    Feedback,
    PromptConfig,
    RequirementSet,
    STEP_ORDER,
    act_to_utterance_prompt,
    enhance_utterance_prompt,
    generator_step_prompt,
)
from .world import Ontology, UserGoal

GENERATION_TEMPERATURE = 0.7
NLG_TEMPERATURE = 0.7

_EMPTY_MARKERS = {"", "none", "-", "n/a", "null", "empty"}


@dataclass
class DraftActs:
    acts: list[DialogueAct]
    step_transcript: dict[str, str] = field(default_factory=dict)
    attempt_index: int = 0


@dataclass
class Utterance:
    plain: str
    enhanced: str

    def best(self) -> str:
        return self.enhanced or self.plain


def split_candidates(text: str) -> list[str]:
    """Split a step output into candidate tokens.

    Multiple candidates (comma-separated, possibly bracketed or quoted)
    yield multiple quadruples per turn, one per position.
    """
    cleaned = text.strip()
    if cleaned.startswith("[") and cleaned.endswith("]"):
        cleaned = cleaned[1:-1]
    parts = [p.strip().strip("'\"").strip() for p in cleaned.replace("\n", ",").split(",")]
    return [p for p in parts] if parts else [""]


def _valid_step(step: str, candidates: list[str], domains: list[str],
                ontology: Ontology) -> list[str] | None:
    """Normalize candidates for a step; None when the output is unusable."""
    if step == "intent":
        out = [c.lower() for c in candidates if c]
        if not out or any(c not in INTENTS for c in out):
            return None
        return out
    if step == "domain":
        out = [c.lower() for c in candidates if c]
        if not out or any(not ontology.has_domain(c) and c != "general" for c in out):
            return None
        return out
    if step == "slot":
        out = ["" if c.lower() in _EMPTY_MARKERS else c.lower() for c in candidates]
        if not out:
            out = [""]
        for i, slot in enumerate(out):
            domain = domains[min(i, len(domains) - 1)] if domains else "general"
            if slot and domain != "general" and slot not in ontology.slots(domain):
                return None
        return out
    # value step accepts anything
    out = ["" if c.lower() in _EMPTY_MARKERS else c for c in candidates]
    return out if out else [""]


def _assemble(columns: dict[str, list[str]]) -> list[DialogueAct]:
    n = max(len(v) for v in columns.values())
    acts = []
    for i in range(n):
        parts = {}
        for step in STEP_ORDER:
            col = columns[step]
            parts[step] = col[min(i, len(col) - 1)]
        intent = parts["intent"]
        slot, value = parts["slot"], parts["value"]
        # normalize per the act invariants instead of failing the draft
        if intent in SOCIAL_INTENTS:
            slot, value = "", ""
        elif intent == "request":
            value = ""
        acts.append(DialogueAct(intent=intent, domain=parts["domain"],
                                slot=slot, value=value).normalized())
    # drop exact duplicates produced by column broadcasting
    seen, unique = set(), []
    for a in acts:
        if a not in seen:
            seen.add(a)
            unique.append(a)
    return unique


def generate_acts_cot(backend, goal: UserGoal, context: DialogueContext,
                      requirements: RequirementSet, ontology: Ontology,
                      feedback: Feedback | None = None,
                      config: PromptConfig = PromptConfig(),
                      attempt_index: int = 0) -> DraftActs:
    """Draft dialogue acts via the four-step chain of thought.

    Exactly one completion per step on the happy path (4 total); each step
    gets one retry on unparseable output before StepParseFailure. Feedback,
    when present, is threaded into every step prompt.
    """
    columns: dict[str, list[str]] = {}
    transcript: dict[str, str] = {}
    for step in STEP_ORDER:
        prompt = generator_step_prompt(goal, context, requirements, step,
                                       partial=dict(transcript),
                                       feedback=feedback, config=config)
        request = CompletionRequest(user_text=prompt.user_text,
                                    system_text=prompt.system_text,
                                    temperature=GENERATION_TEMPERATURE,
                                    max_tokens=64)
        parsed = None
        raw = ""
        for _ in range(2):  # one in-step retry
            raw = backend.complete(request).text
            parsed = _valid_step(step, split_candidates(raw),
                                 columns.get("domain", []), ontology)
            if parsed is not None:
                break
        if parsed is None:
            raise StepParseFailure(step, raw)
        columns[step] = parsed
        transcript[step] = raw.strip()

    acts = _assemble(columns)
    report = validate_acts(acts, ontology)
    if not report.ok:
        raise StepParseFailure("value", "; ".join(v.message for v in report.violations))
    return DraftActs(acts=acts, step_transcript=transcript,
                     attempt_index=attempt_index)


def realize_utterance(backend, acts, context: DialogueContext) -> Utterance:
    """Two-step NLG: literal translation, then conversational rewrite."""
    prompt = act_to_utterance_prompt(acts)
    plain = backend.complete(CompletionRequest(
        user_text=prompt.user_text, temperature=NLG_TEMPERATURE,
        max_tokens=128)).text.strip()
    if not plain:
        raise EmptyTranslation("act translation came back blank")
    prompt = enhance_utterance_prompt(context.render("utterances"), plain)
    enhanced = backend.complete(CompletionRequest(
        user_text=prompt.user_text, temperature=NLG_TEMPERATURE,
        max_tokens=128)).text.strip()
    return Utterance(plain=plain, enhanced=enhanced or plain)
