"""Generator-verifier iteration and full-dialogue orchestration.

A user turn loops draft -> verdict until the verifier accepts or the
iteration cap is hit; rejection feedback from iteration i-1 is threaded
into every step prompt of iteration i. NLG runs only on the final acts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .acts import (
    DialogueContext,
    DialogueLog,
    DialogueTurn,
    derive_annotations,
)
from .errors import TurnAborted
from .generator import DraftActs, Utterance, generate_acts_cot, realize_utterance
from .prompts import (
    DEFAULT_GENERATOR_REQUIREMENTS,
    DEFAULT_VERIFIER_REQUIREMENTS,
    Feedback,
    PromptConfig,
    RequirementSet,
)
from .verifier import Verdict, verify
from .world import Ontology, UserGoal

USE_LAST_DRAFT = "use_last_draft"
ABORT_TURN = "abort_turn"

DEFAULT_TURN_CAP = 20


@dataclass(frozen=True)
class LoopConfig:
    max_iterations: int = 3
    verifier_enabled: bool = True
    on_exhaustion: str = USE_LAST_DRAFT

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.on_exhaustion not in (USE_LAST_DRAFT, ABORT_TURN):
            raise ValueError(f"unknown on_exhaustion {self.on_exhaustion!r}")


@dataclass
class TurnTrace:
    attempts: list[tuple[DraftActs, Verdict | None]] = field(default_factory=list)
    final_acts: list = field(default_factory=list)
    iterations: int = 0


@dataclass
class DuetSession:
    """State of one simulated-user session: goal, context, backends, config."""

    goal: UserGoal
    ontology: Ontology
    generator_backend: object
    verifier_backend: object
    loop_config: LoopConfig = LoopConfig()
    prompt_config: PromptConfig = PromptConfig()
    generator_requirements: RequirementSet = DEFAULT_GENERATOR_REQUIREMENTS
    verifier_requirements: RequirementSet = DEFAULT_VERIFIER_REQUIREMENTS
    context: DialogueContext = field(default_factory=DialogueContext)
    traces: list[TurnTrace] = field(default_factory=list)

    def __post_init__(self):
        self.context.render_mode = self.prompt_config.render_mode
        if not self.loop_config.verifier_enabled:
            # without a verifier, the single model sees both requirement sets
            self.generator_requirements = self.generator_requirements.merged(
                self.verifier_requirements)


def next_user_turn(session: DuetSession) -> tuple[TurnTrace, Utterance]:
    """Run the draft/verify loop for one user turn and append it to context."""
    cfg = session.loop_config
    trace = TurnTrace()
    feedback: Feedback | None = None
    final: DraftActs | None = None
    for i in range(cfg.max_iterations):
        draft = generate_acts_cot(
            session.generator_backend, session.goal, session.context,
            session.generator_requirements, session.ontology,
            feedback=feedback, config=session.prompt_config, attempt_index=i)
        if not cfg.verifier_enabled:
            trace.attempts.append((draft, None))
            final = draft
            break
        verdict = verify(session.verifier_backend, session.goal, session.context,
                         session.verifier_requirements, draft,
                         config=session.prompt_config)
        trace.attempts.append((draft, verdict))
        if verdict.accepted:
            final = draft
            break
        feedback = verdict.feedback
    trace.iterations = len(trace.attempts)

    if final is None:
        if cfg.on_exhaustion == ABORT_TURN:
            raise TurnAborted(f"all {cfg.max_iterations} drafts rejected")
        final = trace.attempts[-1][0]
    trace.final_acts = list(final.acts)

    utterance = realize_utterance(session.generator_backend, final.acts,
                                  session.context)
    session.context.append(DialogueTurn(
        speaker="user", acts=tuple(final.acts), utterance=utterance.best(),
        turn_index=len(session.context.turns)))
    session.traces.append(trace)
    return trace, utterance


class DuetUserSimulator:
    """User simulator backed by the generator-verifier loop."""

    def __init__(self, session: DuetSession):
        self.session = session

    def next_turn(self):
        trace, utterance = next_user_turn(self.session)
        return list(trace.final_acts), utterance.best()

    def observe(self, system_acts, system_utterance: str) -> None:
        self.session.context.append(DialogueTurn(
            speaker="system", acts=tuple(system_acts),
            utterance=system_utterance,
            turn_index=len(self.session.context.turns)))


def run_dialogue(goal: UserGoal, user, system,
                 max_user_turns: int = DEFAULT_TURN_CAP,
                 seed: int | None = None) -> DialogueLog:
    """Alternate user and system turns, starting with the user.

    Terminates on a user bye act, on the turn cap, or on an unrecoverable
    error (which becomes termination_reason "error" rather than raising).
    """
    turns: list[DialogueTurn] = []
    reason = "turn_cap"
    for _ in range(max_user_turns):
        try:
            user_acts, user_utterance = user.next_turn()
        except Exception:
            reason = "error"
            break
        turns.append(DialogueTurn(speaker="user", acts=tuple(user_acts),
                                  utterance=user_utterance,
                                  turn_index=len(turns)))
        if any(a.intent == "bye" for a in user_acts):
            reason = "user_bye"
            break
        try:
            system_acts, system_utterance = system.respond(user_acts)
        except Exception:
            reason = "error"
            break
        turns.append(DialogueTurn(speaker="system", acts=tuple(system_acts),
                                  utterance=system_utterance,
                                  turn_index=len(turns)))
        user.observe(system_acts, system_utterance)
    return DialogueLog(goal=goal, turns=turns,
                       annotations=derive_annotations(turns),
                       termination_reason=reason, seed=seed)
