"""Response verification: audit draft acts against requirements.

The verifier issues a single completion and parses the reply against the
ACCEPT / "REJECT <id>: <reason>" grammar. Parsing is deliberately lenient:
models reliably embed the keyword but rarely emit only it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .acts import DialogueContext
from .backend import CompletionRequest
from .errors import UnparseableVerdict
from .prompts import Feedback, PromptConfig, RequirementSet, verifier_prompt
from .world import UserGoal

VERIFICATION_TEMPERATURE = 0.0

UNSPECIFIED_ID = "unspecified"

_REJECT_RE = re.compile(r"\breject\b[\s:]*([A-Za-z][A-Za-z0-9_]*)?\s*:?\s*(.*)",
                        re.IGNORECASE | re.DOTALL)


@dataclass(frozen=True)
class Verdict:
    decision: str  # "accept" | "reject"
    feedback: Feedback | None
    raw_text: str

    @property
    def accepted(self) -> bool:
        return self.decision == "accept"


def parse_verdict(text: str, known_ids: set[str]) -> Verdict | None:
    """Extract a verdict from the raw reply; None when neither keyword appears.

    A reply containing both keywords resolves to reject, so ambiguity fails
    toward re-generation. A REJECT naming an unknown requirement id maps to
    the synthetic "unspecified" id with the raw reason preserved.
    """
    lowered = text.lower()
    if "reject" in lowered:
        match = _REJECT_RE.search(text)
        req_id, reason = None, ""
        if match:
            req_id = match.group(1)
            reason = (match.group(2) or "").strip()
        if req_id not in known_ids:
            reason = reason or text.strip()
            req_id = UNSPECIFIED_ID
        return Verdict("reject", Feedback(req_id, reason or "draft rejected"), text)
    if "accept" in lowered:
        return Verdict("accept", None, text)
    return None


def verify(backend, goal: UserGoal, context: DialogueContext,
           requirements: RequirementSet, draft,
           config: PromptConfig = PromptConfig()) -> Verdict:
    """One completion plus, on an unparseable reply, a single re-ask."""
    prompt = verifier_prompt(goal, context, requirements, draft.acts, config)
    request = CompletionRequest(user_text=prompt.user_text,
                                system_text=prompt.system_text,
                                temperature=VERIFICATION_TEMPERATURE,
                                max_tokens=128)
    raw = ""
    for _ in range(2):
        raw = backend.complete(request).text
        verdict = parse_verdict(raw, requirements.ids())
        if verdict is not None:
            return verdict
    raise UnparseableVerdict(f"verifier reply unparseable: {raw[:100]!r}")
