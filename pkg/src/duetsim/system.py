"""Deterministic rule-based dialogue system used as the simulator's counterpart.

The policy is priority-ordered and honest: every informed value comes
straight from the current candidate entity, so logs can be scored against
the database as ground truth.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .acts import DialogueAct, GENERAL_DOMAIN
from .agenda import DONTCARE, template_nlg
from .errors import InvalidBookingSlot, UnbookableDomain
from .world import BookingLedger, Entity, Ontology, query_entities

UNDERDETERMINED = 5  # more matches than this and the system asks for a constraint


@dataclass
class SystemState:
    constraints: dict[str, dict[str, str]] = field(default_factory=dict)
    candidate: dict[str, Entity | None] = field(default_factory=dict)
    informed: set = field(default_factory=set)  # (domain, slot) already given
    ledger: BookingLedger = field(default_factory=lambda: BookingLedger(random.Random(0)))


def _requery(state: SystemState, domain: str, ontology: Ontology, entities) -> list:
    constraints = {s: v for s, v in state.constraints.get(domain, {}).items()
                   if v != DONTCARE}
    matches = query_entities(entities, ontology, domain, constraints)
    state.candidate[domain] = matches[0] if matches else None
    return matches


def system_turn(state: SystemState, user_acts, ontology: Ontology,
                entities) -> tuple[list[DialogueAct], str, SystemState]:
    """One policy step: returns (system acts, utterance, updated state)."""
    acts: list[DialogueAct] = []
    informs: dict[str, dict[str, str]] = {}
    requests: dict[str, list[str]] = {}
    books: dict[str, dict[str, str]] = {}
    saw_bye = False
    for act in user_acts:
        a = act.normalized()
        if a.intent == "bye":
            saw_bye = True
        elif a.intent == "inform" and a.domain != GENERAL_DOMAIN and a.slot:
            informs.setdefault(a.domain, {})[a.slot] = a.value
        elif a.intent == "request" and a.domain != GENERAL_DOMAIN and a.slot:
            requests.setdefault(a.domain, []).append(a.slot)
        elif a.intent == "book" and a.domain != GENERAL_DOMAIN:
            books.setdefault(a.domain, {})
            if a.slot:
                books[a.domain][a.slot] = a.value

    if saw_bye:
        return [DialogueAct("bye", GENERAL_DOMAIN)], template_nlg(
            [DialogueAct("bye", GENERAL_DOMAIN)], side="system"), state

    domains = sorted(set(informs) | set(requests) | set(books))
    for domain in domains:
        if not ontology.has_domain(domain):
            acts.append(DialogueAct("nooffer", domain))
            continue
        # 1. record user informs and re-query
        if domain in informs:
            state.constraints.setdefault(domain, {}).update(informs[domain])
        matches = _requery(state, domain, ontology, entities)
        candidate = state.candidate.get(domain)

        # 2. nothing matches the accumulated constraints
        if not matches:
            acts.append(DialogueAct("nooffer", domain))
            continue

        handled = False
        # 3. answer requested slots from the candidate entity
        for slot in requests.get(domain, ()):
            value = candidate.get(slot)
            if value:
                acts.append(DialogueAct("inform", domain, slot, value))
                state.informed.add((domain, slot))
            else:
                acts.append(DialogueAct("nooffer", domain))
            handled = True

        # 4. book the candidate when the user asked to book
        if domain in books:
            try:
                ref = state.ledger.book(candidate, books[domain], ontology)
                acts.append(DialogueAct("offer_booked", domain, "ref", ref.code))
                acts.append(DialogueAct("offer_booked", domain, "name",
                                        candidate.get("name")))
            except (UnbookableDomain, InvalidBookingSlot):
                acts.append(DialogueAct("nobook", domain))
            handled = True

        if handled:
            continue

        # 5. narrow down an underdetermined search
        if len(matches) > UNDERDETERMINED:
            informable = sorted(ontology.domains[domain].informable)
            open_slots = [s for s in informable
                          if s not in state.constraints.get(domain, {})
                          and s != "name"]
            if open_slots:
                acts.append(DialogueAct("request", domain, open_slots[0]))
                continue

        # otherwise put a concrete option on the table
        acts.append(DialogueAct("recommend", domain, "name", candidate.get("name")))
        state.informed.add((domain, "name"))

    if not acts:
        acts = [DialogueAct("reqmore", GENERAL_DOMAIN)]
    return acts, template_nlg(acts, side="system"), state


class SystemAgent:
    """Stateful wrapper presenting the respond() interface to run_dialogue."""

    def __init__(self, ontology: Ontology, entities, seed: int = 0):
        self.ontology = ontology
        self.entities = entities
        self.state = SystemState(ledger=BookingLedger(random.Random(seed)))

    def respond(self, user_acts):
        acts, utterance, self.state = system_turn(self.state, user_acts,
                                                  self.ontology, self.entities)
        return acts, utterance
