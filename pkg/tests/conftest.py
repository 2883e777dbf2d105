import pytest

from duetsim.acts import DialogueAct, DialogueLog, DialogueTurn, derive_annotations
from duetsim.world import DomainGoal, UserGoal, load_world


@pytest.fixture(scope="session")
def world():
    return load_world()


@pytest.fixture(scope="session")
def ontology(world):
    return world[0]


@pytest.fixture(scope="session")
def entities(world):
    return world[1]


def act(intent, domain="", slot="", value=""):
    return DialogueAct(intent, domain, slot, value)


def make_turns(*specs):
    """Build alternating turns from (speaker, [acts], utterance) tuples."""
    turns = []
    for i, (speaker, acts, utterance) in enumerate(specs):
        turns.append(DialogueTurn(speaker=speaker, acts=tuple(acts),
                                  utterance=utterance, turn_index=i))
    return turns


def make_log(goal, turns, reason="user_bye", seed=None):
    return DialogueLog(goal=goal, turns=turns,
                       annotations=derive_annotations(turns),
                       termination_reason=reason, seed=seed)


def simple_goal(info=None, reqt=(), book=None, domain="restaurant"):
    return UserGoal({domain: DomainGoal(info=dict(info or {}),
                                        reqt=tuple(reqt), book=book)})
