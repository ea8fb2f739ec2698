"""Behaviour descriptions and worked example items for each facet, used to assemble prompts."""

from dataclasses import dataclass
from typing import Dict, Tuple

from core.items import Facet, Option, Provenance, ProvenanceSource, SjtItem

_FIXTURE = Provenance(source=ProvenanceSource.FIXTURE)


def _example(item_id: str, facet: Facet, scenario: str, options: Tuple[str, str, str, str]) -> SjtItem:
    # examples list the two high-trait options first, as the prompts instruct
    labels = ("A", "B", "C", "D")
    return SjtItem(
        item_id=item_id,
        facet=facet,
        scenario=scenario,
        options=tuple(Option(label, text) for label, text in zip(labels, options)),
        scoring_key={"A": 1, "B": 1, "C": 0, "D": 0},
        provenance=_FIXTURE,
    )


@dataclass(frozen=True)
class FacetEntry:
    facet: Facet
    behaviors: Tuple[str, ...]
    examples: Tuple[SjtItem, ...]
    # indices into ``examples`` used by the v2 prompt
    v2_examples: Tuple[int, ...] = (0, 1)


MOVIE_THEATER = _example(
    "example-movie-theater",
    Facet.SELF_CONSCIOUSNESS,
    "You are seated in the middle of one of the rows of a nearly full movie theater. Shortly after the movie "
    "starts, you realize you've entered the wrong screening room and are sitting in the wrong one. "
    "What would you do?",
    (
        "I wouldn't switch screening rooms because asking half the row to stand up during the movie would make "
        "me feel uncomfortable.",
        "I would stay until the movie ends because I'd feel embarrassed if others saw me leaving during the "
        "screening.",
        "I would get up and go to the correct screening room.",
        "I would watch the beginning of the movie and then decide whether to switch to the correct screening room.",
    ),
)

PRESENTATION = _example(
    "example-presentation",
    Facet.SELF_CONSCIOUSNESS,
    "You are giving a presentation in front of your department colleagues. While you are speaking, you notice "
    "two colleagues suddenly start laughing and whispering to each other. What would you do?",
    (
        "I would wonder if I said something funny and look down to check if my clothes are impeccable.",
        "I would lose my train of thought and have to check my notes.",
        "I would continue with my presentation.",
        "I would pause briefly and ask the two colleagues if anything was unclear or hard to understand.",
    ),
)

TRAM = _example(
    "example-tram",
    Facet.SELF_CONSCIOUSNESS,
    "You are sitting on a tram with a friend. At a stop, a woman boards and walks past you. At that moment, your "
    "friend whistles at her. She turns around in annoyance and looks at you. What would you do?",
    (
        "I would look away awkwardly to avoid eye contact.",
        "I would look away and tell my friend afterwards that I thought the behavior was rather stupid.",
        "I would give her a friendly compliment.",
        "I would laugh and point at my friend.",
    ),
)

CATALOG: Dict[Facet, FacetEntry] = {
    Facet.SELF_CONSCIOUSNESS: FacetEntry(
        facet=Facet.SELF_CONSCIOUSNESS,
        behaviors=(
            "When interacting with others, I often worry about making mistakes.",
            "When I am with a group, I am always aware of my presence.",
            "Sometimes, I feel extremely ashamed, to the point where I want to hide.",
            "When people make fun of me or joke about me, I feel embarrassed.",
            "I often feel inferior to others.",
            "When my boss or other leaders are around, I feel very uncomfortable.",
            "If I've done something wrong to someone, I can hardly face them again.",
            "When someone I know does something foolish, I feel embarrassed for them.",
        ),
        examples=(MOVIE_THEATER, PRESENTATION, TRAM),
        v2_examples=(2, 1),
    ),
    Facet.GREGARIOUSNESS: FacetEntry(
        facet=Facet.GREGARIOUSNESS,
        behaviors=(
            "I like to have a lot of people around me.",
            "I enjoy parties with lots of people.",
            "I would rather spend an evening with friends than alone.",
            "I usually prefer to do things with others.",
            "I feel energized in busy, crowded places.",
            "I often invite people over or organize get-togethers.",
            "I look for chances to join clubs and group activities.",
            "I get restless when I have spent a whole day by myself.",
        ),
        examples=(
            _example(
                "example-weekend",
                Facet.GREGARIOUSNESS,
                "It is Friday evening after a long week. A colleague tells you that a large group from the office "
                "is heading to a lively restaurant and asks you to join. What would you do?",
                (
                    "I would happily go along and suggest inviting a few more people.",
                    "I would join the group and stay until the end of the evening.",
                    "I would thank them and go home to spend a quiet evening alone.",
                    "I would say I am tired and maybe join another time.",
                ),
            ),
            _example(
                "example-new-city",
                Facet.GREGARIOUSNESS,
                "You have just moved to a new city for work and do not know anyone yet. You see a poster for a "
                "community event this weekend where newcomers can meet each other. What would you do?",
                (
                    "I would go to the event and try to talk with as many people as possible.",
                    "I would attend and ask someone I meet there to show me around.",
                    "I would skip the event and explore the city on my own.",
                    "I would stay home and settle into my new apartment.",
                ),
            ),
        ),
    ),
    Facet.OPENNESS_TO_IDEAS: FacetEntry(
        facet=Facet.OPENNESS_TO_IDEAS,
        behaviors=(
            "I enjoy working on puzzles and brain teasers.",
            "I often enjoy playing with theories or abstract concepts.",
            "I have a wide range of intellectual interests.",
            "I like to discuss questions that have no simple answer.",
            "I find philosophical arguments stimulating rather than boring.",
            "I am curious about how things work.",
            "I like to read about topics outside my own field.",
            "I enjoy hearing opinions that challenge my own.",
        ),
        examples=(
            _example(
                "example-lecture",
                Facet.OPENNESS_TO_IDEAS,
                "A friend invites you to a free public lecture about a new scientific theory that challenges common "
                "beliefs about how memory works. The lecture is on a weekday evening. What would you do?",
                (
                    "I would attend and prepare a few questions for the speaker.",
                    "I would go and afterwards look up more material on the theory.",
                    "I would decline because such theories are of little practical use.",
                    "I would tell my friend to summarize it for me if anything important comes up.",
                ),
            ),
            _example(
                "example-debate",
                Facet.OPENNESS_TO_IDEAS,
                "During lunch, colleagues start debating an abstract question about whether machines could ever "
                "truly understand language. One of them asks for your view. What would you do?",
                (
                    "I would join the debate and offer an argument of my own.",
                    "I would ask them questions to understand both positions better.",
                    "I would say the question is pointless and change the subject.",
                    "I would keep eating and wait for the conversation to move on.",
                ),
            ),
        ),
    ),
    Facet.COMPLIANCE: FacetEntry(
        facet=Facet.COMPLIANCE,
        behaviors=(
            "I would rather cooperate with others than compete with them.",
            "I try to avoid arguments, even when I think I am right.",
            "When someone insults me, I try to forgive and forget.",
            "I hesitate to express anger even when it is justified.",
            "If a disagreement gets heated, I am usually the first to back down.",
            "I rarely hold a grudge against people.",
            "I give in when others insist strongly on their point of view.",
            "I avoid being harsh with people who have treated me badly.",
        ),
        examples=(
            _example(
                "example-parking",
                Facet.COMPLIANCE,
                "You have been waiting for a parking space for several minutes. Just as it becomes free, another "
                "driver quickly takes it and waves at you. What would you do?",
                (
                    "I would let it go and look for another space.",
                    "I would tell myself it is not worth an argument and drive on.",
                    "I would get out and demand that the driver move the car.",
                    "I would honk repeatedly to show my anger.",
                ),
            ),
            _example(
                "example-credit",
                Facet.COMPLIANCE,
                "In a team meeting, a colleague presents an idea you suggested last week as if it were their own. "
                "The manager praises them for it. What would you do?",
                (
                    "I would say nothing to avoid an awkward situation.",
                    "I would talk to the colleague privately in a calm and friendly way.",
                    "I would interrupt and point out that it was my idea.",
                    "I would complain to the manager about the colleague afterwards.",
                ),
            ),
        ),
    ),
    Facet.SELF_DISCIPLINE: FacetEntry(
        facet=Facet.SELF_DISCIPLINE,
        behaviors=(
            "I am good at pacing myself so as to get things done on time.",
            "Once I start a project, I almost always finish it.",
            "I get chores done right away.",
            "I keep working on a task even when it becomes boring.",
            "I rarely waste time before getting down to work.",
            "I set goals and follow through on them.",
            "I do not give up easily when a task gets difficult.",
            "I can make myself do things that I do not feel like doing.",
        ),
        examples=(
            _example(
                "example-report",
                Facet.SELF_DISCIPLINE,
                "You have a long report due in two weeks. It is tedious work, and your friends invite you to a "
                "weekend trip that would take up most of your free time. What would you do?",
                (
                    "I would make a schedule and work on the report a little every day.",
                    "I would finish a large part of the report before deciding on the trip.",
                    "I would go on the trip and start the report a few days before the deadline.",
                    "I would put the report aside until I feel more motivated.",
                ),
            ),
            _example(
                "example-course",
                Facet.SELF_DISCIPLINE,
                "You signed up for an online course to learn a new skill. After the first few lessons, the material "
                "becomes repetitive and your progress slows down. What would you do?",
                (
                    "I would keep to my study plan and complete each lesson.",
                    "I would set myself small targets to get through the dull parts.",
                    "I would stop for a while and maybe come back to it later.",
                    "I would quit the course and look for something more interesting.",
                ),
            ),
        ),
    ),
}


def catalog_entry(facet: Facet) -> FacetEntry:
    return CATALOG[Facet.parse(facet)]
