#!/usr/bin/env python3
"""Write the utterance/guideline bank (src/phatic/data/bank.json).

Templates are authored per move family and expanded for every rule of the
shipped ruleset.  Per-rule overrides come first, so they are variant 0 for
that rule.  Placeholders: {speaker}, {addressee}, {topic}, {old_topic},
{Topic} (capitalised), and {agent}/{partner} in narration of silent rules.

    python3 scripts/generate_bank.py [--out FILE] [--check]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from phatic.conversation import BOOKKEEPING, build_ruleset, move_family

OUT = Path(__file__).resolve().parents[1] / "src" / "phatic" / "data" / "bank.json"

OPENING = [
    "Good places to start a conversation: waiting in line, a club meeting, on the bus.",
    "A good time to start talking is when the other person is not busy or in a hurry.",
]

TOPIC_NAMES = {
    "weekend": "the weekend",
    "weather": "the weather",
    "pop": "pop music",
    "country": "country music",
    "rock": "rock music",
}

UTTERANCES = {
    "greet": [
        "Good morning, {addressee}!",
        "Good morning, {addressee}.",
        "Hi, {addressee}! How are you?",
    ],
    "small_talk_weather": [
        "This weather today is really nice--good for playing sports",
        "It's such a nice day out today.",
        "I heard it's supposed to stay sunny all week.",
    ],
    "small_talk_weekend": [
        "I love time at home listening to my music. Wish the weekend didn't go by so quickly",
        "My weekend was pretty relaxing.",
        "I can't believe the weekend is already over.",
    ],
    "topic_talk_typical_positive": [
        "I think {topic} is a lot more interesting than people give it credit for.",
        "I like {topic}.",
        "{Topic} is pretty good, I think.",
    ],
    "topic_talk_typical_negative": [
        "I'm not a big fan of {topic}.",
        "{Topic} isn't really my thing.",
    ],
    "topic_talk_enthusiastic_positive": [
        "I love {topic}!",
        "{Topic} is the best! I could never get tired of it.",
    ],
    "topic_talk_enthusiastic_negative": [
        "I really can't stand {topic}!",
        "Ugh, {topic} is the worst.",
    ],
    "continue_talking": [
        "Some of the people I know like {topic}.",
        "Another thing about {topic} is that there's always something new to learn.",
        "I could go on about {topic} for hours.",
    ],
    "question": [
        "What do you think about {topic}, {addressee}?",
        "Do you like {topic}?",
        "How do you feel about {topic}?",
    ],
    "question_weekend": [
        "How was your weekend, {addressee}?",
        "Did you do anything fun this weekend?",
    ],
    "question_weather": [
        "What do you think of the weather today, {addressee}?",
        "Do you like this kind of weather?",
    ],
    "answer_typical_positive": ["I like {topic}.", "{Topic} is nice."],
    "answer_typical_negative": ["I don't really like {topic}.", "{Topic} isn't for me."],
    "answer_enthusiastic_positive": ["I love {topic}!", "Oh, {topic} is my favorite!"],
    "answer_enthusiastic_negative": ["I can't stand {topic}!", "Honestly, I hate {topic}."],
    "answer_neutral": [
        "I don't really know much about {topic}.",
        "I've never thought much about {topic}.",
    ],
    "reciprocate_positive": [
        "I like {topic}. What about you, {addressee}?",
        "{Topic} is great. How about you?",
    ],
    "reciprocate_negative": [
        "I'm not really into {topic}. What about you, {addressee}?",
        "{Topic} isn't my thing. How about you?",
    ],
    "change_topic": [
        "Speaking of {old_topic}, I've been thinking about {topic} lately.",
        "That reminds me of {topic}.",
        "Anyway, have you been following {topic}?",
    ],
    "change_topic_weather_baseball": [
        "I did a lot of playing baseball on Saturday It was nice out, just like today.",
    ],
    "disagree_positive": [
        "What? No way, {topic} is great!",
        "You're wrong about {topic}. It's actually really good.",
    ],
    "disagree_negative": [
        "Really? I think {topic} is terrible.",
        "I can't believe you like {topic}. It's awful.",
    ],
    "terminate": [
        "Uh-huh, well...I have to go now. Goodbye.",
        "Sorry, I really need to get going. Bye.",
    ],
    "goodbye": [
        "Take care.",
        "See you later, {addressee}.",
        "Bye, {addressee}!",
    ],
}

NARRATION = {
    "keep_disagreement_private": "({partner} disagrees but keeps quiet about it.)",
    "like_from_agreement": "({partner} agrees and likes {agent} a little more.)",
    "no_shared_opinion": "({partner} has no opinion on that.)",
    "dislike_from_disagreement": "({agent} feels hurt and likes {partner} less.)",
    "happy_from_enthusiastic_agreement": "({partner} shares the excitement and feels happy.)",
    "enthusiasm_not_shared": "({partner} doesn't share the excitement.)",
    "enthusiasm_lost_on_listener": "({partner} doesn't know enough to be excited.)",
    "enthusiasm_unmatched_mood": "({partner} isn't in the mood to get excited.)",
    "annoyed_by_unfair_participation": "({agent} is getting annoyed.)",
    "wind_down": "(Time is running short.)",
}

GUIDELINES = {
    "greet": [
        "Greeting someone acknowledges them and lets them know you are open to conversation.",
        "Say hello when you see someone you know, even if you don't plan to talk for long.",
    ],
    "small_talk": [
        "Small talk makes people more comfortable around each other.",
        "Safe topics like the weather or the weekend are a good way to start talking.",
    ],
    "topic_talk": [
        "Sharing your opinions helps the other person get to know you.",
        "After sharing your opinion, give the other person a chance to respond.",
    ],
    "continue_talking": [
        "Try not to talk for too long without letting the other person speak.",
        "Watch for signs the other person is bored, like looking away or giving short answers.",
    ],
    "question": [
        "Avoid only asking questions and never giving information about yourself; "
        "this makes the conversation one-sided.",
        "Asking questions shows that you are interested in the other person.",
    ],
    "answer": [
        "When someone asks you a question, answer it before changing the subject.",
        "Give more than a one-word answer so the conversation can keep going.",
    ],
    "reciprocate": [
        "After answering a question, asking the same question back shows interest in the other person.",
        "Conversations go best when both people share about the same amount.",
    ],
    "change_topic": [
        "When you change the topic, pick something related to what you were just talking about.",
        "Sudden changes of topic can confuse the other person.",
    ],
    "disagree": [
        "It's okay to disagree, but strongly criticizing someone's opinion can hurt their feelings.",
        "If you disagree, say so gently, or look for something you both agree on.",
    ],
    "terminate": [
        "If someone suddenly wants to leave, they may be bored or upset with how the conversation went.",
        "Leaving a conversation abruptly can seem rude, but it is better to say goodbye than to walk away.",
    ],
    "goodbye": [
        "Say goodbye before leaving a conversation so the other person knows it is over.",
        "Ending on a friendly note makes it easier to talk again next time.",
    ],
    "keep_disagreement_private": [
        "You don't have to share every disagreement; sometimes it's kinder to let it go.",
    ],
    "like_from_agreement": [
        "People tend to like each other more when they find things in common.",
    ],
    "no_shared_opinion": [
        "If the other person doesn't know much about a topic, they may want to talk about something else.",
    ],
    "dislike_from_disagreement": [
        "Having your opinion strongly criticized can make you feel sad and like the other person less.",
    ],
    "happy_from_enthusiastic_agreement": [
        "Sharing excitement about something you both love makes a conversation fun.",
    ],
    "enthusiasm_not_shared": [
        "Not everyone will be as excited about a topic as you are.",
    ],
    "enthusiasm_lost_on_listener": [
        "Not everyone will be as excited about a topic as you are.",
    ],
    "enthusiasm_unmatched_mood": [
        "People who are upset may not want to share in your excitement.",
    ],
    "annoyed_by_unfair_participation": [
        "When one person does most of the talking, the other person can become annoyed.",
    ],
    "wind_down": [
        "When time is running short, start wrapping the conversation up.",
    ],
}


def utterances_for(name: str) -> list[str]:
    fam = move_family(name)
    parts = name.split("_")
    if fam == "small_talk":
        return UTTERANCES[name]
    if fam == "topic_talk":
        return UTTERANCES["topic_talk_" + "_".join(parts[-2:])]
    if fam == "question":
        return UTTERANCES.get(f"question_{parts[-1]}", []) + UTTERANCES["question"]
    if fam == "answer":
        key = "neutral" if parts[-1] == "neutral" else "_".join(parts[-2:])
        return UTTERANCES["answer_" + key]
    if fam == "reciprocate":
        return UTTERANCES["reciprocate_" + parts[-1]]
    if fam == "change_topic":
        return UTTERANCES.get(name, []) + UTTERANCES["change_topic"]
    if fam == "disagree":
        return UTTERANCES["disagree_" + parts[-1]]
    return UTTERANCES[fam]


def build_bank() -> dict:
    rules = {}
    for r in build_ruleset().rules:
        if r.name in BOOKKEEPING:
            rules[r.name] = {
                "silent": True,
                "utterances": [NARRATION[r.name]],
                "guidelines": GUIDELINES[r.name],
            }
        else:
            rules[r.name] = {
                "silent": False,
                "utterances": utterances_for(r.name),
                "guidelines": GUIDELINES[move_family(r.name)],
            }
    return {"format": "phatic-bank-v1", "topic_names": TOPIC_NAMES,
            "opening_guidelines": OPENING, "rules": rules}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(OUT))
    ap.add_argument("--check", action="store_true", help="fail if the output file is stale")
    args = ap.parse_args(argv)
    text = json.dumps(build_bank(), indent=1, ensure_ascii=False) + "\n"
    if args.check:
        current = Path(args.out).read_text(encoding="utf-8") if Path(args.out).exists() else ""
        if current != text:
            print(f"{args.out} is stale; rerun scripts/generate_bank.py", file=sys.stderr)
            return 1
        return 0
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"wrote {len(build_bank()['rules'])} entries to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
