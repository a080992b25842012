"""Dictionary lookup for candidate words: top sense definition, falling back
through reduced word forms, then the word itself as its own definition."""
from __future__ import annotations


def reduced_forms(word: str) -> list[str]:
    """Candidate base forms for a surface word, most specific first.

    A small rule set covering regular inflections: plural -s/-es/-ies,
    -ing and -ed with doubled-consonant and dropped-e restoration.
    """
    word = word.lower()
    forms = []

    def add(form: str):
        if len(form) >= 2 and form != word and form not in forms:
            forms.append(form)

    if word.endswith("ies"):
        add(word[:-3] + "y")
    if word.endswith("es"):
        add(word[:-2])
    if word.endswith("s") and not word.endswith("ss"):
        add(word[:-1])
    for suffix in ("ing", "ed"):
        if word.endswith(suffix):
            stem = word[: -len(suffix)]
            add(stem)
            if len(stem) >= 2 and stem[-1] == stem[-2]:
                add(stem[:-1])
            add(stem + "e")
    return forms


def lookup_definition(word: str, inventory: dict[str, list[dict]]) -> tuple[str, str, list[str]]:
    """(definition text, embedding id, POS tags of the matched word).

    Words absent from the dictionary in all reduced forms define themselves;
    their embedding id is ``word:<form>`` and must be covered by a follow-up
    sentence-embedding run over the candidate file.
    """
    for form in [word] + reduced_forms(word):
        senses = inventory.get(form)
        if senses:
            top = senses[0]
            tags = sorted({s["pos"] for s in senses if s.get("pos")})
            return top["definition"], top["sense_id"], tags
    return word, f"word:{word}", []
