"""Prompt templates and tolerant parsing of model replies."""

from __future__ import annotations

import json
import math
import re
from functools import lru_cache
from importlib import resources

from ..errors import InvalidInputError, ResponseParseError

UNSEEN_PROBABILITY = 0.5
_decoder = json.JSONDecoder()
_ELLIPSIS = re.compile(r",\s*(?:\.\.\.|…)")
_TRAILING_COMMA = re.compile(r",\s*([}\]])")


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    text = resources.files("frontiernav").joinpath("data", f"{name}.txt").read_text(encoding="utf-8")
    return text[:-1] if text.endswith("\n") else text


def build_frontier_prompt(labels, goal: str) -> str:
    labels = list(labels)
    if not labels:
        raise InvalidInputError("at least one label is required")
    if not goal:
        raise InvalidInputError("goal text is empty")
    return load_template("frontier_prompt").format(labels=", ".join(labels), target_object=goal)


def build_presence_prompt(goal: str) -> str:
    if not goal:
        raise InvalidInputError("goal text is empty")
    return load_template("presence_prompt").format(target_object=goal)


def _as_text(reply) -> str:
    if isinstance(reply, (bytes, bytearray)):
        return bytes(reply).decode("utf-8", errors="replace")
    return str(reply)


def _first_dict(value):
    if isinstance(value, dict):
        return value
    if isinstance(value, list):
        for item in value:
            if isinstance(item, dict):
                return item
    return None


def extract_json_object(reply) -> dict:
    """First JSON object in ``reply``, also when wrapped in a list, a code fence
    or surrounding prose. Ellipses and trailing commas are tolerated."""
    text = _as_text(reply)
    for match in re.finditer(r"[\[{]", text):
        start = match.start()
        chunk = text[start:]
        for candidate in (chunk, _TRAILING_COMMA.sub(r"\1", _ELLIPSIS.sub("", chunk))):
            try:
                value, _ = _decoder.raw_decode(candidate)
            except (ValueError, RecursionError):
                continue
            found = _first_dict(value)
            if found is not None:
                return found
            break
    raise ResponseParseError("no JSON object found in reply")


def _probability(value):
    if isinstance(value, (list, tuple)) and value:
        value = value[0]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return None
    value = float(value)
    if math.isnan(value):
        return None
    return min(1.0, max(0.0, value))


def _reason(value) -> str:
    if isinstance(value, (list, tuple)) and len(value) > 1:
        return str(value[1])
    return ""


def parse_frontier_response(reply, labels) -> dict:
    """Map each requested label to ``(p, reason)``; labels the reply leaves out
    (or gives no usable number for) get 0.5 with reason ``"default"``."""
    obj = extract_json_object(reply)
    keyed = {str(k).strip().upper(): v for k, v in obj.items()}
    out = {}
    for label in labels:
        value = keyed.get(label.upper())
        p = _probability(value)
        out[label] = (UNSEEN_PROBABILITY, "default") if p is None else (p, _reason(value))
    return out


def parse_presence_response(reply) -> float:
    """Presence probability in [0, 1]; anything unparseable counts as absent."""
    try:
        obj = extract_json_object(reply)
    except ResponseParseError:
        return 0.0
    for key, value in obj.items():
        if str(key).strip().lower() == "probability":
            p = _probability(value)
            return 0.0 if p is None else p
    return 0.0
