"""Integer label codes used throughout (numpy-friendly)."""

POSITIVE = 1
NEGATIVE = -1
REJECT = 0
# A cascade's final rejection is reported as an unknown-class discovery.
UNKNOWN = 0

_NAMES = {POSITIVE: "positive", NEGATIVE: "negative", UNKNOWN: "unknown"}
_CODES = {"positive": POSITIVE, "negative": NEGATIVE, "unknown": UNKNOWN, "reject": REJECT}


def label_name(code: int) -> str:
    return _NAMES[int(code)]


def label_code(name: str) -> int:
    try:
        return _CODES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unrecognised label {name!r}") from None
