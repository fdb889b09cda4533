"""Line-oriented ``section.key = value`` text format.

Both the core catalog and the run configuration files use the same
trivially parseable schema: one assignment per line, ``#`` starts a
comment, blank lines are ignored.  Keys are dotted paths; values are
kept as raw strings and coerced by the caller.  Insertion order is
preserved so a file can be rewritten byte-identically.
"""


class KvError(ValueError):
    """Malformed key/value file or a value that fails coercion."""


def parse_kv_text(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse ``section.key = value`` lines into an ordered dict.

    Raises KvError with the offending line number on duplicate keys,
    missing '=' or empty keys.
    """
    pairs: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise KvError(f"{source}:{line_no}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise KvError(f"{source}:{line_no}: empty key")
        if key in pairs:
            raise KvError(f"{source}:{line_no}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def load_kv(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return parse_kv_text(fh.read(), source=str(path))


def dump_kv(pairs: dict[str, str]) -> str:
    return "".join(f"{key} = {value}\n" for key, value in pairs.items())


def as_float(pairs: dict[str, str], key: str) -> float:
    try:
        return float(pairs[key])
    except KeyError:
        raise KvError(f"missing key {key!r}") from None
    except ValueError:
        raise KvError(f"key {key!r}: {pairs[key]!r} is not a number") from None


def as_int(pairs: dict[str, str], key: str) -> int:
    value = as_float(pairs, key)
    if value != int(value):
        raise KvError(f"key {key!r}: {pairs[key]!r} is not an integer")
    return int(value)


def as_str(pairs: dict[str, str], key: str) -> str:
    try:
        return pairs[key]
    except KeyError:
        raise KvError(f"missing key {key!r}") from None


def as_float_list(pairs: dict[str, str], key: str) -> list[float]:
    raw = as_str(pairs, key)
    try:
        return [float(item) for item in raw.split(",")]
    except ValueError:
        raise KvError(f"key {key!r}: {raw!r} is not a comma-separated number list") from None
