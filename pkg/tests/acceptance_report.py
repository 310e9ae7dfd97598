"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
from __future__ import annotations

import contextlib

LINES: dict[int, str] = {}


@contextlib.contextmanager
def criterion(number: int, title: str):
    """Record the outcome of the enclosed checks; ``note`` may be filled in along the way."""
    note: list[str] = []
    try:
        yield note
    except BaseException as err:
        detail = "; ".join(note + [f"{type(err).__name__}: {err}".splitlines()[0]])
        LINES[number] = f"FAIL  criterion {number:>2}  {title}  [{detail}]"
        raise
    LINES[number] = f"PASS  criterion {number:>2}  {title}  [{'; '.join(note)}]"


def summary() -> list[str]:
    return [LINES[k] for k in sorted(LINES)]
