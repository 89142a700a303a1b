"""Bundled program corpus.

The package ships a small library of signal combinators, a GUI
data-model library with a demo application, runnable demos with input
channels, and two deliberately ill-typed programs.  Each program
declares its signatures inline; the manifest records whether it is
expected to typecheck and which definition, if any, is runnable.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    source: str
    expect: str  # "accept" or "reject"
    entry: str | None  # runnable definition, or None for check-only


def _corpus_dir():
    return resources.files("rizzo") / "corpus"


def corpus() -> list[CorpusEntry]:
    """All bundled programs, in manifest order."""
    root = _corpus_dir()
    entries = []
    for line in (root / "manifest.txt").read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        name, filename, expect, entry = [p.strip() for p in line.split("|")]
        source = (root / filename).read_text()
        entries.append(CorpusEntry(
            name, source, expect, None if entry == "-" else entry))
    return entries


def corpus_source(name: str) -> str:
    """Source text of one bundled program."""
    for e in corpus():
        if e.name == name:
            return e.source
    raise KeyError(name)
