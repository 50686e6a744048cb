from pathlib import Path

import numpy as np
import pytest

TOY = Path(__file__).parent / "fixtures" / "toy"
GOLDEN = Path(__file__).parent / "golden"

FUZZ_ALPHABET = (
    list("abcXYZ019 \t\n.,;:!?/@#_-()")
    + [chr(c) for c in range(0x0621, 0x064B)]  # Arabic letters
    + list("پچژگکی")
    + [chr(c) for c in range(0x064B, 0x0660)]  # harakat
    + [chr(c) for c in range(0x0660, 0x066A)] + [chr(c) for c in range(0x06F0, 0x06FA)]
    + ["\u200c", "\u200c", "\u200d", "\xa0", "\u3000", "،", "؟", "۔", "«", "»"]
    + ["http://", "https://", "www.", "#www", "@x", "\ufeff", "\U0001F600"]
)


def fuzz_corpus(n: int, seed: int = 0) -> list[str]:
    """Random strings mixing Persian, Arabic, Latin, marks, ZWNJ and markup."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        length = int(rng.integers(0, 40))
        pieces = []
        for _ in range(length):
            if rng.random() < 0.1:
                cp = int(rng.integers(0x20, 0xFFFF))
                if 0xD800 <= cp <= 0xDFFF:
                    cp = 0x41
                pieces.append(chr(cp))
            else:
                pieces.append(FUZZ_ALPHABET[int(rng.integers(len(FUZZ_ALPHABET)))])
        out.append("".join(pieces))
    return out


@pytest.fixture
def toy_dir() -> Path:
    return TOY


_criteria: dict[int, dict] = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "ok": True, "ran": False})
    if call.when == "call":
        entry["ran"] = True
    if call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception):
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {entry['title']}")
