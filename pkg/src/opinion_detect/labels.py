"""The four opinion classes and their two super-categories."""

from __future__ import annotations

import enum


class SuperCategory(str, enum.Enum):
    PROACTIVE = "proactive"
    PREVENTIVE = "preventive"


class OpinionLabel(str, enum.Enum):
    """Opinion class of a post.

    ``GAIN`` and ``NON_GAIN`` are proactive; ``NON_LOSSES`` and ``LOSSES``
    are preventive. The string values are the on-disk label spellings.
    """

    GAIN = "gain"
    NON_GAIN = "non-gain"
    NON_LOSSES = "non-losses"
    LOSSES = "losses"

    @property
    def super_category(self) -> SuperCategory:
        if self in (OpinionLabel.GAIN, OpinionLabel.NON_GAIN):
            return SuperCategory.PROACTIVE
        return SuperCategory.PREVENTIVE

    @classmethod
    def parse(cls, value: str) -> "OpinionLabel":
        """Parse an exact label string; raises ``ValueError`` on anything else."""
        try:
            return cls(value)
        except ValueError:
            allowed = ", ".join(label.value for label in cls)
            raise ValueError(f"unknown label {value!r} (expected one of: {allowed})") from None


CLASS_ORDER: tuple[str, ...] = tuple(label.value for label in OpinionLabel)
