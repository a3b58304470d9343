from enum import Enum


class StringEnumWithChoices(str, Enum):
    """String enum usable directly as argparse ``choices`` and pydantic field type."""

    @classmethod
    def choices(cls) -> tuple[tuple[str, str], ...]:
        return tuple((str(e.value), str(e.value)) for e in cls)

    @classmethod
    def values(cls) -> tuple[str, ...]:
        return tuple(str(e.value) for e in cls)

    @classmethod
    def parse(cls, value: str) -> "StringEnumWithChoices":
        """Return the member whose value matches ``value`` (case-insensitive)."""
        normalized = value.strip().lower()
        for member in cls:
            if member.value == normalized:
                return member
        raise ValueError(f"Invalid {cls.__name__}: {value!r}. Expected one of {', '.join(cls.values())}")
