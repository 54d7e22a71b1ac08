"""Bundled schemas and generator specs."""

from __future__ import annotations

from importlib import resources

BUNDLED = ("table3_schema", "table4_schema", "table4_dgp", "table3_margins")


def read_text(name: str) -> str:
    if name not in BUNDLED:
        raise KeyError(f"no bundled asset {name!r}; available: {', '.join(BUNDLED)}")
    return resources.files("ordsev").joinpath("data", f"{name}.json").read_text(encoding="utf-8")
