"""Prompt template loading and placeholder substitution.

Templates are shipped as package data and rendered with a single-pass
substitution of named ``{placeholder}`` markers.  Substituted values are
never re-scanned, so braces inside embedded source code survive verbatim.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from typing import Mapping

TEMPLATE_PACKAGE = "transec.templates"


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return resources.files(TEMPLATE_PACKAGE).joinpath(name).read_text(encoding="utf-8")


def render(template: str, values: Mapping[str, str]) -> str:
    """Replace each known {name} marker with its value, in one pass."""
    pattern = re.compile(
        r"\{(" + "|".join(re.escape(k) for k in values) + r")\}"
    )
    return pattern.sub(lambda m: values[m.group(1)], template)
