import itertools
import json
from pathlib import Path

import pytest

from transec.corpus import (
    CodeSample,
    Corpus,
    DistributionSpec,
    PatchAnnotation,
    ProvenanceRecord,
)
from transec.tokenizers import DEFAULT_TOKENIZER, count_tokens
from transec.translator import ModelProfile

GOLDEN_DIR = Path(__file__).parent / "golden"

# Cell counts of the target dataset distribution, keyed by
# (language group, cwe, security status).
TABLE1_CELLS = {
    ("C/C++", "CWE-416", "patched"): 60,
    ("C/C++", "CWE-416", "vulnerable"): 60,
    ("C/C++", "CWE-787", "patched"): 30,
    ("C/C++", "CWE-787", "vulnerable"): 30,
    ("C/C++", "CWE-125", "patched"): 30,
    ("C/C++", "CWE-125", "vulnerable"): 30,
    ("PHP", "CWE-20", "patched"): 31,
    ("PHP", "CWE-20", "vulnerable"): 10,
    ("PHP", "CWE-22", "patched"): 20,
    ("PHP", "CWE-22", "vulnerable"): 10,
    ("PHP", "CWE-79", "patched"): 40,
    ("PHP", "CWE-79", "vulnerable"): 10,
    ("PHP", "CWE-89", "patched"): 30,
    ("PHP", "CWE-89", "vulnerable"): 10,
    ("PHP", "CWE-94", "patched"): 30,
    ("PHP", "CWE-94", "vulnerable"): 10,
    ("PHP", "CWE-200", "patched"): 40,
    ("PHP", "CWE-200", "vulnerable"): 10,
    ("Java", "CWE-20", "patched"): 29,
    ("Java", "CWE-20", "vulnerable"): 10,
    ("Java", "CWE-22", "patched"): 40,
    ("Java", "CWE-22", "vulnerable"): 10,
    ("Java", "CWE-79", "patched"): 20,
    ("Java", "CWE-79", "vulnerable"): 10,
    ("Java", "CWE-89", "patched"): 30,
    ("Java", "CWE-89", "vulnerable"): 10,
    ("Java", "CWE-94", "patched"): 30,
    ("Java", "CWE-94", "vulnerable"): 10,
    ("Java", "CWE-200", "patched"): 20,
    ("Java", "CWE-200", "vulnerable"): 10,
}


def make_sample(
    sample_id: str,
    language: str = "Java",
    cwe: str = "CWE-89",
    security_status: str = "patched",
    code: str | None = None,
    origin: str = "real_world",
) -> CodeSample:
    if code is None:
        code = (
            f"// sample {sample_id}\n"
            "int main(void) {\n"
            "    validate(input);\n"
            "    return 0;\n"
            "}\n"
        )
    return CodeSample(
        id=sample_id,
        language=language,
        cwe=cwe,
        security_status=security_status,
        code=code,
        patch_annotation=PatchAnnotation(
            description=(
                "input validation guard"
                if security_status == "patched"
                else "missing validation on input"
            ),
            locations=((2, 3),),
        ),
        token_count=count_tokens(code, DEFAULT_TOKENIZER),
        tokenizer_id=DEFAULT_TOKENIZER,
        provenance=ProvenanceRecord(
            origin=origin,
            cve_id="CVE-2020-0001" if origin == "real_world" else None,
        ),
    )


def build_table1_corpus() -> Corpus:
    samples = []
    counter = itertools.count()
    for (group, cwe, status), n in TABLE1_CELLS.items():
        for i in range(n):
            # alternate C / C++ within their shared reporting group
            language = group if group != "C/C++" else ("C" if i % 2 == 0 else "C++")
            samples.append(
                make_sample(f"s{next(counter):04d}", language, cwe, status)
            )
    return Corpus(tuple(samples))


@pytest.fixture(scope="session")
def table1_corpus() -> Corpus:
    return build_table1_corpus()


@pytest.fixture(scope="session")
def table1_spec() -> DistributionSpec:
    return DistributionSpec(dict(TABLE1_CELLS))


@pytest.fixture
def profile() -> ModelProfile:
    return ModelProfile(model_id="test-model", max_retries=3)


def golden(name: str) -> str:
    return (GOLDEN_DIR / name).read_text(encoding="utf-8")


def golden_fixtures() -> dict:
    return json.loads((GOLDEN_DIR / "fixtures.json").read_text(encoding="utf-8"))
