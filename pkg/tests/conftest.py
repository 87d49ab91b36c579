from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from lite.assembler import AssembledProject, ProjectManifest, assemble, load_project
from lite.formalism import SOURCE, parse_rule_file, target_role

DATA = os.path.join(os.path.dirname(__file__), "data")


def pytest_runtest_logreport(report):
    """One visible PASS/FAIL line per acceptance criterion."""
    module, _, test = report.nodeid.rpartition("::")
    if report.when == "call" and module.endswith("test_acceptance.py"):
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\nACCEPTANCE {outcome}: {test}")


def data_path(*parts: str) -> str:
    return os.path.join(DATA, *parts)


def read_data(*parts: str) -> str:
    with open(data_path(*parts), encoding="utf-8") as fh:
        return fh.read()


def project_from(source_text: str, targets: dict[str, str] | None = None,
                 sign: dict[str, str] | None = None,
                 source_language: str = "english") -> AssembledProject:
    """Assemble an in-memory project; fails the test on any error."""
    targets = targets or {}
    sign = sign or {}
    manifest = ProjectManifest(
        id="test",
        source_language=source_language,
        target_languages=tuple(targets),
        sign_languages=tuple(sign),
        sign_files=tuple((lang, f"<sign:{lang}>") for lang in sign),
    )
    files = []
    rf, diags = parse_rule_file(source_text, SOURCE, "<source>")
    assert not [d for d in diags if d.severity == "error"], diags
    files.append(rf)
    for lang, text in sign.items():
        rf, diags = parse_rule_file(text, target_role(lang), f"<sign:{lang}>")
        assert not [d for d in diags if d.severity == "error"], diags
        files.append(rf)
    for lang, text in targets.items():
        rf, diags = parse_rule_file(text, target_role(lang), f"<target:{lang}>")
        assert not [d for d in diags if d.severity == "error"], diags
        files.append(rf)
    project, diags = assemble(manifest, files)
    assert project is not None, diags
    return project


@pytest.fixture(scope="session")
def cafe_project() -> AssembledProject:
    project, diags = load_project(data_path("cafe", "cafe.manifest"))
    assert project is not None, diags
    return project


@pytest.fixture(scope="session")
def trains_project() -> AssembledProject:
    project, diags = load_project(data_path("trains", "trains.manifest"))
    assert project is not None, diags
    return project


MEDICAL_RULES = """\
TrPhrase $$top
Source ?$$PP_time la douleur est-elle ?$$adv $$qual ?$$PP_time
Source ?$$PP_time avez-vous ?$$adv une douleur $$qual
Source ?$$PP_time ?(est-ce que) la douleur est ?$$adv $$qual ?$$PP_time
Target/french la douleur est-elle ?$$adv $$qual ?$$PP_time
Target/spanish el dolor es ?$$adv $$qual ?$$PP_time
EndTrPhrase

TrLex $$qual source="vive" spanish="aguda"
TrLex $$qual source="difficile à situer" spanish="difícil de localizar"
TrLex $$adv source="souvent" spanish="a menudo"
TrLex $$PP_time source="le matin" spanish="por la mañana"
"""


@pytest.fixture(scope="session")
def medical_project() -> AssembledProject:
    # French is the source here; the canonical line is Target/french.
    return project_from(MEDICAL_RULES, targets={"spanish": ""}, source_language="french")
