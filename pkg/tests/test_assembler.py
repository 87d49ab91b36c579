from __future__ import annotations

import pytest

from conftest import data_path, project_from, read_data
from lite.assembler import (
    assemble,
    generate_blank_targets,
    load_project,
    parse_manifest,
    refresh_blank_targets,
    validate,
)
from lite.formalism import SOURCE, Token, has_errors, parse_rule_file, target_role


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

def test_manifest_parses_lists_and_tagged_paths():
    manifest, diags = parse_manifest(
        "id: demo\nsource_language: english\ntarget_languages: french, german\n"
        "source_files: a.lite b.lite\ntarget_files: french fr.lite\n", "demo.manifest")
    assert diags == []
    assert manifest.target_languages == ("french", "german")
    assert manifest.source_files == ("a.lite", "b.lite")
    assert manifest.target_files == (("french", "fr.lite"),)


def test_manifest_rejects_source_in_targets_and_duplicate_paths():
    manifest, diags = parse_manifest(
        "source_language: english\ntarget_languages: english\n"
        "source_files: a.lite a.lite\n")
    assert manifest is None
    codes = {d.code for d in diags}
    assert "SourceIsTarget" in codes and "DuplicatePath" in codes


# ---------------------------------------------------------------------------
# Assembly of the café project
# ---------------------------------------------------------------------------

def test_cafe_assembles_and_merges_targets(cafe_project):
    top = cafe_project.units["top"]
    assert len(top) == 2
    hello, want = top
    assert hello.canonical_key == "hello"
    assert hello.canonical_derived
    assert hello.targets["french"].key() == "bonjour"
    assert want.canonical_key == "i want $$food-or-drink please"
    assert len(want.source_lines) == 2
    assert want.targets["french"].key() == "je voudrais $$food-or-drink s'il vous plaît"
    lex = cafe_project.lexemes["food-or-drink"][0]
    assert lex.canonical_key == "a coke"
    assert [t.display for t in lex.targets["french"]] == ["un", "coca"]
    assert cafe_project.variable_graph["top"] == frozenset({"food-or-drink"})


def test_orphan_target_is_a_warning():
    src = "TrPhrase $$top\nSource taxi\nTarget/english taxi\nEndTrPhrase\n"
    fr = ("TrPhrase $$top\nTarget/english i need a taxi\nTarget/french un taxi\nEndTrPhrase\n")
    from lite.assembler import ProjectManifest

    manifest = ProjectManifest(id="t", source_language="english", target_languages=("french",))
    files = [parse_rule_file(src, SOURCE, "s")[0], parse_rule_file(fr, target_role("french"), "f")[0]]
    project, diags = assemble(manifest, files)
    assert project is not None
    assert "OrphanTarget" in {d.code for d in diags}
    # the orphan is still indexed, never silently dropped
    assert ("i need a taxi", "french") in project.target_index


def test_cyclic_variables_are_fatal():
    text = (
        "TrPhrase $$top\nSource go $$a\nTarget/english go $$a\nEndTrPhrase\n"
        "TrPhrase $$a\nSource x $$b\nTarget/english x $$b\nEndTrPhrase\n"
        "TrPhrase $$b\nSource y ?$$a\nTarget/english y ?$$a\nEndTrPhrase\n"
    )
    from lite.assembler import ProjectManifest

    manifest = ProjectManifest(id="t", source_language="english")
    project, diags = assemble(manifest, [parse_rule_file(text, SOURCE, "s")[0]])
    assert project is None
    cyc = [d for d in diags if d.code == "CyclicVariable"]
    assert cyc and "$$a" in cyc[0].message and "$$b" in cyc[0].message


def test_unknown_variable_is_fatal():
    text = "TrPhrase $$top\nSource go $$nowhere\nTarget/english go $$nowhere\nEndTrPhrase\n"
    from lite.assembler import ProjectManifest

    project, diags = assemble(ProjectManifest(id="t", source_language="english"),
                              [parse_rule_file(text, SOURCE, "s")[0]])
    assert project is None
    assert "UnknownVariable" in {d.code for d in diags}


def test_duplicate_canonical_within_category_is_fatal():
    text = (
        "TrPhrase $$top\nSource hello\nTarget/english hello\nEndTrPhrase\n"
        "TrPhrase $$top\nSource hullo\nTarget/english hello\nEndTrPhrase\n"
    )
    from lite.assembler import ProjectManifest

    project, diags = assemble(ProjectManifest(id="t", source_language="english"),
                              [parse_rule_file(text, SOURCE, "s")[0]])
    assert project is None
    assert "DuplicateCanonical" in {d.code for d in diags}


def test_assembly_is_deterministic(cafe_project):
    project2, _ = load_project(data_path("cafe", "cafe.manifest"))
    assert [u.canonical_key for u in project2.units["top"]] == \
           [u.canonical_key for u in cafe_project.units["top"]]
    assert project2.target_index.keys() == cafe_project.target_index.keys()


# ---------------------------------------------------------------------------
# Blank generation
# ---------------------------------------------------------------------------

def test_blank_generation_matches_golden_file(cafe_project):
    blank = generate_blank_targets(cafe_project, "french")
    assert blank == read_data("cafe", "blank_french.golden.lite")
    assert "Target/french ?" in blank
    assert 'french="?"' in blank


def test_blank_reparses_with_one_fragment_per_source_key(cafe_project):
    blank = generate_blank_targets(cafe_project, "french")
    rf, diags = parse_rule_file(blank, target_role("french"), "<blank>")
    assert diags == []
    unit_keys = [u.targets["english"].key() for u in rf.units]
    assert unit_keys == [u.canonical_key for u in cafe_project.units["top"]]
    assert len(rf.lexemes) == sum(len(v) for v in cafe_project.lexemes.values())


def test_blank_of_empty_project_is_empty():
    project = project_from("TrPhrase $$top\nSource hi\nTarget/english hi\nEndTrPhrase\n",
                           targets={"french": ""})
    # single unit: exactly one block
    blank = generate_blank_targets(project, "french")
    assert blank.count("TrPhrase $$") == 1


def test_filled_blank_assembles_without_missing_targets(cafe_project):
    blank = generate_blank_targets(cafe_project, "german")
    filled = blank.replace("Target/german ?", "Target/german hallo").replace('german="?"', 'german="eine cola"')
    from lite.assembler import ProjectManifest

    manifest = ProjectManifest(id="t", source_language="english", target_languages=("german",))
    src_rf, _ = parse_rule_file(read_data("cafe", "source.lite"), SOURCE, "s")
    de_rf, diags = parse_rule_file(filled, target_role("german"), "g")
    assert diags == []
    project, adiags = assemble(manifest, [src_rf, de_rf])
    assert project is not None
    missing = [d for d in validate(project) if d.code == "MissingTarget"]
    assert missing == []


# ---------------------------------------------------------------------------
# Refresh (set-difference oracles)
# ---------------------------------------------------------------------------

REFRESH_SOURCE_V1 = (
    "TrPhrase $$top\nSource hello\nTarget/english hello\nEndTrPhrase\n"
)
REFRESH_SOURCE_V2 = (
    "TrPhrase $$top\nSource hello\nTarget/english hello\nEndTrPhrase\n"
    "TrPhrase $$top\nSource good bye\nTarget/english good bye\nEndTrPhrase\n"
)
FRENCH_FILLED = (
    "TrPhrase $$top\nTarget/english hello\nTarget/french bonjour\nEndTrPhrase\n"
)


def _project(src_text: str):
    return project_from(src_text, targets={"french": ""})


def test_refresh_appends_new_keys_and_keeps_translations():
    project = _project(REFRESH_SOURCE_V2)
    existing, _ = parse_rule_file(FRENCH_FILLED, target_role("french"), "fr")
    out = refresh_blank_targets(existing, project, "french")
    rf, diags = parse_rule_file(out, target_role("french"))
    assert diags == []
    keys = {u.targets["english"].key(): u.targets["french"] for u in rf.units}
    # oracle: source keys minus existing keys must appear as placeholders
    assert set(keys) == {"hello", "good bye"}
    assert keys["hello"] is not None and keys["hello"].key() == "bonjour"
    assert keys["good bye"] is None
    assert "# ORPHAN" not in out


def test_refresh_without_source_changes_is_fixpoint():
    project = _project(REFRESH_SOURCE_V1)
    existing, _ = parse_rule_file(FRENCH_FILLED, target_role("french"), "fr")
    out = refresh_blank_targets(existing, project, "french")
    again, diags = parse_rule_file(out, target_role("french"))
    assert diags == []
    assert refresh_blank_targets(again, project, "french") == out
    assert again.units == existing.units


def test_refresh_marks_dropped_keys_as_orphans():
    project = _project("TrPhrase $$top\nSource good bye\nTarget/english good bye\nEndTrPhrase\n")
    existing, _ = parse_rule_file(FRENCH_FILLED, target_role("french"), "fr")
    out = refresh_blank_targets(existing, project, "french")
    # oracle: keys(existing) - keys(source) flagged, never deleted
    assert "# ORPHAN\nTrPhrase $$top\nTarget/english hello" in out
    assert "Target/french bonjour" in out
    assert "Target/english good bye" in out  # the new blank appended


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def test_validate_clean_cafe_project(cafe_project):
    diags = validate(cafe_project)
    assert [d for d in diags if d.severity == "error"] == []
    assert [d for d in diags if d.code == "MissingTarget"] == []


def test_validate_reports_missing_target():
    src = (
        "TrPhrase $$top\nSource i see $$thing\nTarget/english i see $$thing\nEndTrPhrase\n"
        'TrLex $$thing source="a coke" english="a coke" french="un coca"\n'
        'TrLex $$thing source="a taxi" english="a taxi"\n'
    )
    project = project_from(src, targets={"french": "TrPhrase $$top\nTarget/english i see $$thing\nTarget/french je vois $$thing\nEndTrPhrase\n"})
    missing = [d for d in validate(project) if d.code == "MissingTarget"]
    assert len(missing) == 1 and "a taxi" in missing[0].message


def test_validate_reports_unreachable_category():
    src = (
        "TrPhrase $$top\nSource hello\nTarget/english hello\nEndTrPhrase\n"
        'TrLex $$color source="red" english="red"\n'
    )
    project = project_from(src)
    codes = [d.code for d in validate(project)]
    assert "UnreachableCategory" in codes


def test_validate_rejects_nullable_top():
    src = (
        "TrPhrase $$top\nSource ?please $$maybe\nTarget/english ?$$maybe\nEndTrPhrase\n"
        'TrLex $$maybe source="?ok" english="ok"\n'
    )
    project = project_from(src)
    codes = [d.code for d in validate(project)]
    assert "NullableTop" in codes


def test_validate_mandatory_coverage():
    # $$qual mandatory in the canonical but missing from the second line
    src = (
        "TrPhrase $$top\nSource pain is $$qual\nSource i have pain\n"
        "Target/english pain is $$qual\nEndTrPhrase\n"
        'TrLex $$qual source="sharp" english="sharp"\n'
    )
    project = project_from(src)
    codes = [d.code for d in validate(project)]
    assert "MandatoryCoverage" in codes


def test_validate_uncovered_template_variable():
    src = (
        "TrPhrase $$top\nSource hello\nTarget/english hello ?$$extra\nEndTrPhrase\n"
        'TrLex $$extra source="x" english="x"\n'
    )
    project = project_from(src)
    codes = [d.code for d in validate(project)]
    assert "UncoveredVariable" in codes
