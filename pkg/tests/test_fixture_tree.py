"""The checked-in demo tree under fixtures/miranda must stay in lockstep
with the generator, so docs, tests, and the CLI all see the same tour."""

from __future__ import annotations

from pathlib import Path

from mirandum.fixture import write_fixture_tree
from mirandum.model import load_tour_file, validate_tour

REPO_ROOT = Path(__file__).resolve().parents[1]
CHECKED_IN = REPO_ROOT / "fixtures" / "miranda"


def test_checked_in_tree_matches_generator(tmp_path):
    generated_manifest = write_fixture_tree(tmp_path)
    generated = {p.relative_to(tmp_path): p.read_bytes()
                 for p in tmp_path.rglob("*") if p.is_file()}
    checked_in = {p.relative_to(CHECKED_IN): p.read_bytes()
                  for p in CHECKED_IN.rglob("*") if p.is_file()}
    assert generated == checked_in, (
        "fixtures/miranda drifted; regenerate with "
        "python3 -c \"from mirandum.fixture import write_fixture_tree; "
        "write_fixture_tree('fixtures/miranda')\"")
    assert generated_manifest.name == "tour.json"


def test_checked_in_manifest_validates_clean():
    report = validate_tour(load_tour_file(CHECKED_IN / "tour.json"))
    assert report.errors == ()
