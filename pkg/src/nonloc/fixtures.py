"""Demo input files, generated from the library so they double as regression anchors."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from . import dense
from .boxes import deterministic_box, mermin_box, pr_box, pr_with_spectator, svetlichny_box, tsirelson_box
from .certifier import smolin_protocol_doc
from .jsonio import dumps
from .scenario import RATIONAL, Behavior, Scenario, behavior_to_json
from .stabilizer import complete_graph

FIXTURE_DIR = Path(__file__).parent / "fixtures"


def signaling_box() -> Behavior:
    """Bob's outcome copies Alice's setting: normalized and nonnegative but signaling."""
    return Behavior.from_function(Scenario.uniform(2), lambda x, a: Fraction(a[1] == x[0], 2), RATIONAL)


def fixture_documents() -> dict[str, dict]:
    docs = {
        "pr_box.json": behavior_to_json(pr_box()),
        "deterministic_box.json": behavior_to_json(deterministic_box(Scenario.uniform(2), [(0, 1), (1, 1)])),
        "tsirelson_box.json": behavior_to_json(tsirelson_box()),
        "mermin_box.json": behavior_to_json(mermin_box()),
        "svetlichny_box.json": behavior_to_json(svetlichny_box()),
        "pr_spectator_box.json": behavior_to_json(pr_with_spectator(0)),
        "signaling_box.json": behavior_to_json(signaling_box()),
        "singlet_state.json": dense.state_to_json(dense.singlet()),
        "ghz3_state.json": dense.state_to_json(dense.ghz(3)),
        "chained2_measurement.json": dense.measurement_to_json(dense.chained_measurements(2)),
        "smolin_protocol.json": smolin_protocol_doc(),
    }
    for m in range(3, 7):
        docs[f"graph_k{m}.json"] = {"adjacency": complete_graph(m).astype(int).tolist()}
    return docs


def write_fixtures(out_dir=FIXTURE_DIR) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, doc in sorted(fixture_documents().items()):
        p = out / name
        p.write_text(dumps(doc))
        paths.append(p)
    return paths
