"""Deterministic synthetic fixtures: a 16-part blade inspection set, a
matching pathing export, a four-document knowledge corpus, and scripted
backend rules that drive the demo turn offline.

The blade data is generated from a known decomposition (pathing + baseline
+ drift + seeded residual) so tests can check recovery against the planted
ground truth.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from millwright.blade import PRESSURE_POINTS, SUCTION_OFFSET, pair_key_for

N_PARTS = 16
RESIDUAL_SCALE = 0.00008


@dataclass(frozen=True)
class PlantedPair:
    pair_key: str
    p: float
    c: float
    b: float


def planted_decomposition() -> list[PlantedPair]:
    """Ground-truth components per pair, magnitudes matching shop reality:
    deviations order 1e-3..1e-2 in, drift tens of microinches per part."""
    pairs = []
    for idx, point in enumerate(PRESSURE_POINTS):
        pairs.append(PlantedPair(
            pair_key=pair_key_for(point),
            p=0.0008 + 0.00012 * idx,
            c=0.0010 + 0.00009 * (idx % 5),
            b=0.00006 + 0.000011 * idx,
        ))
    return pairs


def inspection_rows(seed: int = 2024) -> list[dict]:
    rng = np.random.default_rng(seed)
    rows = []
    for planted in planted_decomposition():
        point = int(planted.pair_key.split("+")[0])
        for n in range(1, N_PARTS + 1):
            s = planted.p + planted.c + planted.b * (n - 1) \
                + float(rng.normal(0.0, RESIDUAL_SCALE))
            split = float(rng.uniform(-0.0005, 0.0005))
            rows.append({"part_id": n, "point_id": point,
                         "deviation_in": round(s + split, 9)})
            rows.append({"part_id": n, "point_id": point + SUCTION_OFFSET,
                         "deviation_in": round(s - split, 9)})
    return rows


def write_inspection_csv(path: str | Path, seed: int = 2024) -> Path:
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=["part_id", "point_id", "deviation_in"])
        writer.writeheader()
        writer.writerows(inspection_rows(seed))
    return path


def write_pathing_csv(path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["pair_key", "r_k"])
        for planted in planted_decomposition():
            writer.writerow([planted.pair_key, round(2.0 * planted.p, 9)])
    return path


KG_DOCS = {
    "thermal_optimization": (
        "# Cutting temperature and surface roughness\n\n"
        "Dry turning of titanium alloys concentrates heat at the tool-chip interface "
        "because titanium has low thermal conductivity. Raising cutting speed beyond "
        "the stable window increases interface temperature sharply and degrades "
        "surface roughness. Moderate feed rates with shallow depth of cut keep the "
        "temperature inside the tolerable band. Response-surface screening points to "
        "a balanced operating point rather than maximum speed.\n"
    ),
    "tool_wear": (
        "# Tool wear mechanisms\n\n"
        "Flank wear grows with cutting speed and accelerates near the end of tool "
        "life. Crater wear follows adhesion and diffusion at high interface "
        "temperature. Rake angle changes shift the wear pattern between flank and "
        "nose. Wear monitoring across consecutive parts exposes systematic drift in "
        "effective tool geometry, which motivates conservative offsets once drift is "
        "detected.\n"
    ),
    "cutting_fluids": (
        "# Sustainable cutting fluids\n\n"
        "Aerosol mist delivery of vegetable-based fluid lowers interface temperature "
        "while keeping fluid consumption small. Flood coolant remains effective for "
        "deep cuts but complicates chip evacuation on turn-mill systems. Fluid "
        "selection interacts with cutting speed: higher speeds demand more aggressive "
        "cooling to protect surface finish.\n"
    ),
    "blade_deformation": (
        "# Machining deformation of thin blades\n\n"
        "A thin-walled blade behaves like a cantilever: stiffness is lowest at the "
        "tip and deflection concentrates where curvature changes quickly. Cutting "
        "deformation is the primary cause of profile error, and stress concentrates "
        "near the clamping heads. Multi-point flexible fixturing raises effective "
        "stiffness and suppresses vibration. Higher spindle speed slightly reduces "
        "cutting force but can increase tool wear, indirectly changing deformation.\n"
    ),
}


def write_kg_corpus(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in KG_DOCS.items():
        path = directory / f"{name}.md"
        path.write_text(text)
        paths.append(path)
    return paths


KG_SEED_TRIPLES = {
    "blade_deformation": [
        ("cutting deformation", "CAUSES", "blade profile error",
         "cutting deformation is the primary cause of blade profile error", ""),
        ("thin-walled blade", "BEHAVES_AS", "cantilever",
         "a thin-walled blade behaves like a cantilever and deformation "
         "concentrates at the tip", ""),
        ("stress", "CONCENTRATES_AT", "clamping heads",
         "stress concentrates near the clamping heads of the blade, a local "
         "deformation risk", ""),
        ("spindle speed", "REDUCES", "cutting force",
         "higher spindle speed slightly reduces cutting force on the blade", ""),
        ("spindle speed", "INCREASES", "tool wear",
         "higher speed can increase tool wear, indirectly changing blade "
         "deformation", ""),
        ("cutting force frequency", "THRESHOLD_FOR", "blade deflection",
         "blade deflection increases significantly when cutting force "
         "frequency exceeds 1500 hz", ""),
    ],
    "tool_wear": [
        ("flank wear", "GROWS_WITH", "cutting speed",
         "flank wear grows with cutting speed and accelerates above "
         "120 m per min in titanium turning", ""),
        ("crater wear", "FOLLOWS", "adhesion and diffusion",
         "crater wear follows adhesion and diffusion at high temperature", ""),
        ("wear drift", "MOTIVATES", "conservative offsets",
         "systematic drift motivates conservative offsets", ""),
    ],
    "thermal_optimization": [
        ("titanium", "HAS_PROPERTY", "low thermal conductivity",
         "heat concentrates at the tool-chip interface", ""),
        ("cutting speed", "INCREASES", "interface temperature",
         "raising speed beyond the stable window increases temperature sharply", ""),
        ("moderate feed", "PROTECTS", "surface roughness",
         "moderate feed with shallow depth of cut keeps temperature tolerable", ""),
    ],
    "cutting_fluids": [
        ("aerosol mist", "LOWERS", "interface temperature",
         "vegetable-based mist lowers temperature with small consumption", ""),
        ("flood coolant", "COMPLICATES", "chip evacuation",
         "flood coolant complicates chip evacuation on turn-mill systems", ""),
        ("higher speed", "DEMANDS", "aggressive cooling",
         "higher speeds demand more aggressive cooling", ""),
    ],
}


def write_seed_tsvs(directory: str | Path) -> list[Path]:
    """Pre-extracted triples per document, bypassing the extractor backend."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for doc, triples in KG_SEED_TRIPLES.items():
        lines = []
        for subject, relation, obj, description, figure in triples:
            lines.append ("\t".join([subject, relation, obj, f'"{description}"', figure]))
        path = directory / f"{doc}.tsv"
        path.write_text("".join(line + "\n" for line in lines))
        paths.append(path)
    return paths


QA_BANK = [
    {
        "id": "qa-001",
        "prompt": "explain why blade deflection increases at high cutting force "
                  "frequency, and above what frequency it becomes significant",
        "numeric_targets": [{"value": 1500.0, "tolerance": 50.0}],
        "required_terms": ["deflection", "frequency"],
    },
    {
        "id": "qa-002",
        "prompt": "explain why flank wear grows and above what cutting speed "
                  "it accelerates in titanium turning",
        "numeric_targets": [{"value": 120.0, "tolerance": 10.0}],
        "required_terms": ["flank wear", "cutting speed"],
    },
    {
        "id": "qa-003",
        "prompt": "explain the causes of blade profile error in thin-walled machining",
        "numeric_targets": [],
        "required_terms": ["cutting deformation", "cantilever"],
    },
    {
        "id": "qa-004",
        "prompt": "explain why stress concentrates near the clamping heads",
        "numeric_targets": [],
        "required_terms": ["stress", "clamping"],
    },
    {
        "id": "qa-005",
        "prompt": "explain best practice cutting fluid choices for titanium and why",
        "numeric_targets": [],
        "required_terms": ["aerosol mist", "temperature"],
    },
    {
        "id": "qa-006",
        "prompt": "explain why raising cutting speed degrades surface quality",
        "numeric_targets": [],
        "required_terms": ["temperature", "cutting speed"],
    },
]


def qa_items():
    from millwright.evalbench.qa import NumericTarget, QAItem

    items = []
    for raw in QA_BANK:
        items.append(QAItem(
            id=raw["id"], format="open", prompt=raw["prompt"],
            numeric_targets=[NumericTarget(t["value"], t["tolerance"])
                             for t in raw["numeric_targets"]],
            required_terms=list(raw["required_terms"])))
    return items


DEMO_ROUTER_RULES = [
    {
        "role": "router",
        "contains": "compensation",
        "response": json.dumps({
            "agent": "analysis",
            "instruction": "compute pair tool compensation for the requested parts",
            "input_refs": ["inspection"],
            "tool_categories": ["Compensation geometry"],
        }),
    },
    {
        "role": "router",
        "contains": "causes",
        "response": json.dumps({
            "agent": "kg",
            "instruction": "explain causes of blade deflection",
            "input_refs": [],
            "tool_categories": ["Knowledge retrieval"],
        }),
    },
]


def write_demo_rules(path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(DEMO_ROUTER_RULES, indent=2))
    return path


def write_demo_workspace(directory: str | Path) -> dict[str, Path]:
    """Materialize every demo artifact under one directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    layout = {
        "inspection": write_inspection_csv(directory / "Inspection_Aggregated.csv"),
        "pathing": write_pathing_csv(directory / "Pathing_Field.csv"),
        "rules": write_demo_rules(directory / "scripted_rules.json"),
    }
    layout["corpus"] = write_kg_corpus(directory / "corpus")[0].parent
    layout["seed_tsvs"] = write_seed_tsvs(directory / "seed_triples")[0].parent
    return layout
