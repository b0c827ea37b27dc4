"""Sequence files: a flat CSV of the interleaved prefix plus a JSON of the base stages.

The JSON holds everything needed to rebuild the :class:`RigiditySequence`
without scanning again; the CSV is the human-facing table with a certified
distance ball for each approximated index.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .angle import from_decimal_string, to_decimal_string
from .family import AlphaFamily
from .output import atomic_write, csv_text, dumps
from .search import SearchWindow
from .sequence import BaseSequence, RigiditySequence, Stage, interleave, term_distance


def sequence_rows(seq: RigiditySequence, family: AlphaFamily, num_indices: int, digits: int = 20):
    header = ["n", "m_n", "source_i", "position", "stage"] + [f"dist_{i}" for i in range(1, num_indices + 1)]
    rows = []
    for n, t in enumerate(seq.terms, start=1):
        dists = [to_decimal_string(term_distance(family, t.m, i), digits) for i in range(1, num_indices + 1)]
        rows.append([n, t.m, t.source, t.position, t.stage, *dists])
    return header, rows


def bases_document(seq: RigiditySequence, key: dict) -> dict:
    return {
        "key": key,
        "length": len(seq),
        "bases": [
            {
                "excluded": b.excluded,
                "shift": b.shift(),
                "stages": [
                    {
                        "j": st.j,
                        "eps": str(st.eps),
                        "indices": st.indices,
                        "window": [st.window.lo, st.window.hi],
                        "terms": st.terms,
                        "divisor_witnesses": {str(r): w for r, w in sorted(st.divisor_witnesses.items())},
                        "K": st.K,
                        "v": None if st.v is None else to_decimal_string(st.v),
                        "v_status": st.v_status,
                    }
                    for st in b.stages
                ],
            }
            for b in seq.bases
        ],
    }


def bases_from_document(doc: dict) -> list[BaseSequence]:
    out = []
    for b in doc["bases"]:
        base = BaseSequence(int(b["excluded"]))
        for st in b["stages"]:
            base.stages.append(
                Stage(
                    j=int(st["j"]),
                    eps=Fraction(st["eps"]),
                    indices=[int(i) for i in st["indices"]],
                    window=SearchWindow(*st["window"]),
                    terms=[int(m) for m in st["terms"]],
                    divisor_witnesses={int(r): int(w) for r, w in st["divisor_witnesses"].items()},
                    K=int(st["K"]),
                    v=None if st["v"] is None else from_decimal_string(st["v"]),
                    v_status=st["v_status"],
                )
            )
        out.append(base)
    return out


def write_sequence(directory: Path, seq: RigiditySequence, family: AlphaFamily, key: dict) -> None:
    num_indices = max((len(st.indices) for b in seq.bases for st in b.stages), default=0) + 1
    header, rows = sequence_rows(seq, family, num_indices)
    atomic_write(directory / "sequence.csv", csv_text(header, rows))
    atomic_write(directory / "bases.json", dumps(bases_document(seq, key)))


def load_sequence(directory: Path, key: dict | None = None) -> RigiditySequence | None:
    """The stored sequence, or ``None`` if absent or built from a different configuration."""
    path = Path(directory) / "bases.json"
    if not path.exists():
        return None
    doc = json.loads(path.read_text(encoding="utf-8"))
    if key is not None and doc.get("key") != json.loads(dumps(key)):
        return None
    bases = bases_from_document(doc)
    if not bases or doc["length"] == 0:
        return RigiditySequence([], bases)
    return interleave(bases, int(doc["length"]))
