"""Regenerates regions_dump.json from the region list and assignment table
text, independently of the C++ data file. Run by hand; output is committed."""
import json
import re
import sys

GROUPS = r"""
Anterior: Fp1, Fpz, Fp2, AF3, AF4, AF7, AF8, AFz.
Frontal (Left/Middle/Right): F7, F5, F3, F9 / F1, Fz, F2, FC1, FCz, FC2 / F4, F6, F8, F10.
Frontotemporal (Left/Right): FT7, FT9, FC5, FC3, FTT9h / FC4, FC6, FT8, FT10, FTT10h.
Central (Left/Middle/Right): T7, T9, C5, C3 / C1, Cz, C2 / C4, C6, T8, T10.
Centroparietal (Left/Middle/Right): TP7, TP9, CP5, CP3, TTP7h, TPP9h / CP1, CPz, CP2 / CP4, CP6, TP8, TP10, TPP8h, TPP10h.
Parietal (Left/Middle/Right): P7, P5, P3, P9 / P1, Pz, P2 / P4, P6, P8, P10.
Posterior (Left/Middle/Right): PO7, PO5, PO9, CB1 / PO3, POz, PO4, O1, Oz, O2, Iz / PO6, PO8, PO10, CB2.
"""

TASKS = r"""
Movement & Central L/M/R, Centroparietal L/R & Posterior Middle, Anterior
Motor imagery & Central L/M/R, Centroparietal L/R & Posterior Middle, Anterior
Visual P300 & Posterior Middle & Anterior, Posterior L/R
Working memory & Frontal L/M/R & Posterior Middle, Central L/R
Eyes open/closed & Anterior, Posterior L/M/R & Frontal L/M/R, Central L/M/R
Sleep staging & Fpz-Cz & Pz-Oz
"""

SIDE = {"L": "Left", "M": "Middle", "R": "Right"}


def parse_groups():
    groups = []
    for line in GROUPS.strip().splitlines():
        head, body = line.split(":", 1)
        body = body.strip().rstrip(".")
        m = re.match(r"(\w+)(?: \(([\w/]+)\))?", head)
        family, sides = m.group(1), m.group(2)
        parts = [p.strip() for p in body.split("/")]
        names = [family] if sides is None else [f"{family} {s}" for s in sides.split("/")]
        assert len(names) == len(parts), line
        for name, part in zip(names, parts):
            groups.append({"name": name, "family": family, "electrodes": [e.strip() for e in part.split(",")]})
    return groups


def expand(cell):
    out = []
    for item in (c.strip() for c in cell.split(",")):
        m = re.fullmatch(r"(\w+) ([LMR](?:/[LMR])*)", item)
        if m:
            out += [f"{m.group(1)} {SIDE[s]}" for s in m.group(2).split("/")]
        else:
            out.append(item)
    return out


def parse_tasks():
    tasks = []
    for line in TASKS.strip().splitlines():
        task, primary, control = (c.strip() for c in line.split("&"))
        tasks.append({"task": task, "primary": expand(primary), "control": expand(control)})
    return tasks


doc = {"version": 1, "groups": parse_groups(), "derivations": ["Fpz-Cz", "Pz-Oz"], "tasks": parse_tasks()}
assert len(doc["groups"]) == 18
assert sum(len(g["electrodes"]) for g in doc["groups"]) == 84
json.dump(doc, sys.stdout, indent=2, sort_keys=True, ensure_ascii=False)
sys.stdout.write("\n")
