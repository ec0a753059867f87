"""Write the bundled 12-node / 19-edge corridor scenario.

Nodes sit on a jittered 4x3 grid (units of 100 m) with two diagonals. The
complaint hotspot starts on the edges around node 1 and moves to node 4 at
minute 360; the event also quiets the rest of the network, so every edge's
distribution moves.

    python scripts/make_flatbush12.py [out.json]
"""

import json
import math
import sys
from pathlib import Path

COORDS = {
    1: (0.0, 10.2), 2: (5.1, 10.0), 3: (10.3, 10.1), 12: (15.2, 9.8),
    7: (0.2, 5.0), 4: (5.0, 5.2), 8: (10.1, 4.9), 11: (15.0, 5.1),
    5: (0.0, 0.0), 6: (5.2, 0.1), 9: (10.0, 0.2), 10: (15.1, 0.0),
}
EDGES = [
    (1, 2), (2, 3), (3, 12), (4, 7), (4, 8), (8, 11), (5, 6), (6, 9), (9, 10),
    (1, 7), (2, 4), (3, 8), (11, 12), (5, 7), (4, 6), (8, 9), (10, 11),
    (9, 11), (3, 11),
]
MTT_PER_UNIT = 0.7  # minutes per 100 m at the speed limit
BASE_PER_UNIT = 0.95  # typical minutes per 100 m

HOT_BEFORE, HOT_AFTER = 1, 4
W_HOT = 20.0  # edges incident to the hotspot before the event
W_EVENT = 10.0  # edges incident to the hotspot during the event
W_BACKGROUND = 6.0  # other edges before the event
W_COLD_HOT = 3.0  # edges around the future hotspot before the event
W_QUIET = 0.5  # edges away from the hotspot during the event


def length(i, j):
    (xi, yi), (xj, yj) = COORDS[i], COORDS[j]
    return round(math.hypot(xi - xj, yi - yj), 3)


def key(i, j):
    a, b = sorted((i, j))
    return f"{a}-{b}"


def build():
    before, after = {}, {}
    for (i, j) in EDGES:
        k = key(i, j)
        if HOT_BEFORE in (i, j):
            before[k] = W_HOT
        elif HOT_AFTER in (i, j):
            before[k] = W_COLD_HOT
        else:
            before[k] = W_BACKGROUND
        after[k] = W_EVENT if HOT_AFTER in (i, j) else W_QUIET
    return {
        "name": "flatbush12",
        "horizon": 700,
        "tau": 8,
        "start_node": 5,
        "nodes": [{"id": v, "x": x, "y": y} for v, (x, y) in sorted(COORDS.items())],
        "edges": [
            {"from": i, "to": j, "length": length(i, j), "mtt": round(MTT_PER_UNIT * length(i, j), 3)}
            for (i, j) in EDGES
        ],
        "traffic": {
            "base": {key(i, j): round(BASE_PER_UNIT * length(i, j), 3) for (i, j) in EDGES},
            "diurnal_amplitude": 0.2,
            "diurnal_period": 1440,
            "noise_std": 0.05,
        },
        "complaints": {
            "weights": before,
            "shifts": [{"t": 360, "weights": after}],
            "noise_mean": 0.5,
            "noise_std": 0.2,
            "cap": 30,
        },
        "hotspots": [{"t": 0, "node": HOT_BEFORE}, {"t": 360, "node": HOT_AFTER}],
    }


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "src/tampa/data/flatbush12.json"
    out.write_text(json.dumps(build(), indent=2) + "\n")
    print(f"wrote {out}")
