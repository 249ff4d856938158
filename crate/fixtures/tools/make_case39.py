"""Regenerate the bundled IEEE 39-bus case fixture.

Source data: the MATPOWER/PYPOWER `case39` (New England) network, with
machine constants (H, x'd) from the classical 10-machine dynamic data set
(100 MVA system base; H is converted to a 1000 MVA machine base).

Operating point: loads and generator dispatch are scaled uniformly so the
total load is 6097.1 MW, an AC power flow is solved with PYPOWER, and each
generator's internal EMF is formed as E' = V + j x'd I behind its terminal.
Load buses carry their solved terminal voltage.

Usage: python3 make_case39.py > ../case39.json   (requires `pip install pypower`)
"""

import json
import sys

import numpy as np
from pypower.api import case39, ppoption, runpf
from pypower.ext2int import ext2int
from pypower.makeYbus import makeYbus

TOTAL_LOAD_MW = 6097.1
MACHINE_BASE_MVA = 1000.0

# bus: (H on 100 MVA base [s], x'd on 100 MVA base [pu])
MACHINES = {
    30: (42.0, 0.0310),
    31: (30.3, 0.0697),
    32: (35.8, 0.0531),
    33: (28.6, 0.0436),
    34: (26.0, 0.1320),
    35: (34.8, 0.0500),
    36: (26.4, 0.0490),
    37: (24.3, 0.0570),
    38: (34.5, 0.0570),
    39: (500.0, 0.0060),
}


def main():
    ppc = case39()
    base_mva = ppc["baseMVA"]
    scale = TOTAL_LOAD_MW / ppc["bus"][:, 2].sum()
    ppc["bus"][:, 2] *= scale
    ppc["bus"][:, 3] *= scale
    ppc["gen"][:, 1] *= scale

    opt = ppoption(VERBOSE=0, OUT_ALL=0)
    res, ok = runpf(ppc, opt)
    if not ok:
        sys.exit("power flow did not converge")

    bus = res["bus"]
    gen = res["gen"]
    v = bus[:, 7] * np.exp(1j * np.deg2rad(bus[:, 8]))
    idx = {int(b): k for k, b in enumerate(bus[:, 0])}

    emf = {}
    for row in gen:
        b = int(row[0])
        s = (row[1] + 1j * row[2]) / base_mva
        vt = v[idx[b]]
        current = np.conj(s / vt)
        emf[b] = vt + 1j * MACHINES[b][1] * current

    buses = []
    for k, b in enumerate(bus[:, 0]):
        b = int(b)
        if b in emf:
            e = emf[b]
            kind, mag, ang = "generator", abs(e), float(np.angle(e))
        else:
            kind, mag, ang = "load", float(bus[k, 7]), float(np.deg2rad(bus[k, 8]))
        buses.append(
            {
                "id": b,
                "kind": kind,
                "v_mag_pu": round(float(mag), 8),
                "v_ang_rad": round(float(ang), 8),
                "p_load_mw": round(float(bus[k, 2]), 6),
            }
        )

    internal = ext2int(res)
    ybus, _, _ = makeYbus(base_mva, internal["bus"], internal["branch"])
    ybus = ybus.toarray()
    branches = []
    seen = set()
    for row in res["branch"]:
        f, t = int(row[0]), int(row[1])
        key = (min(f, t), max(f, t))
        if key in seen:
            continue
        seen.add(key)
        b_ij = ybus[idx[f], idx[t]].imag
        branches.append({"from": f, "to": t, "b_pu": round(float(b_ij), 8)})

    generators = []
    for b in sorted(MACHINES):
        h100, _ = MACHINES[b]
        generators.append(
            {
                "bus": b,
                "h_s": round(h100 * base_mva / MACHINE_BASE_MVA, 6),
                "rating_mva": MACHINE_BASE_MVA,
                "tech": "synchronous",
            }
        )

    doc = {
        "schema_version": 1,
        "name": "ieee39",
        "nominal_freq_hz": 60.0,
        "buses": buses,
        "branches": branches,
        "generators": generators,
    }
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
