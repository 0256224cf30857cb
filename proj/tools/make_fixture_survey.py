#!/usr/bin/env python3
"""Generate the synthetic expert survey and companion fixture files.

The published study only reports aggregates, so the panel here is synthetic:
15 experts whose pooled answers reproduce the published capacity means
(plain and confidence weighted), the grid-scenario table, and a priori
capacity values close to the published a posteriori estimates.

Usage: make_fixture_survey.py [output_dir]   (default: fixtures/)
"""

import itertools
import json
import pathlib
import sys

import numpy as np

SEED = 20350101
EXPERTS = 15

# id, label, unweighted GW, weighted GW, mean confidence %, a posteriori GW
CAPACITY = [
    ("LargeScaleNuclear", "Large-Scale Nuclear", 4.7, 5.0, 85.2, 6.5),
    ("Hydro", "Hydro", 2.8, 2.8, 84.7, 3.2),
    ("Import", "Import/Export", 5.9, 5.8, 72.0, None),
    ("SmallScaleNuclear", "Small-Scale Nuclear", 0.3, 0.2, 67.0, 0.3),
    ("Fossil", "Fossil", 0.6, 0.5, 66.7, 0.6),
    ("Wind", "Wind", 19.1, 19.0, 66.3, 21.4),
    ("Solar", "Solar", 5.8, 5.9, 65.8, 6.9),
    ("Battery", "Battery", 1.2, 1.1, 61.3, 1.0),
    ("PumpedHydro", "Pumped Hydro", 0.6, 0.6, 60.0, 0.5),
    ("DSR", "DSR", 4.9, 4.7, 59.0, 5.4),
    ("Gas", "Gas", 1.6, 1.6, 54.7, 1.9),
    ("Bio", "Bio", 2.6, 2.6, 54.0, 3.0),
    ("Home", "Home-gen & Batteries", 0.9, 0.8, 54.0, None),
    ("P2X", "P2X-X2P", 0.7, 0.6, 49.3, 0.7),
]

FACTORS = [
    ("PolicyIncentives", "Policy and incentives"),
    ("ElectricityPrice", "Electricity price"),
    ("TechDevelopment", "Technology development"),
    ("NeededInvestments", "Needed investments"),
    ("Geopolitics", "Geopolitical situation"),
    ("SolarIrradiance", "Solar irradiance"),
    ("LandResources", "Land and water resources"),
    ("ElectricityDemand", "Electricity demand"),
]
UNMODELED_FACTOR = "SystemManagementEvolution"

# Top three factors per component, most mentioned first. Bulk and balancing
# components draw on disjoint factor sets.
PARENTS = {
    "LargeScaleNuclear": ["PolicyIncentives", "Geopolitics", "NeededInvestments"],
    "Hydro": ["LandResources", "PolicyIncentives", "NeededInvestments"],
    "SmallScaleNuclear": ["PolicyIncentives", "NeededInvestments", "LandResources"],
    "Fossil": ["Geopolitics", "PolicyIncentives", "LandResources"],
    "Gas": ["Geopolitics", "NeededInvestments", "PolicyIncentives"],
    "Bio": ["LandResources", "PolicyIncentives", "Geopolitics"],
    "Wind": ["PolicyIncentives", "LandResources", "ElectricityPrice"],
    "Solar": ["SolarIrradiance", "ElectricityPrice", "PolicyIncentives"],
    "Battery": ["TechDevelopment", "ElectricityPrice", "ElectricityDemand"],
    "PumpedHydro": ["ElectricityPrice", "ElectricityDemand", "TechDevelopment"],
    "DSR": ["ElectricityPrice", "ElectricityDemand", "TechDevelopment"],
    "P2X": ["TechDevelopment", "ElectricityPrice", "ElectricityDemand"],
}
MENTIONS = [12, 9, 7]
NETWORK_COMPONENTS = list(PARENTS)

BULK = ["LargeScaleNuclear", "SmallScaleNuclear", "Fossil", "Gas", "Bio", "Hydro"]
BALANCE = ["Battery", "PumpedHydro", "DSR", "P2X"]
P_BULK_HIGH = 0.748
P_BALANCE_HIGH = 0.699

# Rows: (Bulk <13, Balance <5), (<13, >=5), (>=13, <5), (>=13, >=5).
GRID_TABLE = [
    [22.9, 16.5, 29.4, 31.2],
    [24.9, 20.8, 39.5, 14.8],
    [31.0, 26.2, 30.3, 12.5],
    [53.2, 11.9, 26.7, 8.2],
]
# Storage use (Battery, P2X, PumpedHydro, Direct) per (Wind, Solar) combination.
STORAGE_TABLE = [
    [15.0, 5.0, 20.0, 60.0],
    [30.0, 5.0, 15.0, 50.0],
    [25.0, 15.0, 25.0, 35.0],
    [35.0, 15.0, 20.0, 30.0],
]

COSTS = {
    "DSR": 800, "Gas": 867, "Battery": 1270, "Hydro": 3421, "Bio": 4998,
    "PumpedHydro": 2202, "Fossil": 2240, "Wind": 2098, "Solar": 1448,
    "LargeScaleNuclear": 7777, "P2X": 9000, "SmallScaleNuclear": 8349,
}

rng = np.random.default_rng(SEED)


def r4(x):
    return float(round(float(x), 4))


def weighted_zero_noise(weights, scale):
    """Noise vector with sum(weights * noise) == 0."""
    noise = rng.normal(0.0, scale, len(weights))
    w = np.asarray(weights, dtype=float)
    return noise - w * (w @ noise) / (w @ w)


def pooled_answers(target, weights, scale, lo=0.0, hi=100.0):
    """Per-expert answers whose weights-pooled mean is exactly `target`."""
    w = np.asarray(weights, dtype=float) / np.sum(weights)
    room = min(target - lo, hi - target)
    for _ in range(1000):
        values = target + weighted_zero_noise(w, min(scale, room / 2.5 + 1e-12))
        if np.all(values >= lo) and np.all(values <= hi):
            return values
    return np.full(len(w), target)


def split(values, weights):
    w = np.asarray(weights, dtype=float) / np.sum(weights)
    mean = float(w @ values)
    high = values >= mean - 1e-12 * max(1.0, abs(mean))
    lo = float(w[~high] @ values[~high] / w[~high].sum()) if (~high).any() else None
    hi = float(w[high] @ values[high] / w[high].sum()) if high.any() else None
    return mean, lo, hi


def capacity_answers(unweighted, weighted, confidence, posterior):
    """Estimates with exact plain/weighted means whose sub-means bracket the
    target a posteriori value."""
    for attempt in range(20000):
        spread = 0.25 + 0.05 * (attempt % 20)
        conf = np.clip(rng.normal(confidence, 14.0, EXPERTS), 15.0, 99.0)
        conf += confidence - conf.mean()
        if conf.min() < 5.0 or conf.max() > 100.0:
            continue
        conf = np.round(conf, 2)
        conf[-1] = round(confidence * EXPERTS - conf[:-1].sum(), 2)
        values = np.sort(unweighted * np.exp(rng.normal(0.0, spread, EXPERTS)))
        order = np.argsort(conf)
        if weighted < unweighted:
            order = order[::-1]
        est = np.empty(EXPERTS)
        est[order] = values
        centered = conf - conf.mean()
        a = unweighted - est.mean()
        b = (weighted * conf.sum() - conf @ est - a * conf.sum()) / (centered @ centered)
        est = np.round(est + a + b * centered, 4)
        if est.min() < 0.0:
            continue
        mean, lo, hi = split(est, conf)
        if lo is None or hi is None:
            continue
        if posterior is not None:
            p_high = (posterior - lo) / (hi - lo)
            if not 0.08 <= p_high <= 0.92:
                continue
        return est, conf
    raise RuntimeError(f"no capacity panel for {unweighted}/{weighted}")


def solve_scale(base, target):
    """k such that 1 - prod(1 - k*base/2) == target (uniform binary causes)."""
    lo, hi = 0.0, 1.0 / max(base)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 1.0 - np.prod(1.0 - mid * np.asarray(base) / 2.0) < target:
            lo = mid
        else:
            hi = mid
    return lo


def bulk_expectation(members, thetas, l2_params):
    """E[prod_j (1 - theta_j X_j)] over uniform L1 factors."""
    factors = sorted({f for m in members for f in l2_params[m]["parents"]})
    total = 0.0
    for bits in itertools.product([0, 1], repeat=len(factors)):
        state = dict(zip(factors, bits))
        prod = 1.0
        for member, theta in zip(members, thetas):
            p = l2_params[member]
            absent = (1.0 - p["leak"]) * np.prod(
                [1.0 - t * state[f] for f, t in zip(p["parents"], p["thetas"])])
            prod *= 1.0 - theta * (1.0 - absent)
        total += prod
    return total / 2 ** len(factors)


def total_params(members, base, target, l2_params):
    lo, hi = 0.0, 1.0 / max(base)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if bulk_expectation(members, mid * np.asarray(base), l2_params) > 0.5:
            lo = mid
        else:
            hi = mid
    thetas = lo * np.asarray(base)
    e = bulk_expectation(members, thetas, l2_params)
    return thetas, 1.0 - (1.0 - target) / e


def table_answers(rows, weights, scale):
    """Per-expert 4-row tables whose weighted mean equals `rows`."""
    w = np.asarray(weights, dtype=float) / np.sum(weights)
    out = np.zeros((EXPERTS, len(rows), 4))
    for r, row in enumerate(rows):
        row = np.asarray(row)
        for _ in range(1000):
            noise = np.stack([weighted_zero_noise(w, scale) for _ in range(4)], axis=1)
            noise -= noise.mean(axis=1, keepdims=True)
            cand = row + noise * min(1.0, row.min() / (scale * 3.0))
            if cand.min() >= 0.0:
                break
        else:
            cand = np.tile(row, (EXPERTS, 1))
        out[:, r, :] = cand
    return out


def main(out_dir):
    out_dir.mkdir(parents=True, exist_ok=True)
    experts = [{"id": f"E{i + 1:02d}"} for i in range(EXPERTS)]
    conf_default = np.round(rng.uniform(40.0, 90.0, EXPERTS), 1)
    for e, c in zip(experts, conf_default):
        e["confidence_default"] = float(c)
        for key in ("qs1a", "qs1b", "qs1c", "qs3a", "qs3b"):
            e[key] = {}

    # Question Set 1a.
    submeans = {}
    for cid, _, unweighted, weighted, confidence, posterior in CAPACITY:
        est, conf = capacity_answers(unweighted, weighted, confidence, posterior)
        for e, v, c in zip(experts, est, conf):
            e["qs1a"][cid] = {"gw": r4(v), "confidence": float(c)}
        submeans[cid] = split(est, conf)

    # Question Set 1b: deal mentions so each expert names at most three.
    for k, cid in enumerate(NETWORK_COMPONENTS):
        named = [[] for _ in range(EXPERTS)]
        for rank, factor in enumerate(PARENTS[cid]):
            start = (k * 4 + rank * 5) % EXPERTS
            for j in range(MENTIONS[rank]):
                named[(start + j) % EXPERTS].append(factor)
        extra = UNMODELED_FACTOR if cid == "Wind" else None
        if extra:
            for i in range(EXPERTS):
                if len(named[i]) < 3:
                    named[i].append(extra)
        for e, names in zip(experts, named):
            e["qs1b"][cid] = names

    # Question Set 1c: pooled effects reproduce the solved Noisy-OR parameters.
    l2_params = {}
    for cid in NETWORK_COMPONENTS:
        row = next(c for c in CAPACITY if c[0] == cid)
        mean, lo, hi = submeans[cid]
        p_high = (row[5] - lo) / (hi - lo)
        base = np.array([0.5, 0.35, 0.2])
        thetas = solve_scale(base, 0.65 * p_high) * base
        leak = 1.0 - (1.0 - p_high) / np.prod(1.0 - thetas / 2.0)
        l2_params[cid] = {"parents": PARENTS[cid], "thetas": thetas, "leak": leak}
        answers = {f: pooled_answers(100 * t, conf_default, 8.0)
                   for f, t in zip(PARENTS[cid], thetas)}
        answers["Leak"] = pooled_answers(100 * leak, conf_default, 5.0)
        for i, e in enumerate(experts):
            e["qs1c"][cid] = {f: r4(v[i]) for f, v in answers.items()}
            if UNMODELED_FACTOR in e["qs1b"][cid]:
                e["qs1c"][cid][UNMODELED_FACTOR] = r4(rng.uniform(5.0, 30.0))

    # Question Sets 3a/3b.
    for key, members, target, base in (
            ("qs3b", BULK, P_BULK_HIGH, [0.30, 0.25, 0.20, 0.25, 0.30, 0.25]),
            ("qs3a", BALANCE, P_BALANCE_HIGH, [0.30, 0.25, 0.35, 0.20])):
        thetas, leak = total_params(members, base, target, l2_params)
        answers = {m: pooled_answers(100 * t, conf_default, 8.0)
                   for m, t in zip(members, thetas)}
        answers["Leak"] = pooled_answers(100 * leak, conf_default, 6.0)
        for i, e in enumerate(experts):
            e[key] = {m: r4(v[i]) for m, v in answers.items()}

    # Question Sets 2 and 4.
    for key, rows in (("qs2", STORAGE_TABLE), ("qs4", GRID_TABLE)):
        conf = np.round(rng.uniform(35.0, 90.0, EXPERTS), 1)
        tables = table_answers(rows, conf, 4.0)
        for i, e in enumerate(experts):
            e[key] = {"rows": [[r4(v) for v in tables[i, r]] for r in range(4)],
                      "confidence": float(conf[i])}

    survey = {"experts": experts}
    labels = {c[0]: c[1] for c in CAPACITY}
    layout = {
        "name": "Finnish power grid 2035",
        "version": "1",
        "weighting": "confidence_linear",
        "factors": [{"id": f, "label": label} for f, label in FACTORS],
        "components": [{"id": c, "label": labels[c]} for c in NETWORK_COMPONENTS],
        "survey_only": ["Import", "Home"],
        "import_component": "Import",
        "parents_per_component": 3,
        "bulk": {"id": "Bulk", "label": "Controllable bulk generation", "threshold": 13,
                 "members": BULK, "question": "qs3b"},
        "balance": {"id": "Balance", "label": "Balancing power", "threshold": 5,
                    "members": BALANCE, "question": "qs3a"},
        "grid": {"id": "GridManagement", "states": ["B1", "B2", "B3", "B4"]},
        "storage": {"id": "StorageUse", "parents": ["Wind", "Solar"],
                    "states": ["Battery", "P2X", "PumpedHydro", "Direct"]},
        "max_parents": 3,
    }

    buckets = {c: "bulk" for c in BULK}
    buckets.update({c: "balancing" for c in BALANCE})
    buckets.update({"Wind": "variable", "Solar": "variable", "Import": "import",
                    "Home": "balancing"})
    without_home = dict(buckets, Home="other")
    rules = {"default": "with_home",
             "presets": {"with_home": buckets, "without_home": without_home}}

    profile = {}
    for cid in NETWORK_COMPONENTS:
        hour = {"Wind": 0.06, "Solar": 0.0}.get(cid, 0.9)
        season = 0.0 if cid in ("Battery", "PumpedHydro", "P2X") else hour
        if cid == "DSR":
            hour = season = 0.0
        profile[cid] = {"peak_hour": hour, "peak_season": season}
    availability = {"default": "published", "profiles": {"published": profile}}

    files = {"survey.json": survey, "layout.json": layout, "costs.json": COSTS,
             "rules.json": rules, "availability.json": availability}
    for name, doc in files.items():
        (out_dir / name).write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main(pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "fixtures"))
