"""Benchmark population generator: solution-seeded utilities crossed with
communication styles, feedback styles, and personas.

Seeds come from conditional Pareto frontiers (one school pinned to one slot,
trading peak load against average schedule change). For each seed we search a
threshold grid from conservative values upward, sampling weight triples
uniformly on the simplex, and accept the first combination under which the
seed's component profile is the unique utility-maximizing profile. The whole
run is a pure function of (config, school data).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import (
    SchoolRecord,
    Schedule,
    compute_features,
    data_fingerprint,
    feature_table,
)
from .fmt import decimal_str
from .utility import BINARY, EARLIER, FEEDBACK_STYLES, LATER, RICH, UtilitySpec

PERSONAS = ("principal", "parent", "administrator", "transportation coordinator")
COMM_STYLES = ("vague", "precise")
PROMPT_VARIANTS = ("default", "optimization_aware", "no_context")

DATASET_SCHEMA_VERSION = 1


def _grid(start: str, stop: str, step: str) -> tuple[Fraction, ...]:
    lo, hi, inc = Fraction(start), Fraction(stop), Fraction(step)
    values = []
    v = lo
    while v <= hi:
        values.append(v)
        v += inc
    return tuple(values)


#: Default threshold grids: loads span the instance's feasible peak range in
#: hundreds of students; deviations start at the global minimum average change.
DEFAULT_L_GRID = _grid("19.5", "29", "0.5")
DEFAULT_R_GRID = _grid("8.5", "25", "0.5")


@dataclass(frozen=True)
class GenerationConfig:
    rng_seed: int = 7
    L_grid: tuple[Fraction, ...] = DEFAULT_L_GRID
    R_grid: tuple[Fraction, ...] = DEFAULT_R_GRID
    samples_per_cell: int = 10_000
    max_agents: int | None = None  # caps accepted utilities (4 configs each)

    def validate(self) -> None:
        for grid in (self.L_grid, self.R_grid):
            if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError("threshold grids must be non-empty and strictly ascending")
        if self.samples_per_cell < 1:
            raise ValueError("samples_per_cell must be >= 1")


@dataclass(frozen=True)
class DecisionAgentConfig:
    id: str
    utility: UtilitySpec
    persona: str
    comm_style: str
    feedback_style: str
    prompt_variant: str = "default"

    def validate(self) -> None:
        if self.persona not in PERSONAS:
            raise ValueError(f"unknown persona {self.persona!r}")
        if self.comm_style not in COMM_STYLES:
            raise ValueError(f"unknown comm_style {self.comm_style!r}")
        if self.feedback_style not in FEEDBACK_STYLES:
            raise ValueError(f"unknown feedback_style {self.feedback_style!r}")
        if self.prompt_variant not in PROMPT_VARIANTS:
            raise ValueError(f"unknown prompt_variant {self.prompt_variant!r}")
        self.utility.validate()

    def to_json(self) -> str:
        doc = {
            "schema_version": DATASET_SCHEMA_VERSION,
            "id": self.id,
            "utility_id": self.utility.id,
            "persona": self.persona,
            "comm_style": self.comm_style,
            "feedback_style": self.feedback_style,
            "prompt_variant": self.prompt_variant,
            "utility": json.loads(self.utility.to_json()),
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "DecisionAgentConfig":
        doc = json.loads(text)
        cfg = cls(
            id=doc["id"],
            utility=UtilitySpec.from_json(json.dumps(doc["utility"])),
            persona=doc["persona"],
            comm_style=doc["comm_style"],
            feedback_style=doc["feedback_style"],
            prompt_variant=doc.get("prompt_variant", "default"),
        )
        cfg.validate()
        return cfg


def conditional_pareto_frontier(
    school_id: int, slot_index: int, data: Sequence[SchoolRecord]
) -> list[tuple[Schedule, int, Fraction]]:
    """Non-dominated (peak load, avg deviation) points with one school pinned.

    Returns one representative schedule per point (lexicographically smallest),
    sorted by peak load ascending.
    """
    table = feature_table(data)
    mask = table.slots[:, school_id - 1] == slot_index - 1
    peaks = table.peaks[mask]
    devs = table.dev_sums[mask]
    rows = np.flatnonzero(mask)
    order = np.lexsort((devs, peaks))
    frontier: list[tuple[Schedule, int, Fraction]] = []
    seen_pairs: set[tuple[int, int]] = set()
    best_dev = None
    for i in order:
        p, d = int(peaks[i]), int(devs[i])
        if best_dev is not None and d >= best_dev:
            continue
        if (p, d) in seen_pairs:
            continue
        seen_pairs.add((p, d))
        best_dev = d
        first = np.flatnonzero((table.peaks[rows] == p) & (table.dev_sums[rows] == d))[0]
        frontier.append((table.schedule_at(int(rows[first])), p, Fraction(d, table.n_schools)))
    return frontier


class _ProfileBins:
    """Achievable (own-slot, load-flag, dev-flag) combinations per threshold cell.

    Load/dev flags depend only on the thresholds, so they are computed once per
    grid value and reused across schools and seeds.
    """

    def __init__(self, cfg: GenerationConfig, data: Sequence[SchoolRecord]):
        table = feature_table(data)
        self._table = table
        self._fl = {
            L: (table.peaks * L.denominator <= L.numerator * 100) for L in cfg.L_grid
        }
        self._fd = {
            R: (table.dev_sums * R.denominator <= R.numerator * table.n_schools)
            for R in cfg.R_grid
        }
        self._cache: dict[tuple[int, Fraction, Fraction], tuple[tuple[int, int, int], ...]] = {}

    def achievable(
        self, school_id: int, L: Fraction, R: Fraction
    ) -> tuple[tuple[int, int, int], ...]:
        key = (school_id, L, R)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        slot_col = self._table.slots[:, school_id - 1].astype(np.int64)
        bins = np.bincount(slot_col * 4 + self._fl[L] * 2 + self._fd[R], minlength=12)
        combos = tuple(
            (b // 4, (b % 4) // 2, b % 2) for b in np.flatnonzero(bins > 0)
        )
        self._cache[key] = combos
        return combos


def _sample_weight_grid(rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform simplex samples rounded to thousandths that sum to exactly 1000."""
    cuts = np.sort(rng.random((count, 2)), axis=1)
    w = np.stack([cuts[:, 0], cuts[:, 1] - cuts[:, 0], 1.0 - cuts[:, 1]], axis=1)
    k = np.rint(w[:, :2] * 1000).astype(np.int64)
    k3 = 1000 - k.sum(axis=1)
    # rounding the first two up can leave k3 == -1; take it from the larger one
    short = k3 < 0
    k[short, np.argmax(k[short], axis=1)] += k3[short]
    k3[short] = 0
    return np.column_stack([k, k3])


def synthesize_utility(
    seed_schedule: Schedule,
    school_id: int,
    rng: np.random.Generator,
    cfg: GenerationConfig,
    data: Sequence[SchoolRecord],
    bins: _ProfileBins,
    uid: str,
) -> UtilitySpec | None:
    """Search for thresholds and weights making the seed uniquely optimal.

    Cells are visited in ascending threshold order to bias toward conservative
    utilities; within a cell up to ``samples_per_cell`` weight triples are
    tried. Returns None when every cell fails (a normal, counted outcome).
    """
    direction = EARLIER if rng.integers(2) == 0 else LATER
    table = feature_table(data)
    row_slot = seed_schedule.slot_of(school_id) - 1
    features = compute_features(seed_schedule, data)
    seed_peak, seed_dev = features.peak_load, features.deviation_sum

    def ft2_of(slot0: int) -> int:
        return slot0 if direction == LATER else 2 - slot0

    for L in cfg.L_grid:
        for R in cfg.R_grid:
            combos = bins.achievable(school_id, L, R)
            profiles = np.array(
                [[ft2_of(s0), 2 * fl, 2 * fd] for s0, fl, fd in combos], dtype=np.int64
            )
            profiles = np.unique(profiles, axis=0)
            seed_fl = 1 if seed_peak * L.denominator <= L.numerator * 100 else 0
            seed_fd = 1 if seed_dev * R.denominator <= R.numerator * table.n_schools else 0
            seed_p2 = np.array([ft2_of(row_slot), 2 * seed_fl, 2 * seed_fd], dtype=np.int64)
            # a seed profile weakly dominated by another achievable profile can
            # never be uniquely optimal, whatever the weights: skip the cell
            others = profiles[(profiles != seed_p2).any(axis=1)]
            if others.size and bool((others >= seed_p2).all(axis=1).any()):
                continue
            remaining = cfg.samples_per_cell
            while remaining > 0:
                block = min(1000, remaining)
                remaining -= block
                weights = _sample_weight_grid(rng, block)
                scores = weights @ profiles.T
                row_best = scores.max(axis=1)
                tie_counts = (scores == row_best[:, None]).sum(axis=1)
                seed_scores = weights @ seed_p2
                ok = (tie_counts == 1) & (seed_scores == row_best) & (row_best > 0)
                hits = np.flatnonzero(ok)
                if hits.size:
                    k1, k2, k3 = (int(v) for v in weights[hits[0]])
                    spec = UtilitySpec(
                        id=uid,
                        school_id=school_id,
                        direction=direction,
                        w_time=Fraction(k1, 1000),
                        w_load=Fraction(k2, 1000),
                        w_dev=Fraction(k3, 1000),
                        load_threshold=L,
                        dev_threshold=R,
                    )
                    spec.validate()
                    return spec
    return None


def generate_dataset(
    cfg: GenerationConfig, data: Sequence[SchoolRecord]
) -> tuple[list[DecisionAgentConfig], dict]:
    """Produce the full decision-agent population plus a reproducibility manifest."""
    cfg.validate()
    table = feature_table(data)
    bins = _ProfileBins(cfg, data)
    specs: list[UtilitySpec] = []
    seed_meta: dict[str, dict] = {}
    seen_keys: set[tuple] = set()
    counts = {"seeds": 0, "accepted": 0, "rejected_no_cell": 0, "rejected_duplicate": 0}
    cell_failures: dict[str, int] = {}

    def at_cap() -> bool:
        return cfg.max_agents is not None and len(specs) >= cfg.max_agents

    for rec in data:
        if at_cap():
            break
        for slot in range(1, 4):
            if at_cap():
                break
            frontier = conditional_pareto_frontier(rec.id, slot, data)
            for idx, (seed_schedule, peak, avg_dev) in enumerate(frontier):
                if at_cap():
                    break
                counts["seeds"] += 1
                rng = np.random.default_rng((cfg.rng_seed, rec.id, slot, idx))
                uid = f"u{len(specs):03d}"
                spec = synthesize_utility(seed_schedule, rec.id, rng, cfg, data, bins, uid)
                if spec is None:
                    counts["rejected_no_cell"] += 1
                    key = f"school{rec.id}_slot{slot}"
                    cell_failures[key] = cell_failures.get(key, 0) + 1
                    continue
                dedupe_key = (
                    spec.school_id,
                    spec.direction,
                    spec.load_threshold,
                    spec.dev_threshold,
                    spec.w_time,
                    spec.w_load,
                    spec.w_dev,
                )
                if dedupe_key in seen_keys:
                    counts["rejected_duplicate"] += 1
                    continue
                seen_keys.add(dedupe_key)
                counts["accepted"] += 1
                specs.append(spec)
                seed_meta[spec.id] = {
                    "seed_slots": list(seed_schedule.slots),
                    "school_id": rec.id,
                    "slot": slot,
                    "frontier_index": idx,
                    "seed_peak_load": peak,
                    "seed_avg_deviation": decimal_str(avg_dev),
                }

    if not specs:
        raise ValueError(
            "generation produced no utilities; per-cell failures: "
            + json.dumps(cell_failures, sort_keys=True)
        )

    persona_rng = np.random.default_rng((cfg.rng_seed, 10_007))
    agents: list[DecisionAgentConfig] = []
    for spec in specs:
        persona = PERSONAS[int(persona_rng.integers(len(PERSONAS)))]
        for comm in COMM_STYLES:
            for feedback in (BINARY, RICH):
                agents.append(
                    DecisionAgentConfig(
                        id=f"{spec.id}-{comm}-{feedback}",
                        utility=spec,
                        persona=persona,
                        comm_style=comm,
                        feedback_style=feedback,
                    )
                )

    manifest = {
        "schema_version": DATASET_SCHEMA_VERSION,
        "rng_seed": cfg.rng_seed,
        "L_grid": [decimal_str(v) for v in cfg.L_grid],
        "R_grid": [decimal_str(v) for v in cfg.R_grid],
        "samples_per_cell": cfg.samples_per_cell,
        "max_agents": cfg.max_agents,
        "counts": counts,
        "n_utilities": len(specs),
        "n_agents": len(agents),
        "data_fingerprint": data_fingerprint(data),
        "utilities": seed_meta,
    }
    return agents, manifest


def write_dataset(out_dir: str | Path, agents: list[DecisionAgentConfig], manifest: dict) -> Path:
    out = Path(out_dir)
    (out / "utilities").mkdir(parents=True, exist_ok=True)
    (out / "agents").mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", "utf-8"
    )
    seen_utilities = set()
    for agent in agents:
        if agent.utility.id not in seen_utilities:
            seen_utilities.add(agent.utility.id)
            doc = json.loads(agent.utility.to_json())
            doc["schema_version"] = DATASET_SCHEMA_VERSION
            (out / "utilities" / f"{agent.utility.id}.json").write_text(
                json.dumps(doc, sort_keys=True, indent=2) + "\n", "utf-8"
            )
        (out / "agents" / f"{agent.id}.json").write_text(
            json.dumps(json.loads(agent.to_json()), sort_keys=True, indent=2) + "\n", "utf-8"
        )
    return out


def load_dataset(dataset_dir: str | Path) -> tuple[list[DecisionAgentConfig], dict]:
    root = Path(dataset_dir)
    manifest = json.loads((root / "manifest.json").read_text("utf-8"))
    agents = [
        DecisionAgentConfig.from_json(path.read_text("utf-8"))
        for path in sorted((root / "agents").glob("*.json"))
    ]
    if not agents:
        raise ValueError(f"no agent files found under {root}")
    return agents, manifest
