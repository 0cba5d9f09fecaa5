"""Material identification from total reflection-loss measurements.

Pipeline: enumerate every material sequence a multi-bounce trajectory could
have (with its summed reflection loss from the database), keep the sequences
compatible with a measured total within its uncertainty, and intersect the
surviving hypotheses across trajectories that share reflection points until
nothing changes. Shared reflection points are matched by facet id plus a
quantized position (default cell 1 cm).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Mapping

import numpy as np

from . import em
from .materials import MaterialParams
from .rldb import OutOfRangeError, RLDatabase
from .scene import Scene
from .tracer import Trajectory, trace

DEFAULT_RP_TOLERANCE_M = 0.01


@dataclass(frozen=True, order=True)
class RPKey:
    """Identity of a reflection point: facet plus position quantized to delta."""

    facet_id: str
    cell: tuple[int, int, int]

    @classmethod
    def from_point(
        cls, facet_id: str, point, delta_m: float = DEFAULT_RP_TOLERANCE_M
    ) -> "RPKey":
        if delta_m <= 0:
            raise ValueError("spatial tolerance delta must be > 0")
        p = np.asarray(point, dtype=float)
        return cls(facet_id, tuple(int(round(x / delta_m)) for x in p))


@dataclass(frozen=True)
class SequenceCandidate:
    """One material-per-reflection-point hypothesis with its loss breakdown."""

    assignment: tuple[tuple[RPKey, str], ...]
    per_hop_rl_db: tuple[float, ...]
    total_rl_db: float

    def material_at(self, key: RPKey) -> str | None:
        for k, name in self.assignment:
            if k == key:
                return name
        return None


@dataclass(frozen=True)
class MeasurementRecord:
    """Measured total reflection loss of one trajectory, +/- uncertainty."""

    trajectory_id: str
    measured_total_rl_db: float
    uncertainty_db: float = 0.0

    def __post_init__(self) -> None:
        if self.uncertainty_db < 0:
            raise ValueError("uncertainty must be >= 0")


@dataclass
class BeliefState:
    """Per-reflection-point material sets plus per-trajectory survivors."""

    rp_domains: dict[RPKey, set[str]]
    survivors: dict[str, list[SequenceCandidate]]
    contradictions: list[RPKey] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.contradictions


@dataclass
class IdentificationReport:
    """Facet-level outcome of an identification run plus diagnostics."""

    resolved: dict[str, str]
    ambiguous: dict[str, tuple[str, ...]]
    uncovered: tuple[str, ...]
    contradictions: tuple[str, ...]
    no_hypothesis: tuple[str, ...]
    skipped: tuple[str, ...]
    rp_rows: tuple[tuple[RPKey, tuple[float, ...], tuple[str, ...], float], ...]
    # rp_rows: (key, representative point, sorted surviving materials, RL spread dB)

    def to_text(self) -> str:
        lines = ["# identification report"]
        lines.append("# resolved facets (facet_id,material)")
        for fid in sorted(self.resolved):
            lines.append(f"{fid},{self.resolved[fid]}")
        lines.append("# ambiguous facets (facet_id,materials)")
        for fid in sorted(self.ambiguous):
            lines.append(f"{fid},{'|'.join(self.ambiguous[fid])}")
        lines.append("# uncovered facets")
        lines.extend(sorted(self.uncovered))
        lines.append("# reflection points (facet_id,x,y,z,materials,rl_spread_db)")
        for key, point, mats, spread in self.rp_rows:
            coords = ",".join(f"{x:.6g}" for x in point)
            lines.append(f"{key.facet_id},{coords},{'|'.join(mats)},{spread:.6g}")
        lines.append("# contradictions")
        lines.extend(self.contradictions)
        lines.append("# trajectories without surviving hypothesis")
        lines.extend(self.no_hypothesis)
        lines.append("# trajectories skipped (no measurement or out of database range)")
        lines.extend(self.skipped)
        return "\n".join(lines) + "\n"


def trajectory_keys(
    traj: Trajectory, delta_m: float = DEFAULT_RP_TOLERANCE_M
) -> tuple[RPKey, ...]:
    """RPKey of every hop, in hop order."""
    return tuple(
        RPKey.from_point(h.facet_id, h.point, delta_m) for h in traj.hops
    )


def enumerate_sequences(
    traj: Trajectory,
    palette: list[MaterialParams],
    db: RLDatabase,
    f_ghz: float,
    delta_m: float = DEFAULT_RP_TOLERANCE_M,
) -> list[SequenceCandidate]:
    """All |palette|^k material sequences for a k-bounce trajectory.

    Per-hop losses come from the database at (material, f, hop angle); order
    is lexicographic in palette order.

    Raises:
        OutOfRangeError: naming the hop whose incident angle (or f) is outside
            the database grid.
    """
    if not palette:
        raise ValueError("palette must be non-empty")
    keys = trajectory_keys(traj, delta_m)
    angles_deg = [np.degrees(h.theta_i) for h in traj.hops]
    per_hop: list[dict[str, float]] = []
    for i, angle in enumerate(angles_deg):
        row = {}
        for mat in palette:
            try:
                row[mat.name] = db.lookup(mat.name, f_ghz, angle)
            except OutOfRangeError as err:
                raise OutOfRangeError(
                    f"hop {i} (facet {traj.hops[i].facet_id!r}, "
                    f"theta={angle:.3g} deg): {err}"
                ) from None
        per_hop.append(row)
    candidates = []
    for combo in product(palette, repeat=len(traj.hops)):
        losses = tuple(per_hop[i][mat.name] for i, mat in enumerate(combo))
        candidates.append(
            SequenceCandidate(
                assignment=tuple(
                    (key, mat.name) for key, mat in zip(keys, combo)
                ),
                per_hop_rl_db=losses,
                total_rl_db=float(sum(losses)),
            )
        )
    return candidates


def match_measurement(
    candidates: list[SequenceCandidate], record: MeasurementRecord
) -> list[SequenceCandidate]:
    """Candidates whose total lies within measured +/- uncertainty (closed band)."""
    u = record.uncertainty_db
    m = record.measured_total_rl_db
    return [c for c in candidates if abs(c.total_rl_db - m) <= u]


def merge_candidates(
    states: Iterable[tuple[str, list[SequenceCandidate]]],
) -> BeliefState:
    """Fixpoint constraint propagation across trajectories sharing RPKeys.

    Repeatedly intersects, at every shared key, the materials appearing in
    each covering trajectory's survivors, then deletes candidates that use an
    eliminated material, until stable. An empty set at a key is flagged as a
    contradiction (bad measurement or wrong map). The fixpoint does not depend
    on the order of ``states``.
    """
    survivors: dict[str, list[SequenceCandidate]] = {
        tid: list(cands) for tid, cands in states
    }
    original_coverage = {
        tid: {key for cand in cands for key, _ in cand.assignment}
        for tid, cands in survivors.items()
    }
    # domains only ever shrink once created, so the fixpoint is unique and a
    # trajectory pruned to nothing cannot relax constraints it already imposed
    domains: dict[RPKey, set[str]] = {}

    def constrain() -> bool:
        changed = False
        for cands in survivors.values():
            per_traj: dict[RPKey, set[str]] = {}
            for cand in cands:
                for key, name in cand.assignment:
                    per_traj.setdefault(key, set()).add(name)
            for key, allowed in per_traj.items():
                current = domains.get(key)
                updated = set(allowed) if current is None else current & allowed
                if current is None or updated != current:
                    domains[key] = updated
                    changed = True
        return changed

    def prune() -> bool:
        changed = False
        for tid, cands in survivors.items():
            kept = [
                c
                for c in cands
                if all(name in domains[key] for key, name in c.assignment)
            ]
            if len(kept) != len(cands):
                survivors[tid] = kept
                changed = True
        return changed

    progressing = True
    while progressing:
        progressing = constrain()
        progressing = prune() or progressing

    contradictions = {key for key, dom in domains.items() if not dom}
    for tid, cands in survivors.items():
        if not cands and original_coverage[tid]:
            # all hypotheses for this trajectory were eliminated: the shared
            # constraints are jointly incompatible with it
            contradictions.update(original_coverage[tid])
    return BeliefState(
        rp_domains={k: set(v) for k, v in sorted(domains.items())},
        survivors=survivors,
        contradictions=sorted(contradictions),
    )


def simulate_measurement(
    scene: Scene,
    traj: Trajectory,
    ground_truth: Mapping[str, MaterialParams],
    p_tx_dbm: float,
    f_ghz: float,
    noise_sigma_db: float = 0.0,
    seed: int | None = None,
    rng: random.Random | None = None,
    kappa: float = 0.0,
    uncertainty_db: float = 0.0,
    trajectory_id: str = "",
) -> MeasurementRecord:
    """Synthesize the total-RL measurement a receiver would extract.

    Computes the true per-hop losses from the ground-truth materials, builds
    the received power over the full trajectory length, adds seeded gaussian
    noise, and runs the link-budget extraction in reverse. Same seed (or rng
    state), same record.

    Raises:
        ValueError: if a hop's facet has no ground-truth material or
            noise_sigma_db < 0.
    """
    if noise_sigma_db < 0:
        raise ValueError("noise_sigma_db must be >= 0")
    true_total = 0.0
    for hop in traj.hops:
        scene.facet(hop.facet_id)  # trajectory must belong to this scene
        mat = ground_truth.get(hop.facet_id)
        if mat is None:
            raise ValueError(
                f"facet {hop.facet_id!r} has no ground-truth material"
            )
        true_total += em.reflection_loss(mat, f_ghz, hop.theta_i, kappa=kappa)
    generator = rng if rng is not None else random.Random(seed)
    noise = generator.gauss(0.0, noise_sigma_db) if noise_sigma_db > 0 else 0.0
    p_rx = p_tx_dbm - em.fspl(f_ghz, traj.total_length) - true_total - noise
    budget = em.extract_total_rl(p_tx_dbm, p_rx, f_ghz, traj.total_length)
    return MeasurementRecord(
        trajectory_id=trajectory_id,
        measured_total_rl_db=budget.rl_total_db,
        uncertainty_db=uncertainty_db,
    )


MeasureFn = Callable[[str, Trajectory], "MeasurementRecord | None"]


def merge_with_facet_consistency(
    entries: list[tuple[str, list[SequenceCandidate]]],
) -> tuple[BeliefState, dict[str, set[str]]]:
    """Per-key merge plus the map constraint that a facet has one material.

    Alternates the RPKey fixpoint with facet-level pruning (intersect the
    domains of every reflection point on a facet; drop candidates using a
    material outside that intersection) until stable. Returns the final belief
    plus the per-facet material sets; an empty facet set is appended to the
    belief's contradictions via its reflection-point keys.
    """
    current = [(tid, list(cands)) for tid, cands in entries]
    extra_contradictions: set[RPKey] = set()
    while True:
        belief = merge_candidates(current)
        facet_domains: dict[str, set[str]] = {}
        for key, dom in belief.rp_domains.items():
            if key.facet_id in facet_domains:
                facet_domains[key.facet_id] &= dom
            else:
                facet_domains[key.facet_id] = set(dom)
        changed = False
        pruned: list[tuple[str, list[SequenceCandidate]]] = []
        for tid, cands in belief.survivors.items():
            kept = [
                c
                for c in cands
                if all(
                    name in facet_domains.get(key.facet_id, set())
                    for key, name in c.assignment
                )
            ]
            if len(kept) != len(cands):
                changed = True
                if not kept and cands:
                    extra_contradictions.update(key for key, _ in cands[0].assignment)
            pruned.append((tid, kept))
        if not changed:
            if extra_contradictions:
                belief.contradictions = sorted(
                    set(belief.contradictions) | extra_contradictions
                )
            return belief, facet_domains
        current = pruned


def identify_loop(
    scene: Scene,
    tx_positions: list,
    rx_positions: list,
    palette: list[MaterialParams],
    db: RLDatabase,
    f_ghz: float,
    u_db: float,
    max_bounces: int,
    measure: MeasureFn,
    delta_m: float = DEFAULT_RP_TOLERANCE_M,
) -> tuple[BeliefState, IdentificationReport]:
    """Trace, enumerate, match, and merge over every TX-RX pair in order.

    Trajectory ids are ``p<pair>t<index>`` with pairs enumerated TX-major over
    the Cartesian product of positions. ``measure`` returns the measurement
    for a trajectory or None to leave it out; records with zero uncertainty
    fall back to the loop-wide ``u_db``. Merging interleaves the per-key
    fixpoint with the map constraint that each facet carries one material
    (merge_with_facet_consistency). Stops early once every covered reflection
    point is down to a single material.
    """
    if not tx_positions or not rx_positions:
        raise ValueError("need at least one TX and one RX position")
    entries: list[tuple[str, list[SequenceCandidate]]] = []
    no_hypothesis: list[str] = []
    skipped: list[str] = []
    hop_angles: dict[RPKey, list[float]] = {}
    rp_points: dict[RPKey, tuple[float, ...]] = {}
    belief = BeliefState(rp_domains={}, survivors={})

    pair_index = 0
    done = False
    for tx in tx_positions:
        if done:
            break
        for rx in rx_positions:
            if done:
                break
            trajectories = trace(scene, tx, rx, max_bounces=max_bounces)
            for ti, traj in enumerate(trajectories):
                tid = f"p{pair_index}t{ti}"
                record = measure(tid, traj)
                if record is None:
                    skipped.append(tid)
                    continue
                try:
                    candidates = enumerate_sequences(traj, palette, db, f_ghz, delta_m)
                except OutOfRangeError as err:
                    skipped.append(f"{tid} ({err})")
                    continue
                u = record.uncertainty_db if record.uncertainty_db > 0 else u_db
                survivors = match_measurement(
                    candidates,
                    MeasurementRecord(tid, record.measured_total_rl_db, u),
                )
                for key, hop in zip(trajectory_keys(traj, delta_m), traj.hops):
                    hop_angles.setdefault(key, []).append(np.degrees(hop.theta_i))
                    rp_points.setdefault(key, tuple(float(x) for x in hop.point))
                if not survivors:
                    no_hypothesis.append(tid)
                    continue
                entries.append((tid, survivors))
            pair_index += 1
            if entries:
                belief, _ = merge_with_facet_consistency(entries)
                if belief.rp_domains and all(
                    len(dom) == 1 for dom in belief.rp_domains.values()
                ):
                    done = True

    report = _build_report(
        scene, belief, db, f_ghz, hop_angles, rp_points, no_hypothesis, skipped
    )
    return belief, report


def _build_report(
    scene: Scene,
    belief: BeliefState,
    db: RLDatabase,
    f_ghz: float,
    hop_angles: dict[RPKey, list[float]],
    rp_points: dict[RPKey, tuple[float, ...]],
    no_hypothesis: list[str],
    skipped: list[str],
) -> IdentificationReport:
    by_facet: dict[str, list[set[str]]] = {}
    for key, dom in belief.rp_domains.items():
        by_facet.setdefault(key.facet_id, []).append(dom)

    resolved: dict[str, str] = {}
    ambiguous: dict[str, tuple[str, ...]] = {}
    contradictions = [
        f"empty material set at {key.facet_id} cell {key.cell}"
        for key in belief.contradictions
    ]
    conflicted_facets = {key.facet_id for key in belief.contradictions}
    for fid, domains in sorted(by_facet.items()):
        combined: set[str] | None = None
        for dom in domains:
            combined = set(dom) if combined is None else combined & dom
        if not combined:
            conflicted_facets.add(fid)
        elif fid in conflicted_facets:
            pass  # summarized below; per-key evidence is inconsistent
        elif len(combined) == 1:
            resolved[fid] = next(iter(combined))
        else:
            ambiguous[fid] = tuple(sorted(combined))
    contradictions.extend(
        f"facet {fid}: reflection-point material sets have empty intersection"
        for fid in sorted(conflicted_facets)
    )
    uncovered = tuple(
        f.facet_id for f in scene.facets if f.facet_id not in by_facet
    )

    rp_rows = []
    for key in sorted(belief.rp_domains):
        dom = sorted(belief.rp_domains[key])
        spread = 0.0
        for angle in hop_angles.get(key, []):
            losses = []
            for name in dom:
                try:
                    losses.append(db.lookup(name, f_ghz, angle))
                except (OutOfRangeError, KeyError):
                    pass
            if len(losses) > 1:
                spread = max(spread, max(losses) - min(losses))
        rp_rows.append(
            (key, rp_points.get(key, ()), tuple(dom), spread)
        )
    return IdentificationReport(
        resolved=resolved,
        ambiguous=ambiguous,
        uncovered=uncovered,
        contradictions=tuple(contradictions),
        no_hypothesis=tuple(no_hypothesis),
        skipped=tuple(skipped),
        rp_rows=tuple(rp_rows),
    )
