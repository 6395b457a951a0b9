"""Exhaustive generation and verification over all small graphs.

Graphs are indexed by integer codes that mirror their edge masks: bit
``i*d + j`` for directed edge (i, j), and for mixed graphs the canonical
pair index shifted above the directed block.  Codes make the union of a
set of graphs the bitwise OR of their codes, so the greatest-element test
per equivalence class is a membership lookup of the OR.

The sweep fingerprints every code with the compiled kernel, groups equal
fingerprints, and checks each class for a greatest element.  Work is
sharded; with an output directory every shard is checkpointed so an
interrupted run resumes.  Results are deterministic functions of the
inputs, independent of worker count.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from . import _kernel
from .graphs import Dmg, n_pairs
from .independence import Fingerprint, fingerprint_length

KINDS = ("dg", "dmg")

# 2**22 codes (four-node mixed graphs) is the intended workhorse; anything
# larger must be requested explicitly.
DEFAULT_MAX_SLOT_BITS = 22

SHARD_BITS = 16


def n_edge_slots(d: int, kind: str) -> int:
    if kind == "dg":
        return d * d
    if kind == "dmg":
        return d * d + n_pairs(d)
    raise ValueError(f"kind must be one of {KINDS}")


def code_to_graph(code: int, d: int, kind: str) -> Dmg:
    slots = n_edge_slots(d, kind)
    if not 0 <= code < 1 << slots:
        raise ValueError(f"code {code} out of range for d={d}, kind={kind}")
    dir_mask = code & ((1 << (d * d)) - 1)
    bi_mask = code >> (d * d) if kind == "dmg" else 0
    return Dmg.from_masks(d, dir_mask, bi_mask)


def graph_to_code(g: Dmg, kind: str) -> int:
    if g.bi_self_mask:
        raise ValueError("graphs with bidirected self-loops have no enumeration code")
    if kind == "dg" and g.bi_mask:
        raise ValueError("graph has bidirected edges but kind is 'dg'")
    return g.dir_mask | (g.bi_mask << (g.d * g.d))


@dataclass
class ClassGrouping:
    """All graphs of one (d, kind), grouped by fingerprint.

    ``codes`` is sorted by (fingerprint, code); ``starts`` delimits the
    classes; ``fp_words`` holds one fingerprint per class, in ascending
    fingerprint order.
    """

    d: int
    kind: str
    criterion: str
    codes: np.ndarray
    starts: np.ndarray
    fp_words: np.ndarray

    @property
    def total(self) -> int:
        return int(self.codes.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.starts.shape[0]) - 1

    def class_members(self, k: int) -> np.ndarray:
        return self.codes[self.starts[k] : self.starts[k + 1]]

    def class_fingerprint(self, k: int) -> Fingerprint:
        return Fingerprint(
            d=self.d, criterion=self.criterion, bits=_kernel.words_to_int(self.fp_words[k])
        )

    def iter_classes(self) -> Iterator[tuple[int, np.ndarray]]:
        for k in range(self.n_classes):
            yield k, self.class_members(k)

    def class_members_of(self, code: int) -> np.ndarray:
        """Members of the class containing the given graph code."""
        pos = int(np.nonzero(self.codes == code)[0][0])
        k = int(np.searchsorted(self.starts, pos, side="right")) - 1
        return self.class_members(k)


def _fingerprint_codes(
    codes: np.ndarray, d: int, kind: str, criterion: str, out_dir: Optional[Path], shard_lo: int
) -> np.ndarray:
    if out_dir is not None:
        shard_file = out_dir / f"fp_{criterion}_{kind}_{d}_{shard_lo:08x}.npy"
        if shard_file.exists():
            return np.load(shard_file)
    dir_masks = codes & ((1 << (d * d)) - 1)
    bi_masks = codes >> (d * d) if kind == "dmg" else None
    words = _kernel.fingerprint_words_batch(d, dir_masks, bi_masks, None, criterion)
    if out_dir is not None:
        tmp = shard_file.with_suffix(".tmp.npy")
        np.save(tmp, words)
        tmp.rename(shard_file)
    return words


def enumerate_and_group(
    d: int,
    kind: str,
    criterion: str = "e",
    *,
    out_dir: Optional[str | Path] = None,
    max_slot_bits: int = DEFAULT_MAX_SLOT_BITS,
    progress: bool = False,
) -> ClassGrouping:
    """Fingerprint every graph of the given shape and group equal models.

    Every code lands in exactly one class; members are stored as sorted
    codes.  ``max_slot_bits`` guards against accidentally requesting an
    infeasible sweep (raise it deliberately for the 2**25 five-node run).
    """
    slots = n_edge_slots(d, kind)
    if slots > max_slot_bits:
        raise ValueError(
            f"{2**slots} graphs exceed the configured cap of 2**{max_slot_bits}; "
            f"pass max_slot_bits={slots} to run anyway"
        )
    out_path = None
    if out_dir is not None:
        out_path = Path(out_dir) / "shards"
        out_path.mkdir(parents=True, exist_ok=True)

    total = 1 << slots
    n_words = _kernel.n_fingerprint_words(d)
    words = np.empty((total, n_words), dtype=np.uint64)
    step = 1 << SHARD_BITS
    for lo in range(0, total, step):
        hi = min(lo + step, total)
        codes = np.arange(lo, hi, dtype=np.int64)
        words[lo:hi] = _fingerprint_codes(codes, d, kind, criterion, out_path, lo)
        if progress:
            print(f"  fingerprinted {hi}/{total}", flush=True)

    # sort by (fingerprint words big-to-small, code); codes are pre-sorted
    order = np.lexsort(tuple(words[:, w] for w in range(n_words - 1, -1, -1)))
    sorted_words = words[order]
    sorted_codes = np.arange(total, dtype=np.int64)[order]
    # np.lexsort is stable, so codes ascend within each class
    boundary = np.ones(total, dtype=bool)
    if total > 1:
        boundary[1:] = np.any(sorted_words[1:] != sorted_words[:-1], axis=1)
    starts = np.flatnonzero(boundary)
    starts = np.append(starts, total)
    return ClassGrouping(
        d=d,
        kind=kind,
        criterion=criterion,
        codes=sorted_codes,
        starts=starts,
        fp_words=sorted_words[starts[:-1]],
    )


@dataclass
class GreatestFailure:
    fingerprint_hex: str
    member_codes: list[int]
    union_code: int


@dataclass
class VerificationReport:
    """Outcome of the greatest-element sweep over one graph universe."""

    d: int
    kind: str
    criterion: str
    total: int
    n_classes: int
    failures: list[GreatestFailure] = field(default_factory=list)
    wall_seconds: float = 0.0

    @property
    def all_classes_have_greatest(self) -> bool:
        return not self.failures

    def to_json_dict(self, include_meta: bool = True) -> dict:
        body = {
            "d": self.d,
            "kind": self.kind,
            "criterion": self.criterion,
            "total_graphs": self.total,
            "class_count": self.n_classes,
            "classes_without_greatest": [
                {
                    "fingerprint": f.fingerprint_hex,
                    "member_codes": f.member_codes,
                    "union_code": f.union_code,
                }
                for f in self.failures
            ],
        }
        if include_meta:
            body["meta"] = {"wall_seconds": self.wall_seconds}
        return body

    def to_json(self, include_meta: bool = True) -> str:
        return json.dumps(self.to_json_dict(include_meta), indent=2) + "\n"

    def summary(self) -> str:
        state = "all classes have a greatest element" if not self.failures else (
            f"{len(self.failures)} classes lack a greatest element"
        )
        return (
            f"{self.kind} d={self.d} criterion={self.criterion}: "
            f"{self.total} graphs, {self.n_classes} classes, {state}"
        )


def verify_greatest_elements(grouping: ClassGrouping, member_dump_cap: int = 64) -> VerificationReport:
    """Check every class for a greatest element.

    The union of a class's edge sets is the OR of its codes; a greatest
    element exists iff that union is itself a member.
    """
    t0 = time.monotonic()
    failures = []
    codes = grouping.codes
    starts = grouping.starts
    for k in range(grouping.n_classes):
        lo, hi = starts[k], starts[k + 1]
        members = codes[lo:hi]
        union = int(np.bitwise_or.reduce(members))
        pos = int(np.searchsorted(members, union))
        if pos >= members.shape[0] or int(members[pos]) != union:
            failures.append(
                GreatestFailure(
                    fingerprint_hex=grouping.class_fingerprint(k).to_hex(),
                    member_codes=[int(c) for c in members[:member_dump_cap]],
                    union_code=union,
                )
            )
    return VerificationReport(
        d=grouping.d,
        kind=grouping.kind,
        criterion=grouping.criterion,
        total=grouping.total,
        n_classes=grouping.n_classes,
        failures=failures,
        wall_seconds=time.monotonic() - t0,
    )


@dataclass
class SigmaCounterexample:
    """A class whose edgewise union leaves the class, with a witness triple."""

    found: bool
    members: tuple[Dmg, ...] = ()
    supremum: Optional[Dmg] = None
    triple: Optional[tuple[int, int, frozenset[int]]] = None


def find_sigma_counterexample(d: int = 3, criterion: str = "sigma") -> SigmaCounterexample:
    """Search directed graphs for a class whose supremum is not a member.

    Scans equivalence classes in ascending fingerprint order and returns
    the first one whose union-of-edges graph carries a different model,
    together with a singleton triple separated in the members but connected
    in the union.  Returns found=False when every class is closed under
    union (as happens for the asymmetric criterion).
    """
    grouping = enumerate_and_group(d, "dg", criterion)
    for k in range(grouping.n_classes):
        members = grouping.class_members(k)
        union = int(np.bitwise_or.reduce(members))
        pos = int(np.searchsorted(members, union))
        if pos < members.shape[0] and int(members[pos]) == union:
            continue
        class_fp = grouping.class_fingerprint(k)
        sup = code_to_graph(union, d, "dg")
        from .independence import fingerprint as fp_of

        sup_fp = fp_of(sup, criterion)
        diff = class_fp.bits & ~sup_fp.bits
        assert diff, "union classes can only lose separations"
        idx = (diff & -diff).bit_length() - 1
        half = 1 << (d - 1)
        code = idx % half
        pair = idx // half
        a, b = divmod(pair, d)
        from .independence import expand_cond, mask_to_set

        triple = (a, b, mask_to_set(expand_cond(code, a)))
        return SigmaCounterexample(
            found=True,
            members=tuple(code_to_graph(int(c), d, "dg") for c in members),
            supremum=sup,
            triple=triple,
        )
    return SigmaCounterexample(found=False)


def run_verification(
    d: int,
    kind: str,
    criterion: str = "e",
    *,
    out_dir: Optional[str | Path] = None,
    max_slot_bits: int = DEFAULT_MAX_SLOT_BITS,
    progress: bool = False,
) -> VerificationReport:
    """End-to-end sweep: enumerate, group, and verify greatest elements."""
    t0 = time.monotonic()
    grouping = enumerate_and_group(
        d, kind, criterion, out_dir=out_dir, max_slot_bits=max_slot_bits, progress=progress
    )
    report = verify_greatest_elements(grouping)
    report.wall_seconds = time.monotonic() - t0
    return report
