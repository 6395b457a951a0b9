"""Canonical independence models over a graph's node set.

A model is the set of triples (A, B, C) of node sets with "A separated
from B given C" under one criterion.  Left and right composition reduce
membership of any triple to singleton queries, so the whole model is
captured by a fingerprint: one bit per (a, b, C) with C ranging over the
subsets of V minus {a}.  Two graphs induce the same model iff their
fingerprints are equal.

Bit layout, fixed for reproducibility: bit index
``(a*d + b) * 2**(d-1) + code`` where ``code`` enumerates C as the integer
value of its characteristic mask over V minus {a} (ascending).  Triples
with a in C are answered separated without a lookup, since conditioning on
a source blocks every walk leaving it.  Bits with b in C are stored
literally; the future copy of b is dropped from the conditioning side by
the criterion itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Optional

from .graphs import Dmg
from .separation import CRITERIA, d_separated, e_separated, sigma_separated

LAYOUT_VERSION = 1

AXIOMS = ("LR", "RR", "LD", "RD", "LWU", "RWU", "LC", "RC", "LI", "RI", "LCo", "RCo")


def fingerprint_length(d: int) -> int:
    return d * d * (1 << max(d - 1, 0))


def compress_cond(c_mask: int, a: int) -> int:
    """Drop bit a from a full-width conditioning mask."""
    low = c_mask & ((1 << a) - 1)
    high = c_mask >> (a + 1)
    return (high << a) | low


def expand_cond(code: int, a: int) -> int:
    """Insert a zero bit at position a, mapping a compressed code back to node space."""
    low = code & ((1 << a) - 1)
    high = code >> a
    return (high << (a + 1)) | low


def mask_to_set(mask: int) -> frozenset[int]:
    return frozenset(v for v in range(mask.bit_length()) if mask >> v & 1)


def set_to_mask(s: Iterable[int]) -> int:
    m = 0
    for v in s:
        m |= 1 << v
    return m


@dataclass(frozen=True)
class Fingerprint:
    """Bit vector of all singleton separation statements of one graph."""

    d: int
    criterion: str
    bits: int

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.bits >> fingerprint_length(self.d):
            raise ValueError("bit vector longer than the layout allows")

    def __len__(self) -> int:
        return fingerprint_length(self.d)

    def bit_index(self, a: int, b: int, code: int) -> int:
        return (a * self.d + b) * (1 << (self.d - 1)) + code

    def singleton(self, a: int, b: int, c: Iterable[int]) -> bool:
        """Whether ({a}, {b}, C) is in the model; requires a not in C."""
        c_set = frozenset(c)
        if a in c_set:
            raise ValueError("singleton lookup requires a outside the conditioning set")
        code = compress_cond(set_to_mask(c_set), a)
        return bool(self.bits >> self.bit_index(a, b, code) & 1)

    def to_hex(self) -> str:
        nhex = (fingerprint_length(self.d) + 3) // 4
        return f"{self.d}:{self.criterion}:{LAYOUT_VERSION}:{self.bits:0{nhex}x}"

    @classmethod
    def from_hex(cls, text: str) -> "Fingerprint":
        d_s, criterion, version, hexbits = text.strip().split(":")
        if int(version) != LAYOUT_VERSION:
            raise ValueError(f"unsupported fingerprint layout version {version}")
        return cls(d=int(d_s), criterion=criterion, bits=int(hexbits, 16))


_SEPARATED = {"d": d_separated, "sigma": sigma_separated, "e": e_separated}


def fingerprint_by_walk_search(g: Dmg, criterion: str) -> Fingerprint:
    """Reference fingerprint computation, one reachability query per bit.

    The compiled batch kernel in esep.enumeration produces identical bits
    and should be preferred when fingerprinting many graphs.
    """
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}")
    sep = _SEPARATED[criterion]
    d = g.d
    bits = 0
    idx = 0
    for a, b in product(range(d), repeat=2):
        for code in range(1 << (d - 1)):
            c_set = mask_to_set(expand_cond(code, a))
            if sep(g, {a}, {b}, c_set):
                bits |= 1 << idx
            idx += 1
    return Fingerprint(d=d, criterion=criterion, bits=bits)


def fingerprint(g: Dmg, criterion: str = "e") -> Fingerprint:
    """Fingerprint of a graph, via the compiled kernel where it applies."""
    from . import _kernel

    if g.d > _kernel.MAX_KERNEL_D:
        return fingerprint_by_walk_search(g, criterion)
    return Fingerprint(d=g.d, criterion=criterion, bits=_kernel.fingerprint_bits(g, criterion))


def triple_in_model(
    fp: Fingerprint, a: Iterable[int], b: Iterable[int], c: Iterable[int]
) -> bool:
    """Membership of a set triple, reduced to singleton bits.

    Composition on both sides turns (A, B, C) into a conjunction over pairs;
    sources inside C contribute trivially separated conjuncts.
    """
    a_set, b_set, c_set = frozenset(a), frozenset(b), frozenset(c)
    for s in (a_set, b_set, c_set):
        for v in s:
            if not 0 <= v < fp.d:
                raise ValueError(f"node index {v} out of range for d={fp.d}")
    for x in a_set:
        if x in c_set:
            continue  # conditioning on the source blocks all its walks
        for y in b_set:
            if not fp.singleton(x, y, c_set):
                return False
    return True


class TernaryModel:
    """Membership view over the full triple space, backed by a fingerprint."""

    def __init__(self, fp: Fingerprint):
        self.fp = fp
        self.d = fp.d
        self.criterion = fp.criterion

    def __contains__(self, triple: tuple[Iterable[int], Iterable[int], Iterable[int]]) -> bool:
        a, b, c = triple
        return triple_in_model(self.fp, a, b, c)

    def contains(self, a: Iterable[int], b: Iterable[int], c: Iterable[int]) -> bool:
        return triple_in_model(self.fp, a, b, c)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TernaryModel):
            return NotImplemented
        return self.fp == other.fp

    def __hash__(self) -> int:
        return hash(self.fp)


def marginal_model(fp: Fingerprint, v_obs: Iterable[int]) -> TernaryModel:
    """Sub-model of triples inside v_obs, relabeled to 0..|v_obs|-1.

    Nodes are relabeled in sorted order, matching the relabeling of
    latent_projection.
    """
    obs = sorted(set(v_obs))
    if not obs:
        raise ValueError("observed node set must be non-empty")
    for v in obs:
        if not 0 <= v < fp.d:
            raise ValueError(f"node index {v} out of range for d={fp.d}")
    d2 = len(obs)
    bits = 0
    idx = 0
    for a2, b2 in product(range(d2), repeat=2):
        a, b = obs[a2], obs[b2]
        for code2 in range(1 << (d2 - 1)):
            c2_mask = expand_cond(code2, a2)
            c_orig = frozenset(obs[v] for v in range(d2) if c2_mask >> v & 1)
            if fp.singleton(a, b, c_orig):
                bits |= 1 << idx
            idx += 1
    return TernaryModel(Fingerprint(d=d2, criterion=fp.criterion, bits=bits))


# -- axiom checking ---------------------------------------------------------


@dataclass(frozen=True)
class AxiomCounterexample:
    """A quantifier assignment under which an axiom's implication fails."""

    axiom: str
    assignment: dict
    premises: tuple
    conclusion: tuple

    def __str__(self) -> str:
        sets = ", ".join(f"{k}={sorted(v)}" for k, v in self.assignment.items())
        return f"{self.axiom} fails at {sets}"


class _SetModel:
    """Memoized set-level membership over all subset triples."""

    def __init__(self, fp: Fingerprint):
        self.fp = fp
        self.d = fp.d
        self._memo: dict[tuple[int, int, int], bool] = {}

    def member(self, a_mask: int, b_mask: int, c_mask: int) -> bool:
        key = (a_mask, b_mask, c_mask)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        fp = self.fp
        result = True
        a_rest = a_mask & ~c_mask
        while result and a_rest:
            x = (a_rest & -a_rest).bit_length() - 1
            a_rest &= a_rest - 1
            code = compress_cond(c_mask, x)
            base = (x * fp.d) * (1 << (fp.d - 1)) + code
            b_rest = b_mask
            while b_rest:
                y = (b_rest & -b_rest).bit_length() - 1
                b_rest &= b_rest - 1
                if not fp.bits >> (base + y * (1 << (fp.d - 1))) & 1:
                    result = False
                    break
        self._memo[key] = result
        return result


def _subset_codes(d: int) -> list[int]:
    return sorted(range(1 << d), key=lambda m: (bin(m).count("1"), m))


@lru_cache(maxsize=None)
def _ranked_assignments(d: int, arity: int) -> tuple[tuple[int, ...], ...]:
    codes = _subset_codes(d)
    return tuple(
        sorted(
            product(codes, repeat=arity),
            key=lambda ms: (sum(bin(m).count("1") for m in ms), ms),
        )
    )


def check_axiom(fp: Fingerprint, axiom: str) -> Optional[AxiomCounterexample]:
    """Exhaustively test one closure property; None when it holds.

    Counterexamples are searched smallest-first (by total assignment size,
    then by subset code), so the returned witness is minimal under that
    order.  Weak union is checked in its union form: separating B from
    A and D jointly given C must allow moving D into the conditioning set.
    """
    if axiom not in AXIOMS:
        raise ValueError(f"axiom must be one of {AXIOMS}")
    model = _SetModel(fp)
    d = fp.d

    def fail(assign: dict[str, int], premises, conclusion) -> AxiomCounterexample:
        return AxiomCounterexample(
            axiom=axiom,
            assignment={k: mask_to_set(m) for k, m in assign.items()},
            premises=tuple(tuple(mask_to_set(m) for m in t) for t in premises),
            conclusion=tuple(mask_to_set(m) for m in conclusion),
        )

    def ranked(*names: str):
        for masks in _ranked_assignments(d, len(names)):
            yield dict(zip(names, masks))

    m = model.member
    if axiom == "LR":
        for s in ranked("A", "B"):
            if not m(s["A"], s["B"], s["A"]):
                return fail(s, (), (s["A"], s["B"], s["A"]))
    elif axiom == "RR":
        for s in ranked("A", "B"):
            if not m(s["A"], s["B"], s["B"]):
                return fail(s, (), (s["A"], s["B"], s["B"]))
    elif axiom == "LD":
        for s in ranked("A", "B", "C", "D"):
            if s["D"] & ~s["A"]:
                continue
            if m(s["A"], s["B"], s["C"]) and not m(s["D"], s["B"], s["C"]):
                return fail(s, ((s["A"], s["B"], s["C"]),), (s["D"], s["B"], s["C"]))
    elif axiom == "RD":
        for s in ranked("A", "B", "C", "D"):
            if s["D"] & ~s["B"]:
                continue
            if m(s["A"], s["B"], s["C"]) and not m(s["A"], s["D"], s["C"]):
                return fail(s, ((s["A"], s["B"], s["C"]),), (s["A"], s["D"], s["C"]))
    elif axiom == "LWU":
        for s in ranked("A", "B", "C", "D"):
            if m(s["A"] | s["D"], s["B"], s["C"]) and not m(s["A"], s["B"], s["C"] | s["D"]):
                return fail(
                    s,
                    ((s["A"] | s["D"], s["B"], s["C"]),),
                    (s["A"], s["B"], s["C"] | s["D"]),
                )
    elif axiom == "RWU":
        for s in ranked("A", "B", "C", "D"):
            if m(s["A"], s["B"] | s["D"], s["C"]) and not m(s["A"], s["B"], s["C"] | s["D"]):
                return fail(
                    s,
                    ((s["A"], s["B"] | s["D"], s["C"]),),
                    (s["A"], s["B"], s["C"] | s["D"]),
                )
    elif axiom == "LC":
        for s in ranked("A", "B", "C", "D"):
            if (
                m(s["A"], s["B"], s["C"])
                and m(s["D"], s["B"], s["A"] | s["C"])
                and not m(s["A"] | s["D"], s["B"], s["C"])
            ):
                return fail(
                    s,
                    ((s["A"], s["B"], s["C"]), (s["D"], s["B"], s["A"] | s["C"])),
                    (s["A"] | s["D"], s["B"], s["C"]),
                )
    elif axiom == "RC":
        for s in ranked("A", "B", "C", "D"):
            if (
                m(s["A"], s["B"], s["C"])
                and m(s["A"], s["D"], s["B"] | s["C"])
                and not m(s["A"], s["B"] | s["D"], s["C"])
            ):
                return fail(
                    s,
                    ((s["A"], s["B"], s["C"]), (s["A"], s["D"], s["B"] | s["C"])),
                    (s["A"], s["B"] | s["D"], s["C"]),
                )
    elif axiom == "LI":
        for s in ranked("A", "B", "C"):
            if (
                m(s["A"], s["B"], s["C"])
                and m(s["C"], s["B"], s["A"])
                and not m(s["A"] | s["C"], s["B"], s["A"] & s["C"])
            ):
                return fail(
                    s,
                    ((s["A"], s["B"], s["C"]), (s["C"], s["B"], s["A"])),
                    (s["A"] | s["C"], s["B"], s["A"] & s["C"]),
                )
    elif axiom == "RI":
        for s in ranked("A", "B", "C"):
            if (
                m(s["A"], s["B"], s["C"])
                and m(s["A"], s["C"], s["B"])
                and not m(s["A"], s["B"] | s["C"], s["B"] & s["C"])
            ):
                return fail(
                    s,
                    ((s["A"], s["B"], s["C"]), (s["A"], s["C"], s["B"])),
                    (s["A"], s["B"] | s["C"], s["B"] & s["C"]),
                )
    elif axiom == "LCo":
        for s in ranked("A", "B", "C"):
            per_node = all(
                m(1 << x, s["B"], s["C"]) for x in mask_to_set(s["A"])
            )
            if m(s["A"], s["B"], s["C"]) != per_node:
                return fail(s, (), (s["A"], s["B"], s["C"]))
    elif axiom == "RCo":
        for s in ranked("A", "B", "C"):
            per_node = all(
                m(s["A"], 1 << y, s["C"]) for y in mask_to_set(s["B"])
            )
            if m(s["A"], s["B"], s["C"]) != per_node:
                return fail(s, (), (s["A"], s["B"], s["C"]))
    return None
