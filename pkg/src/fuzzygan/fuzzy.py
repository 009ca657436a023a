"""Differentiable fuzzy-logic operators over batches of truth values.

All operators act column-wise on tensors whose entries are truth values in
[0, 1] and are built from taped tensor primitives, so gradients flow through
the whole pipeline: partition a network head into antecedent/consequent
vectors, combine them with the product t-norm / t-conorm, apply a
sigmoid-sharpened Reichenbach implication, and aggregate the implications
into one truth value per batch row with the product aggregator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .tensor import (
    DimensionError,
    DomainError,
    Tensor,
    add,
    clip,
    cycle_cols,
    mul,
    reduce_prod,
    scale,
    shift,
    sigmoid,
    slice_cols,
    sub,
)

__all__ = [
    "STEEPNESS",
    "FuzzyPartitionSpec",
    "t_norm",
    "t_conorm",
    "reichenbach",
    "sigmoidal_implication",
    "product_aggregate",
    "partition_and_harmonize",
    "fuzzy_forward",
]

# Steepness of the sigmoidal sharpening applied to the Reichenbach
# implication. Must be positive; 9 keeps the boundary values 0 and 1 fixed
# while steepening the transition around 1/2.
STEEPNESS = 9.0


@dataclass(frozen=True)
class FuzzyPartitionSpec:
    """How an N-wide head splits into antecedent and consequent vectors.

    Columns [0, j) feed the t-norm's first argument, [j, j+k) its second,
    [j+k, j+k+l) the t-conorm's first argument and the remaining m its
    second. The defaults (5 = 1+2+1+1) are the tuned sizes.
    """

    n: int = 5
    j: int = 1
    k: int = 2
    l: int = 1
    m: int = 1

    def __post_init__(self):
        for name in ("j", "k", "l", "m"):
            if getattr(self, name) < 1:
                raise DomainError(f"partition size {name} must be >= 1, got {getattr(self, name)}")
        if self.j + self.k + self.l + self.m != self.n:
            raise DomainError(
                f"partition sizes {self.j}+{self.k}+{self.l}+{self.m} != head width {self.n}"
            )

    @property
    def antecedent_width(self) -> int:
        return max(self.j, self.k)

    @property
    def consequent_width(self) -> int:
        return max(self.l, self.m)

    @property
    def implication_width(self) -> int:
        return max(self.antecedent_width, self.consequent_width)


def _check_unit_range(name: str, t: Tensor) -> None:
    x = t.data
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        bad = x.min() if x.min() < 0.0 else x.max()
        raise DomainError(f"{name}: truth values must lie in [0, 1], found {bad}")


def _check_same_width(a: Tensor, b: Tensor, opname: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{opname}: shapes {a.shape} and {b.shape} differ")


def t_norm(a: Tensor, b: Tensor) -> Tensor:
    """Product t-norm T(a, b) = a * b, the fuzzy conjunction.

    Commutative, associative, monotone, with identity T(1, a) = a.
    """
    _check_same_width(a, b, "t_norm")
    _check_unit_range("t_norm", a)
    _check_unit_range("t_norm", b)
    return mul(a, b)


def t_conorm(a: Tensor, b: Tensor) -> Tensor:
    """Probabilistic sum S(a, b) = a + b - a * b, the fuzzy disjunction.

    The t-conorm dual to the product t-norm; S(0, a) = a and 1 absorbs.
    """
    _check_same_width(a, b, "t_conorm")
    _check_unit_range("t_conorm", a)
    _check_unit_range("t_conorm", b)
    return sub(add(a, b), mul(a, b))


def reichenbach(t: Tensor, s: Tensor) -> Tensor:
    """Reichenbach implication I(t, s) = 1 - t + t * s.

    Decreasing in the antecedent t, increasing in the consequent s, with
    the classical corners I(0,0) = I(1,1) = 1 and I(1,0) = 0.
    """
    _check_same_width(t, s, "reichenbach")
    _check_unit_range("reichenbach", t)
    _check_unit_range("reichenbach", s)
    return shift(sub(mul(t, s), t), 1.0)


def sigmoidal_implication(t: Tensor, s: Tensor) -> Tensor:
    """Sigmoid-sharpened Reichenbach implication.

    With i = I_RC(t, s) and steepness 9, computes

        ((1 + e^{9/2}) * sigmoid(9 * (i - 1/2)) - 1) / (e^{9/2} - 1)

    which sharpens the transition while still mapping i=0 to 0 and i=1
    to 1, so the implication axioms survive. The raw affine form can
    escape [0, 1] only by floating-point rounding, which is clipped.
    """
    irc = reichenbach(t, s)
    e_half = math.exp(STEEPNESS / 2.0)
    sharpened = sigmoid(scale(shift(irc, -0.5), STEEPNESS))
    out = scale(shift(scale(sharpened, 1.0 + e_half), -1.0), 1.0 / (e_half - 1.0))
    return clip(out, 0.0, 1.0)


def product_aggregate(implications: Tensor) -> Tensor:
    """Product aggregator: per-row product of the implication columns.

    Symmetric and increasing in each entry, with A(1,...,1) = 1 and any
    zero entry annihilating its row.
    """
    if implications.cols < 1:
        raise DomainError("product_aggregate needs at least one implication column")
    _check_unit_range("product_aggregate", implications)
    return reduce_prod(implications, axis="cols")


def partition_and_harmonize(
    head: Tensor, spec: FuzzyPartitionSpec
) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """Split an N-wide head into the four truth vectors, sizes harmonized.

    The shorter vector of each pair is extended to the longer's width by
    cyclic column repetition, so the t-norm and t-conorm can act
    elementwise.
    """
    if head.cols != spec.n:
        raise DimensionError(f"head width {head.cols} does not match partition N={spec.n}")
    _check_unit_range("partition_and_harmonize", head)
    a = slice_cols(head, 0, spec.j)
    b = slice_cols(head, spec.j, spec.k)
    c = slice_cols(head, spec.j + spec.k, spec.l)
    d = slice_cols(head, spec.j + spec.k + spec.l, spec.m)
    w_ab = spec.antecedent_width
    w_cd = spec.consequent_width
    if a.cols < w_ab:
        a = cycle_cols(a, w_ab)
    if b.cols < w_ab:
        b = cycle_cols(b, w_ab)
    if c.cols < w_cd:
        c = cycle_cols(c, w_cd)
    if d.cols < w_cd:
        d = cycle_cols(d, w_cd)
    return a, b, c, d


def fuzzy_forward(head: Tensor, spec: FuzzyPartitionSpec | None = None) -> Tensor:
    """Full pipeline from an N-wide head of truth values to one per row.

    Conjunction of the first pair, disjunction of the second, both
    harmonized to the implication width, then the sigmoidal implication
    and the product aggregate. Output is a [batch, 1] tensor in [0, 1].
    """
    spec = spec or FuzzyPartitionSpec()
    a, b, c, d = partition_and_harmonize(head, spec)
    conj = t_norm(a, b)
    disj = t_conorm(c, d)
    width = spec.implication_width
    if conj.cols < width:
        conj = cycle_cols(conj, width)
    if disj.cols < width:
        disj = cycle_cols(disj, width)
    return product_aggregate(sigmoidal_implication(conj, disj))
