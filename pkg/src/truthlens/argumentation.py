"""Dialectic justification of an evaluation report: a three-level argument
tree (trusted root, one skeptic per feature, defenses from the matched
alteration records), the U/D marking recursion and the Warranted verdict,
with templated natural-language atoms.

The construction is shaped so the verdict coincides with the metric: the
root stays undefeated exactly when every feature was truthful, and the
undefeated skeptics are exactly the untruthful features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .truthfulness import AlterRecord, EvaluationReport, FeatureVerdict


def fmt_number(v: float) -> str:
    """Render a value the way a person would write it: integers without a
    decimal point, everything else in shortest round-trip form."""
    v = float(v)
    if math.isfinite(v) and v == int(v):
        return str(int(v))
    return repr(v)


def fmt_signed(v: float) -> str:
    return f"+{fmt_number(v)}" if v >= 0 else fmt_number(v)


def fmt_percent(p: float) -> str:
    # round before trimming: 0.93*100 is 93.00000000000001 in binary floats
    return fmt_number(round(p * 100, 10)) + "%"


@dataclass(frozen=True)
class Atom:
    """A ground statement usable in argument supports and claims."""

    label: str
    text: str

    def __str__(self) -> str:
        return self.label


def atom_a() -> Atom:
    return Atom("a", "The explanation is untrusted")


def atom_b() -> Atom:
    return Atom("b", "The explanation is trusted")


def atom_c(name: str) -> Atom:
    return Atom(f"c_{name}", f"The importance z_{name} is untruthful")


def atom_d(name: str) -> Atom:
    return Atom(f"d_{name}", f"The importance z_{name} is truthful")


def _alteration_phrase(record: AlterRecord, name: str) -> str:
    if record.shift is not None:
        return f"{name}'s value by {fmt_signed(record.shift)}"
    return f"{name}'s value {fmt_number(record.value_from)} to {fmt_number(record.value_to)}"


def atom_e(record: AlterRecord, name: str, score: float) -> Atom:
    alt = record.alt.label
    if record.shift is not None:
        phrase = f"{name}'s value by {fmt_signed(record.shift)}"
    else:
        phrase = f"{name}'s value from {fmt_number(record.value_from)} to {fmt_number(record.value_to)}"
    return Atom(
        f"e_{name},{alt}",
        f"The model's behaviour by altering {phrase} ({alt}) "
        f"is not according to its importance z_{name}={fmt_number(score)}",
    )


def atom_f(record: AlterRecord, name: str, score: float) -> Atom:
    alt = record.alt.label
    return Atom(
        f"f_{name},{alt}",
        f"The evaluation of the alteration of {_alteration_phrase(record, name)} ({alt}) "
        f"was performed and the model's behaviour was as expected {record.exp.label} "
        f"({fmt_percent(record.p_orig)} to {fmt_percent(record.p_alt)}), "
        f"according to its importance z_{name}={fmt_number(score)}",
    )


@dataclass(frozen=True)
class Literal:
    """An atom or its negation."""

    atom: Atom
    negated: bool = False

    @property
    def label(self) -> str:
        return ("¬" if self.negated else "") + self.atom.label

    @property
    def text(self) -> str:
        return ("NOT: " if self.negated else "") + self.atom.text


@dataclass(frozen=True)
class Implication:
    """A rule formula antecedent → consequent used inside supports."""

    antecedent: Literal
    consequent: Literal

    @property
    def label(self) -> str:
        return f"{self.antecedent.label} → {self.consequent.label}"

    @property
    def text(self) -> str:
        return self.label


@dataclass(frozen=True)
class Argument:
    """⟨Φ, α⟩: a support set of formulas entailing a claim."""

    name: str
    support: tuple
    claim: Literal

    def __post_init__(self):
        if not self.support:
            raise ValueError(f"argument {self.name} has an empty support")


@dataclass
class ArgNode:
    argument: Argument
    children: list["ArgNode"] = field(default_factory=list)


class Verdict(str, Enum):
    WARRANTED = "Warranted"
    UNWARRANTED = "Unwarranted"


@dataclass
class ArgTree:
    root: ArgNode
    marks: dict[str, str] = field(default_factory=dict)
    verdict: Verdict = Verdict.WARRANTED

    def node(self, name: str) -> ArgNode:
        def walk(n: ArgNode):
            if n.argument.name == name:
                return n
            for c in n.children:
                found = walk(c)
                if found:
                    return found
            return None

        found = walk(self.root)
        if found is None:
            raise KeyError(name)
        return found


def mark(tree: ArgTree) -> dict[str, str]:
    """Bottom-up marking: leaves are U; a node is D iff some child is U."""
    marks: dict[str, str] = {}

    def walk(node: ArgNode) -> str:
        child_marks = [walk(c) for c in node.children]
        m = "D" if "U" in child_marks else "U"
        marks[node.argument.name] = m
        return m

    walk(tree.root)
    return marks


def judge(tree: ArgTree) -> Verdict:
    """Warranted iff the root is undefeated."""
    return Verdict.WARRANTED if mark(tree)[tree.root.argument.name] == "U" else Verdict.UNWARRANTED


def _skeptic(verdict: FeatureVerdict) -> ArgNode:
    c = atom_c(verdict.name)
    support: list = [Literal(c), Implication(Literal(c), Literal(atom_b(), negated=True))]
    node = ArgNode(
        Argument(f"S[{verdict.name}]", tuple(support), Literal(atom_b(), negated=True))
    )
    if verdict.truthful:
        d = atom_d(verdict.name)
        for record in verdict.records:
            f = atom_f(record, verdict.name, verdict.score)
            defense = Argument(
                f"D[{verdict.name},{record.alt.label}]",
                (
                    Literal(f),
                    Implication(Literal(f), Literal(d)),
                    Implication(Literal(d), Literal(c, negated=True)),
                ),
                Literal(c, negated=True),
            )
            node.children.append(ArgNode(defense))
    else:
        # an undefended record leaves the skeptic undefeated, so no defense
        # is attached even for the record that matched
        extra = [
            atom_e(record, verdict.name, verdict.score)
            for record in verdict.records
            if not record.matched
        ]
        node.argument = Argument(
            node.argument.name,
            tuple(support + [Literal(e) for e in extra]),
            node.argument.claim,
        )
    return node


def build_tree(report: EvaluationReport) -> ArgTree:
    """Instantiate the argument tree for one evaluation report.

    The root claims the explanation is trusted; each feature contributes a
    skeptic attacking that claim; each skeptic of a truthful feature is
    attacked by one defense per alteration record, built from the f-atom
    of that record. Skeptics of untruthful features carry the e-atoms of
    their unmatched records and receive no defenses.
    """
    root = ArgNode(Argument("R", (Literal(atom_b()),), Literal(atom_b())))
    for verdict in report.verdicts:
        root.children.append(_skeptic(verdict))
    tree = ArgTree(root)
    tree.marks = mark(tree)
    tree.verdict = judge(tree)
    return tree


def render_text(tree: ArgTree) -> str:
    """One formula per line, tree-indented, with the U/D mark per node."""
    lines: list[str] = []

    def walk(node: ArgNode, depth: int):
        pad = "  " * depth
        a = node.argument
        lines.append(f"{pad}[{tree.marks[a.name]}] {a.name} claims {a.claim.label}")
        for formula in a.support:
            lines.append(f"{pad}    {formula.label}: {formula.text}" if isinstance(formula, Literal)
                         else f"{pad}    {formula.label}")
        for child in node.children:
            walk(child, depth + 1)

    walk(tree.root, 0)
    lines.append(f"Judge: {tree.verdict.value}")
    return "\n".join(lines)


def to_json_dict(tree: ArgTree) -> dict:
    """{nodes, edges, marks, verdict} with rendered formulas."""
    nodes = []
    edges = []

    def walk(node: ArgNode):
        a = node.argument
        nodes.append(
            {
                "name": a.name,
                "claim": a.claim.label,
                "support": [
                    {"label": f.label, "text": f.text} for f in a.support
                ],
                "mark": tree.marks[a.name],
            }
        )
        for child in node.children:
            edges.append([a.name, child.argument.name])
            walk(child)

    walk(tree.root)
    return {
        "nodes": nodes,
        "edges": edges,
        "marks": dict(sorted(tree.marks.items())),
        "verdict": tree.verdict.value,
    }


def undefeated_skeptics(tree: ArgTree) -> list[str]:
    """Names of skeptic nodes marked U (the features left untruthful)."""
    return [
        child.argument.name
        for child in tree.root.children
        if tree.marks[child.argument.name] == "U"
    ]
