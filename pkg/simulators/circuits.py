"""
Pauli-rotation circuits and their gate-level compilation

A rotation (P, phi) stands for exp(-i phi/2 P). It compiles to a basis change
(H for X, RX(pi/2) for Y), a CNOT staircase over the ascending support, RZ(phi)
on the last support qubit, and the inverse staircase and basis change. A
weight-w rotation therefore costs 2(w-1) two-qubit gates.

Identity pairs (CX followed by the same CX) can be inserted after individual
two-qubit gates for noise amplification; they never change the noiseless
action of the circuit.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Sequence, Tuple

from converters.pauli import PauliTerm

Rotation = Tuple[PauliTerm, float]
# (name, qubits, parameter)
Gate = Tuple[str, Tuple[int, ...], float]


@dataclass(frozen=True)
class GateTally:
    one_qubit: int = 0
    two_qubit: int = 0

    def __post_init__(self):
        if self.one_qubit < 0 or self.two_qubit < 0:
            raise ValueError(f"Gate counts must be non-negative, got {self}")

    def __add__(self, other: 'GateTally') -> 'GateTally':
        return GateTally(self.one_qubit + other.one_qubit, self.two_qubit + other.two_qubit)

    def to_dict(self) -> Dict:
        return {'one_qubit': self.one_qubit, 'two_qubit': self.two_qubit}


def rotation_gates(pauli: PauliTerm, angle: float) -> List[Gate]:
    """Gate sequence realising exp(-i angle/2 P) up to global phase"""
    qubits = pauli.qubits()
    if not qubits:
        return []
    basis = []
    for q in qubits:
        letter = pauli.letter(q)
        if letter == 'X':
            basis.append(('h', (q,), 0.0))
        elif letter == 'Y':
            basis.append(('rx', (q,), math.pi / 2))
    staircase = [('cx', (a, b), 0.0) for a, b in zip(qubits, qubits[1:])]
    undo_basis = [('h', g[1], 0.0) if g[0] == 'h' else ('rx', g[1], -math.pi / 2) for g in basis]
    sign = 1.0 if pauli.coeff.real >= 0 else -1.0
    return basis + staircase + [('rz', (qubits[-1],), sign * angle)] + staircase[::-1] + undo_basis


def rotation_tally(pauli: PauliTerm) -> GateTally:
    weight = pauli.weight
    if weight == 0:
        return GateTally()
    xy_letters = bin(pauli.x_mask).count('1')
    return GateTally(one_qubit=2 * xy_letters + 1, two_qubit=2 * (weight - 1))


@dataclass
class Circuit:
    """Ordered Pauli rotations plus identity-pair insertions

    ``insertions`` maps the index of a two-qubit gate in the base gate
    sequence to the number of CX-CX pairs placed right after it.
    """

    n_qubits: int
    rotations: List[Rotation] = field(default_factory=list)
    insertions: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        for pauli, _ in self.rotations:
            if pauli.n_qubits != self.n_qubits:
                raise ValueError(f"Rotation {pauli.label()} does not act on {self.n_qubits} qubits")

    def __len__(self) -> int:
        return len(self.rotations)

    def base_tally(self) -> GateTally:
        tally = GateTally()
        for pauli, _ in self.rotations:
            tally = tally + rotation_tally(pauli)
        return tally

    def tally(self) -> GateTally:
        base = self.base_tally()
        return base + GateTally(0, 2 * sum(self.insertions.values()))

    def gates(self) -> Iterator[Gate]:
        """Compiled gate stream, identity pairs included"""
        two_qubit_index = 0
        for pauli, angle in self.rotations:
            for gate in rotation_gates(pauli, angle):
                yield gate
                if gate[0] == 'cx':
                    for _ in range(self.insertions.get(two_qubit_index, 0)):
                        yield gate
                        yield gate
                    two_qubit_index += 1

    def two_qubit_gates(self) -> List[Gate]:
        return [g for pauli, angle in self.rotations for g in rotation_gates(pauli, angle) if g[0] == 'cx']

    def extend(self, rotations: Sequence[Rotation]) -> 'Circuit':
        return Circuit(self.n_qubits, list(self.rotations) + list(rotations), dict(self.insertions))

    def to_dict(self) -> Dict:
        return {
            'n_qubits': self.n_qubits,
            'rotations': [{'pauli': p.label(), 'sign': 1 if p.coeff.real >= 0 else -1, 'angle': a}
                          for p, a in self.rotations],
            'insertions': [{'after': k, 'pairs': v} for k, v in sorted(self.insertions.items())],
            'tally': self.tally().to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Dict) -> 'Circuit':
        rotations = [(PauliTerm.from_label(r['pauli'], r.get('sign', 1)), float(r['angle']))
                     for r in data['rotations']]
        insertions = {int(e['after']): int(e['pairs']) for e in data.get('insertions', [])}
        return cls(data['n_qubits'], rotations, insertions)

    @classmethod
    def from_json(cls, text: str) -> 'Circuit':
        return cls.from_dict(json.loads(text))
