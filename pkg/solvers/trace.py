"""
Per-iteration solver records with JSON and CSV export
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd


@dataclass
class IterationRecord:
    iteration: int
    energy: float
    selected: Optional[str] = None
    pool_index: Optional[int] = None
    gradient: float = 0.0
    gradient_norm: float = 0.0
    parameters: List[float] = field(default_factory=list)
    optimizer_iterations: int = 0
    optimizer_restarts: int = 0
    basis_size: Optional[int] = None


@dataclass
class SolverTrace:
    """Iteration history of one solver run"""

    solver: str
    n_qubits: int
    reference_energy: float
    records: List[IterationRecord] = field(default_factory=list)
    generators: List[Dict] = field(default_factory=list)
    final_energy: Optional[float] = None
    convergence_reason: str = 'running'
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def energies(self) -> List[float]:
        return [r.energy for r in self.records]

    @property
    def parameters(self) -> List[float]:
        return list(self.records[-1].parameters) if self.records else []

    def add(self, record: IterationRecord):
        self.records.append(record)
        self.final_energy = record.energy

    def to_dict(self) -> Dict:
        return {
            'solver': self.solver,
            'n_qubits': self.n_qubits,
            'reference_energy': self.reference_energy,
            'final_energy': self.final_energy,
            'convergence_reason': self.convergence_reason,
            'generators': self.generators,
            'records': [asdict(r) for r in self.records],
            'timings': self.timings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Dict) -> 'SolverTrace':
        trace = cls(data['solver'], data['n_qubits'], data['reference_energy'],
                    generators=list(data.get('generators', [])),
                    convergence_reason=data.get('convergence_reason', 'running'),
                    timings=dict(data.get('timings', {})))
        for record in data.get('records', []):
            trace.add(IterationRecord(**record))
        trace.final_energy = data.get('final_energy', trace.final_energy)
        return trace

    def to_frame(self) -> pd.DataFrame:
        rows = [{
            'iteration': r.iteration,
            'energy': r.energy,
            'selected': r.selected,
            'gradient': r.gradient,
            'gradient_norm': r.gradient_norm,
            'n_parameters': len(r.parameters),
            'basis_size': r.basis_size,
        } for r in self.records]
        return pd.DataFrame(rows, columns=['iteration', 'energy', 'selected', 'gradient',
                                           'gradient_norm', 'n_parameters', 'basis_size'])

    def to_csv(self, path: Union[str, Path]):
        self.to_frame().to_csv(path, index=False, float_format='%.12f')
