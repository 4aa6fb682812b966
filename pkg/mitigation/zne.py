"""
Zero-noise extrapolation

Noise is amplified by inserting CX-CX identity pairs after two-qubit gates in
the second half of the two-qubit gate sequence; the noise factor is the ratio
of two-qubit gate counts. Energies are extrapolated linearly to factor zero.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from converters.pauli import PauliSum
from errors import DivisionByZeroGuard, FitError, NotAmplifiable, RangeError
from measurement.estimator import estimate_energy
from measurement.grouping import MeasurementPlan
from simulators.circuits import Circuit, GateTally
from simulators.statevector import NoiseModel, expectation, prepare_state, sample_plan

logger = logging.getLogger(__name__)


@dataclass
class ZnePoint:
    noise_factor: float
    energy: float
    standard_error: Optional[float] = None


@dataclass
class ZneFit:
    intercept: float
    slope: float
    intercept_se: Optional[float]  # None when the fit has no residual degrees of freedom
    r_squared: float
    rmse: float
    weighted: bool


@dataclass
class ZneSeries:
    """Noise-factor series with its linear extrapolation"""

    points: List[ZnePoint] = field(default_factory=list)
    fit: Optional[ZneFit] = None
    noiseless: Optional[float] = None

    def to_dict(self) -> Dict:
        return {
            'points': [asdict(p) for p in self.points],
            'fit': asdict(self.fit) if self.fit else None,
            'noiseless': self.noiseless,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Dict) -> 'ZneSeries':
        return cls(
            points=[ZnePoint(**p) for p in data['points']],
            fit=ZneFit(**data['fit']) if data.get('fit') else None,
            noiseless=data.get('noiseless'),
        )

    @classmethod
    def from_json(cls, text: str) -> 'ZneSeries':
        return cls.from_dict(json.loads(text))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(p.noise_factor, p.energy, p.standard_error) for p in self.points],
            columns=['lambda', 'energy', 'se'])

    def to_csv(self, path: Union[str, Path]):
        self.to_frame().to_csv(path, index=False, float_format='%.17g')

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> 'ZneSeries':
        frame = pd.read_csv(path)
        points = [ZnePoint(float(row['lambda']), float(row['energy']),
                           None if pd.isna(row['se']) else float(row['se']))
                  for _, row in frame.iterrows()]
        return cls(points=points)


def amplify_circuit(circuit: Circuit, target_factor: float) -> Tuple[Circuit, GateTally]:
    """Circuit with identity pairs bringing the two-qubit count closest to target x original

    Pairs go round-robin after the two-qubit gates whose sequence index is
    at least ceil(G/2); existing insertions are replaced.
    """
    base = circuit.base_tally()
    total = base.two_qubit
    if total == 0:
        raise NotAmplifiable("Circuit has no two-qubit gates to amplify")
    if target_factor < 1.0:
        raise RangeError(f"Noise factor must be >= 1, got {target_factor}")

    n_pairs = int(math.floor((target_factor - 1.0) * total / 2 + 0.5))
    second_half = list(range(math.ceil(total / 2), total)) or [total - 1]
    insertions: Dict[int, int] = {}
    for i in range(n_pairs):
        slot = second_half[i % len(second_half)]
        insertions[slot] = insertions.get(slot, 0) + 1

    amplified = Circuit(circuit.n_qubits, list(circuit.rotations), insertions)
    tally = amplified.tally()
    logger.debug(f"Amplified {total} -> {tally.two_qubit} two-qubit gates (target factor {target_factor})")
    return amplified, tally


def noise_factor(original: GateTally, amplified: GateTally) -> float:
    if original.two_qubit < 1:
        raise DivisionByZeroGuard("Noise factor is undefined without two-qubit gates")
    return amplified.two_qubit / original.two_qubit


def _linear_fit(lam: np.ndarray, energy: np.ndarray, se: Optional[np.ndarray]) -> ZneFit:
    design = np.column_stack([np.ones_like(lam), lam])
    if se is not None:
        weights = 1.0 / se ** 2
        root = np.sqrt(weights)
        beta, *_ = np.linalg.lstsq(design * root[:, None], energy * root, rcond=None)
        covariance = np.linalg.inv(design.T @ (design * weights[:, None]))
        intercept_se = float(np.sqrt(covariance[0, 0]))
    else:
        beta, *_ = np.linalg.lstsq(design, energy, rcond=None)
        dof = lam.size - 2
        if dof > 0:
            residual_variance = float(np.sum((energy - design @ beta) ** 2) / dof)
            covariance = residual_variance * np.linalg.inv(design.T @ design)
            intercept_se = float(np.sqrt(covariance[0, 0]))
        else:
            intercept_se = None

    residuals = energy - design @ beta
    ss_res = float(np.sum(residuals ** 2))
    ss_tot = float(np.sum((energy - energy.mean()) ** 2))
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res == 0.0 else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return ZneFit(
        intercept=float(beta[0]),
        slope=float(beta[1]),
        intercept_se=intercept_se,
        r_squared=r_squared,
        rmse=float(np.sqrt(np.mean(residuals ** 2))),
        weighted=se is not None,
    )


def _format_se(se: Optional[float]) -> str:
    return 'n/a' if se is None else f"{se:.6f}"


def zne_extrapolate(points: Sequence[Union[ZnePoint, Tuple]], weighted: bool = True) -> ZneSeries:
    """Linear extrapolation of energy to noise factor zero

    Weighted least squares (weights 1/SE^2) when ``weighted`` and every point
    carries a positive SE, ordinary least squares otherwise.
    """
    points = [p if isinstance(p, ZnePoint) else ZnePoint(*p) for p in points]
    lam = np.array([p.noise_factor for p in points], dtype=float)
    energy = np.array([p.energy for p in points], dtype=float)
    if np.unique(lam).size < 2:
        raise FitError(f"Need at least two distinct noise factors, got {sorted(set(lam.tolist()))}")
    if np.any(lam < 1.0):
        raise RangeError(f"Noise factors must be >= 1, got {lam.tolist()}")

    se = None
    if weighted:
        errors = [p.standard_error for p in points]
        if all(e is not None and e > 0 for e in errors):
            se = np.array(errors, dtype=float)
        else:
            logger.warning("Missing or zero standard errors; falling back to ordinary least squares")

    fit = _linear_fit(lam, energy, se)
    logger.info(f"ZNE fit: E0 = {fit.intercept:.6f} +/- {_format_se(fit.intercept_se)}, slope {fit.slope:.6f}, "
                f"R^2 = {fit.r_squared:.4f}, RMSE = {fit.rmse:.2e}")
    return ZneSeries(points=points, fit=fit)


def run_zne(circuit: Circuit, occupied: Sequence[int], plan: MeasurementPlan, noise: NoiseModel,
            factors: Sequence[float], seed: int = 0, weighted: bool = True,
            threads: int = 1) -> ZneSeries:
    """Amplify, sample every retained group, estimate and extrapolate"""
    base = circuit.base_tally()
    points = []
    for index, target in enumerate(factors):
        amplified, tally = amplify_circuit(circuit, target)
        factor = noise_factor(base, tally)
        # noiseless points share their shot streams, so they coincide exactly
        key = ('zne',) if noise.is_noiseless else ('zne', index)
        counts = sample_plan(amplified, occupied, plan, noise, seed, threads, key=key)
        energy, standard_error = estimate_energy(counts, plan, threads)
        points.append(ZnePoint(factor, energy, standard_error))
        logger.info(f"ZNE point {index + 1}/{len(factors)}: lambda={factor:.4f} "
                    f"({tally.two_qubit} two-qubit gates), E = {energy:.6f} +/- {standard_error:.6f}")

    series = zne_extrapolate(points, weighted)
    measured: PauliSum = plan.to_sum()
    series.noiseless = expectation(prepare_state(circuit, occupied), measured)
    return series
