"""Nullifier sets, the local-quadrature transformation, and witness reports.

A nullifier row is the operator sum_k (coeff_q[k] q_k + coeff_p[k] p_k).
Variances are computed as Var(c) = <c^dag c> - |<c>|^2 =
conj(c)^T (Sigma + i Omega / 2) c with c the stacked (q, p) coefficient
vector; the commutator term i Omega / 2 is what makes the exact nullifiers
(p - Z q) of a graph state have literally zero variance.  For real
(quadrature-pure) rows it drops out and the variance is the classical
c^T Sigma c that homodyne statistics estimate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .graphstate import (GraphState, GraphStateError, apply, covariance,
                         gate_rotation, omega)


@dataclass(frozen=True)
class NullifierSet:
    """Rows of linear nullifiers: coeff_q, coeff_p with shape (rows, n)."""

    coeff_q: np.ndarray
    coeff_p: np.ndarray

    def __post_init__(self):
        cq = np.asarray(self.coeff_q)
        cp = np.asarray(self.coeff_p)
        if cq.shape != cp.shape or cq.ndim != 2:
            raise GraphStateError("coefficient blocks must share a (rows, n) shape")
        object.__setattr__(self, "coeff_q", cq)
        object.__setattr__(self, "coeff_p", cp)

    @property
    def n_rows(self) -> int:
        return self.coeff_q.shape[0]

    @property
    def n_modes(self) -> int:
        return self.coeff_q.shape[1]

    def stacked(self) -> np.ndarray:
        """(rows, 2n) coefficients in the (q..., p...) ordering."""
        return np.concatenate([self.coeff_q, self.coeff_p], axis=1)

    def quadrature_pure(self) -> bool:
        """True if every row touches only q or only p."""
        zq = np.all(self.coeff_q == 0, axis=1)
        zp = np.all(self.coeff_p == 0, axis=1)
        return bool(np.all(zq | zp))


def exact_nullifiers(state: GraphState) -> NullifierSet:
    """The defining set (p - Z q) of a graph state; zero variance in theory."""
    n = state.n_modes
    return NullifierSet(-state.z, np.eye(n, dtype=complex))


def phi_transform(state: GraphState) -> GraphState:
    """Quarter phase delay on every mode: R(pi/4)^(x n)."""
    out = state
    for k in range(state.n_modes):
        out = apply(out, gate_rotation(np.pi / 4, k, state.n_modes))
    return out


def quadrature_nullifiers(v: np.ndarray) -> NullifierSet:
    """Local position/momentum nullifiers of the phase-delayed state.

    Rows: the (I - V) p block followed by the (I + V) q block; each row is
    quadrature-pure and supported on node j and its V-neighborhood.  The
    stacked set has 2n rows of rank n per block (rank 2n overall).
    """
    v = np.asarray(v, dtype=float)
    n = v.shape[0]
    if np.abs(v @ v - np.eye(n)).max() > 1e-6:
        raise GraphStateError("graph must be self-inverse (V^2 = I)")
    zeros = np.zeros((n, n))
    coeff_q = np.concatenate([zeros, np.eye(n) + v], axis=0)
    coeff_p = np.concatenate([np.eye(n) - v, zeros], axis=0)
    return NullifierSet(coeff_q, coeff_p)


def nullifier_variances(state: GraphState, nulls: NullifierSet) -> np.ndarray:
    """Variance of each nullifier row on the state."""
    if nulls.n_modes != state.n_modes:
        raise GraphStateError(
            f"nullifiers act on {nulls.n_modes} modes, state has {state.n_modes}")
    sigma = covariance(state) + 0.5j * omega(state.n_modes)
    c = nulls.stacked()
    var = np.einsum("ri,ij,rj->r", c.conj(), sigma, c)
    return var.real


def vacuum_variances(nulls: NullifierSet) -> np.ndarray:
    """Same rows evaluated on the vacuum: the product-state baseline."""
    n = nulls.n_modes
    sigma = 0.5 * np.eye(2 * n) + 0.5j * omega(n)
    c = nulls.stacked()
    return np.einsum("ri,ij,rj->r", c.conj(), sigma, c).real


def verify_quarter_delay_transform(v: np.ndarray, r: float, tol: float = 1e-9) -> dict:
    """Verify the local-nullifier transformation on a self-inverse graph.

    Builds Z = i sech(2r) I + tanh(2r) V, applies the quarter phase delays
    and asserts the closed form i cosh(2r) I + i sinh(2r) V, plus the uniform
    reweighting of edges (factor i cosh 2r) and self-loops (factor cosh^2 2r).
    """
    v = np.asarray(v, dtype=float)
    n = v.shape[0]
    if v.shape != (n, n) or np.abs(v - v.T).max() > 1e-12:
        raise GraphStateError("graph must be real symmetric")
    tr = abs(np.trace(v))
    self_inv = np.abs(v @ v - np.eye(n)).max()
    if tr > 1e-8 or self_inv > 1e-6:
        raise GraphStateError(
            "graph does not meet the transformation preconditions: need a "
            f"trace-zero, self-inverse graph (|tr| = {tr:.3e}, "
            f"|V^2 - I| = {self_inv:.3e})")
    z_in = 1j / np.cosh(2 * r) * np.eye(n) + np.tanh(2 * r) * v
    state = GraphState(z_in, np.zeros(2 * n))
    z_out = phi_transform(state).z
    z_expect = 1j * np.cosh(2 * r) * np.eye(n) + 1j * np.sinh(2 * r) * v
    dev = np.abs(z_out - z_expect).max()

    off = ~np.eye(n, dtype=bool)
    edges = np.abs(v[off]) > 1e-8
    if edges.any():
        ratios = z_out[off][edges] / z_in[off][edges]
        edge_factor = complex(ratios.mean())
        edge_spread = float(np.abs(ratios - edge_factor).max())
    else:
        edge_factor, edge_spread = None, 0.0
    # the self-loop reweighting claim concerns the hollow part of the graph;
    # positions where V itself has a diagonal entry are not cluster self-loops
    hollow = np.abs(np.diag(v)) < 1e-8
    if hollow.any():
        loop_ratios = np.diag(z_out)[hollow] / np.diag(z_in)[hollow]
        loop_factor = complex(loop_ratios.mean())
        loop_spread = float(np.abs(loop_ratios - loop_factor).max())
    else:
        loop_factor, loop_spread = None, 0.0

    passed = dev <= tol and edge_spread <= tol and loop_spread <= tol
    if edge_factor is not None:
        passed = passed and abs(edge_factor - 1j * np.cosh(2 * r)) <= tol
    if loop_factor is not None:
        passed = passed and abs(loop_factor - np.cosh(2 * r) ** 2) <= 1e-6
    return {
        "passed": bool(passed),
        "max_deviation": float(dev),
        "edge_factor": edge_factor,
        "edge_spread": edge_spread,
        "selfloop_factor": loop_factor,
        "selfloop_spread": loop_spread,
        "r": r,
    }


# -- sampling and the two-setting witness protocol ---------------------------


def sample_homodyne_dataset(state: GraphState, setting: str, shots: int,
                            seed=None, path=None) -> np.ndarray:
    """Draw homodyne shots with every mode measured in one common basis.

    setting "q" or "p"; rows are shots, columns are modes.  Sampling uses a
    Cholesky factor of the marginal covariance with a 1e-12 jitter retry.
    """
    if setting not in ("q", "p"):
        raise GraphStateError("setting must be 'q' or 'p'")
    if shots < 1:
        raise GraphStateError("need at least one shot")
    n = state.n_modes
    sl = slice(0, n) if setting == "q" else slice(n, 2 * n)
    sigma = covariance(state)[sl, sl]
    mean = state.mean[sl]
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        chol = np.linalg.cholesky(sigma + 1e-12 * np.eye(n))
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) \
        else seed
    data = mean + rng.standard_normal((shots, n)) @ chol.T
    if path is not None:
        header = ",".join(f"mode_{k}" for k in range(n))
        np.savetxt(path, data, delimiter=",", header=header, comments="")
    return data


@dataclass(frozen=True)
class WitnessReport:
    variances: np.ndarray
    baselines: np.ndarray
    thresholds: np.ndarray
    verdicts: np.ndarray
    shots: int
    threshold_factor: float

    @property
    def passed(self) -> bool:
        return bool(self.verdicts.all())

    def to_json(self) -> str:
        return json.dumps({
            "variances": self.variances.tolist(),
            "vacuum_baselines": self.baselines.tolist(),
            "thresholds": self.thresholds.tolist(),
            "verdicts": self.verdicts.tolist(),
            "passed": self.passed,
            "shots": self.shots,
            "threshold_factor": self.threshold_factor,
        })

    def table(self) -> str:
        lines = [f"{'row':>4} {'variance':>12} {'threshold':>12} verdict"]
        for k, (v, t, ok) in enumerate(zip(self.variances, self.thresholds,
                                           self.verdicts)):
            lines.append(f"{k:>4} {v:12.6f} {t:12.6f} {'pass' if ok else 'FAIL'}")
        lines.append(f"overall: {'pass' if self.passed else 'FAIL'} "
                     f"({self.shots} shots, factor {self.threshold_factor})")
        return "\n".join(lines)


def witness_from_variances(variances, nulls: NullifierSet,
                           threshold_factor: float = 0.5,
                           shots: int = 0) -> WitnessReport:
    """Verdict: every row variance below factor * its vacuum baseline."""
    variances = np.asarray(variances, dtype=float)
    baselines = vacuum_variances(nulls)
    thresholds = threshold_factor * baselines
    return WitnessReport(variances, baselines, thresholds,
                         variances < thresholds, shots, threshold_factor)


def _load_csv(path, n_modes: int, min_shots: int) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
    expected = ",".join(f"mode_{k}" for k in range(n_modes))
    if header != expected:
        raise GraphStateError(
            f"malformed CSV {path}: header {header!r}, expected {expected!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] < min_shots:
        raise GraphStateError(
            f"insufficient shots in {path}: {data.shape[0]} < {min_shots}")
    if data.shape[1] != n_modes:
        raise GraphStateError(f"expected {n_modes} columns in {path}")
    return data


def ingest_samples(q_path, p_path, nulls: NullifierSet,
                   threshold_factor: float = 0.5,
                   min_shots: int = 100):
    """Estimate quadrature-pure nullifier variances from two-setting data.

    Returns (empirical covariances dict, WitnessReport); rows built from q
    coefficients use the q-setting file and likewise for p.
    """
    if not nulls.quadrature_pure():
        raise GraphStateError(
            "two-setting data can only evaluate quadrature-pure nullifiers")
    n = nulls.n_modes
    data_q = _load_csv(q_path, n, min_shots)
    data_p = _load_csv(p_path, n, min_shots)
    variances = np.zeros(nulls.n_rows)
    for k in range(nulls.n_rows):
        if np.any(nulls.coeff_p[k] != 0):
            vals = data_p @ nulls.coeff_p[k].real
        else:
            vals = data_q @ nulls.coeff_q[k].real
        variances[k] = vals.var(ddof=1)
    shots = min(data_q.shape[0], data_p.shape[0])
    report = witness_from_variances(variances, nulls, threshold_factor, shots)
    cov = {"q": np.cov(data_q.T), "p": np.cov(data_p.T)}
    return cov, report
