"""Exact solver for the joint clustering-and-classification objective.

Positives are partitioned into L clusters; each cluster trains a budgeted
sparse SVM against all negatives (negatives are copied into every
cluster), and an optional penalty charges squared distances between
same-cluster positives. Enumerating all assignments gives the global
optimum at desk scale, which serves as the ground-truth oracle for the
alternating trainer.

Cluster ids are 0-based throughout. With a shared budget the enumeration
runs over canonical assignments only (clusters labeled in order of first
appearance), which quotients out the L! label permutations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationSizeError, InfeasibilityError
from .svm import (LinearModel, SvmConstrainedParams, SvmSolution,
                  hinge_slacks, train_constrained)

DEFAULT_ENUMERATION_CAP = 10 ** 6

#: Model a cluster falls back to when it holds no positives: beta = 0 with
#: the offset pushed to the negative side, so every negative slack is 0
#: and the cluster contributes nothing to the objective.
EMPTY_CLUSTER_MODEL = None  # built lazily per dimension


def empty_cluster_model(D: int) -> LinearModel:
    return LinearModel(beta=np.zeros(D), beta0=-1.0)


@dataclass(frozen=True)
class JccInstance:
    positives: np.ndarray
    negatives: np.ndarray
    L: int
    params: SvmConstrainedParams
    intra_weight: float = 0.0
    per_cluster_T: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "positives",
                           np.atleast_2d(np.asarray(self.positives, dtype=float)))
        object.__setattr__(self, "negatives",
                           np.atleast_2d(np.asarray(self.negatives, dtype=float)))
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if self.intra_weight < 0:
            raise ValueError("intra_weight must be nonnegative")
        if self.per_cluster_T is not None and len(self.per_cluster_T) != self.L:
            raise ValueError("per_cluster_T needs one budget per cluster")

    @property
    def n_pos(self) -> int:
        return self.positives.shape[0]

    @property
    def dim(self) -> int:
        return self.positives.shape[1]

    def budget_for(self, cluster: int) -> float:
        if self.per_cluster_T is not None:
            return self.per_cluster_T[cluster]
        return self.params.T

    def params_for(self, cluster: int) -> SvmConstrainedParams:
        return SvmConstrainedParams(lambda_plus=self.params.lambda_plus,
                                    lambda_minus=self.params.lambda_minus,
                                    T=self.budget_for(cluster))


@dataclass(frozen=True)
class JccSolution:
    assignment: np.ndarray
    models: tuple[LinearModel, ...]
    objective: float
    per_cluster_objectives: tuple[float, ...]
    intra_penalty: float


def load_instance(path) -> JccInstance:
    """Instance files are JSON: positives, negatives, L, lambda_plus,
    lambda_minus, T, rho_c."""
    with open(path) as fh:
        raw = json.load(fh)
    params = SvmConstrainedParams(lambda_plus=float(raw["lambda_plus"]),
                                  lambda_minus=float(raw["lambda_minus"]),
                                  T=float(raw["T"]))
    return JccInstance(positives=np.asarray(raw["positives"], dtype=float),
                       negatives=np.asarray(raw["negatives"], dtype=float),
                       L=int(raw["L"]), params=params,
                       intra_weight=float(raw.get("rho_c", 0.0)))


def save_instance(inst: JccInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump({"positives": inst.positives.tolist(),
                   "negatives": inst.negatives.tolist(),
                   "L": inst.L,
                   "lambda_plus": inst.params.lambda_plus,
                   "lambda_minus": inst.params.lambda_minus,
                   "T": inst.params.T,
                   "rho_c": inst.intra_weight}, fh, indent=1)


def intra_cluster_penalty(inst: JccInstance, assignment) -> float:
    """Weighted sum of squared distances over same-cluster unordered pairs.

    (A double sum over ordered pairs would simply double this value.)
    """
    if inst.intra_weight == 0.0:
        return 0.0
    assignment = np.asarray(assignment)
    total = 0.0
    for l in range(inst.L):
        pts = inst.positives[assignment == l]
        if len(pts) < 2:
            continue
        sq = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        total += sq[np.triu_indices(len(pts), k=1)].sum()
    return inst.intra_weight * total


def cluster_objective(inst: JccInstance, cluster: int, members: np.ndarray,
                      model: LinearModel) -> float:
    """Recompute one cluster's objective with slacks at their tight values."""
    lam_p, lam_m = inst.params.lambda_plus, inst.params.lambda_minus
    obj = 0.5 * float(model.beta @ model.beta)
    if members.size:
        xi = hinge_slacks(model, inst.positives[members], np.ones(members.size))
        obj += lam_p * float(xi.sum())
    zeta = hinge_slacks(model, inst.negatives, -np.ones(inst.negatives.shape[0]))
    return obj + lam_m * float(zeta.sum())


def jcc_objective(inst: JccInstance, assignment, models) -> float:
    """Full objective for a given assignment and per-cluster models.

    Negative slacks are charged once per cluster; each model must respect
    its l1 budget (within a small tolerance) or the point is infeasible.
    """
    assignment = np.asarray(assignment)
    if assignment.shape != (inst.n_pos,):
        raise ValueError("assignment length must match the positive count")
    if len(models) != inst.L:
        raise ValueError(f"expected {inst.L} models, got {len(models)}")
    total = 0.0
    for l, model in enumerate(models):
        l1 = float(np.abs(model.beta).sum())
        budget = inst.budget_for(l)
        if l1 > budget + 1e-6:
            raise InfeasibilityError(
                f"cluster {l}: ||beta||_1 = {l1:.6g} exceeds budget {budget:.6g}")
        members = np.flatnonzero(assignment == l)
        total += cluster_objective(inst, l, members, model)
    return total + intra_cluster_penalty(inst, assignment)


def canonical_assignments(n: int, max_blocks: int):
    """Yield assignments of n items in lexicographic order, restricted so
    cluster labels appear in order of first use (restricted growth)."""
    a = np.zeros(n, dtype=np.int64)

    def rec(i, used):
        if i == n:
            yield a.copy()
            return
        for v in range(min(used + 1, max_blocks)):
            a[i] = v
            yield from rec(i + 1, max(used, v + 1))

    yield from rec(0, 0)


def all_assignments(n: int, blocks: int):
    a = np.zeros(n, dtype=np.int64)

    def rec(i):
        if i == n:
            yield a.copy()
            return
        for v in range(blocks):
            a[i] = v
            yield from rec(i + 1)

    yield from rec(0)


class _ClusterTrainer:
    """Memoizes budgeted SVM trainings by cluster content (and budget)."""

    def __init__(self, inst: JccInstance, tol: float):
        self.inst = inst
        self.tol = tol
        self.cache: dict = {}

    def train(self, members: tuple[int, ...], cluster: int) -> tuple[LinearModel, float]:
        budget = self.inst.budget_for(cluster)
        if not members:
            model = empty_cluster_model(self.inst.dim)
            return model, 0.0
        key = (members, budget)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        sol: SvmSolution = train_constrained(
            self.inst.positives[list(members)], self.inst.negatives,
            SvmConstrainedParams(self.inst.params.lambda_plus,
                                 self.inst.params.lambda_minus, budget),
            tol=self.tol)
        result = (sol.model, sol.objective)
        self.cache[key] = result
        return result


def solve_exact(inst: JccInstance, enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
                tol: float = 1e-8) -> JccSolution:
    """Global optimum by enumeration over cluster assignments.

    Per-cluster trainings decouple once the assignment is fixed, so each
    candidate is scored as the sum of memoized cluster optima plus the
    intra-cluster penalty. Objective ties keep the lexicographically
    smallest assignment. Empty clusters are allowed and contribute zero.
    """
    n = inst.n_pos
    if inst.L ** n > enumeration_cap:
        raise EnumerationSizeError(
            f"{inst.L}^{n} assignments exceed the cap {enumeration_cap}; "
            f"use the alternating trainer instead")
    shared_budget = inst.per_cluster_T is None or len(set(inst.per_cluster_T)) == 1
    gen = (canonical_assignments(n, inst.L) if shared_budget
           else all_assignments(n, inst.L))
    trainer = _ClusterTrainer(inst, tol)
    best = None
    for assignment in gen:
        objs, models = [], []
        for l in range(inst.L):
            members = tuple(int(i) for i in np.flatnonzero(assignment == l))
            model, obj = trainer.train(members, l)
            models.append(model)
            objs.append(obj)
        total = sum(objs) + intra_cluster_penalty(inst, assignment)
        if best is None or total < best[0] - 1e-15:
            best = (total, assignment, tuple(models), tuple(objs))
    total, assignment, models, objs = best
    return JccSolution(assignment=assignment, models=models, objective=float(total),
                       per_cluster_objectives=tuple(float(o) for o in objs),
                       intra_penalty=float(intra_cluster_penalty(inst, assignment)))


@dataclass(frozen=True)
class EquivalenceReport:
    """Numerical comparison of the assignment-form and the binary-variable
    bookkeeping of the same optimum."""

    jcc_objective: float
    mip_objective: float
    difference: float
    max_unassigned_slack: float
    min_big_m: float
    passed: bool
    detail: str


def verify_mip_equivalence(inst: JccInstance, tol: float = 1e-8,
                           enumeration_cap: int = DEFAULT_ENUMERATION_CAP) -> EquivalenceReport:
    """Check that the binary-assignment restatement prices the optimum
    identically.

    In the binary form every positive carries a slack for every cluster;
    a big-M constant slackens the margin constraints of the clusters a
    sample is not assigned to, so at an optimum those slacks drop to zero
    once M clears the worst margin deficit. Three independently derived
    totals must agree within `tol`:

    * the enumeration optimum (sum of per-cluster QP optima),
    * the assignment-form bookkeeping rebuilt from tight slacks,
    * the binary-form bookkeeping, summing slacks over every
      (sample, cluster) pair with M = smallest adequate constant.

    M is only ever reported, never used to solve anything.
    """
    sol = solve_exact(inst, enumeration_cap=enumeration_cap)
    assignment = sol.assignment
    solver_total = sol.objective
    jcc_total = jcc_objective(inst, assignment, sol.models)

    lam_p = inst.params.lambda_plus
    min_big_m = 0.0
    deficits_by_cluster = []
    for l, model in enumerate(sol.models):
        others = np.flatnonzero(assignment != l)
        deficits = (hinge_slacks(model, inst.positives[others], np.ones(others.size))
                    if others.size else np.zeros(0))
        deficits_by_cluster.append(deficits)
        if deficits.size:
            min_big_m = max(min_big_m, float(deficits.max()))

    mip_total = sol.intra_penalty
    max_unassigned = 0.0
    for l, model in enumerate(sol.models):
        members = np.flatnonzero(assignment == l)
        mip_total += cluster_objective(inst, l, members, model)
        # minimal feasible slack of an unassigned copy under the big-M row
        unassigned = np.maximum(0.0, deficits_by_cluster[l] - min_big_m)
        mip_total += lam_p * float(unassigned.sum())
        if unassigned.size:
            max_unassigned = max(max_unassigned, float(unassigned.max()))

    difference = max(abs(jcc_total - mip_total), abs(solver_total - jcc_total))
    passed = difference <= tol and max_unassigned <= tol
    detail = ("bookkeepings agree" if passed else
              f"objective difference {difference:.3e} exceeds {tol:.1e}")
    return EquivalenceReport(jcc_objective=jcc_total, mip_objective=mip_total,
                             difference=difference,
                             max_unassigned_slack=max_unassigned,
                             min_big_m=min_big_m, passed=passed, detail=detail)
