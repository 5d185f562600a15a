import logging
from collections import Counter
from typing import Any, Dict, List, NamedTuple

from pydantic import Field

from ..analysis import estimate
from ..enumeration import (
    exhaustive_partition,
    exact_observables,
    gray_code_labeled_sums,
    labeled_free_observables,
    polya_free_sums,
    unlabeled_edge_counts,
)
from ..experiment import ExperimentConfig
from ..graph_state import slot_count
from ..hamiltonian import Ensemble, ModelKind, ModelParams
from ..hilbert import BasisKet, Sector, StateVector, antisymmetrize, basis, permute_ket, symmetrize
from ..mc_engine import detailed_balance_violations, sweep_parameter_grid
from ..symmetry import all_permutations, isomorphism_classes
from .base import ExperimentTool
from .csv_save import CsvSaveTool

logger = logging.getLogger(__name__)

VALIDATION_COLUMNS = ["check", "passed", "detail"]
ORACLE_BETAS = (0.0, 0.1, 0.5, 1.0, 2.0, 5.0)
MC_OBSERVABLES = ("u", "c", "s1", "chi_s1")
MC_VALIDATION_LIMIT = 7


class CheckResult(NamedTuple):
    check: str
    passed: bool
    detail: str


def _relative_gap(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else 0.0


def check_polya_counts(max_n: int = 6) -> CheckResult:
    """D(n, m) from the cycle index equals the class-table histogram."""
    for n in range(1, max_n + 1):
        counts = Counter(cls.representative.n1 for cls in isomorphism_classes(n))
        expected = [counts.get(m, 0) for m in range(slot_count(n) + 1)]
        got = list(unlabeled_edge_counts(n).coefficients)
        if got != expected:
            return CheckResult("polya_counts", False, f"n={n}: polya={got} classes={expected}")
    return CheckResult("polya_counts", True, f"n=1..{max_n}")


def check_class_counting(max_n: int = 6) -> CheckResult:
    """Σ_classes n!/|Γ| = 2^M."""
    for n in range(1, max_n + 1):
        total = sum(cls.labelings for cls in isomorphism_classes(n))
        if total != 2 ** slot_count(n):
            return CheckResult("class_counting", False, f"n={n}: {total} != 2^{slot_count(n)}")
    return CheckResult("class_counting", True, f"n=1..{max_n}")


def check_labeled_closed_form(n: int = 6, tol: float = 1e-10) -> CheckResult:
    p = ModelParams(kind=ModelKind.FREE, n=n)
    worst = 0.0
    for beta in ORACLE_BETAS:
        closed = labeled_free_observables(beta, p).point
        exact = exact_observables(beta, p, Ensemble.LABELED).point
        worst = max(worst, _relative_gap(closed.u, exact.u), _relative_gap(closed.c, exact.c))
    return CheckResult("labeled_closed_form", worst <= tol, f"n={n} max relative gap {worst:.3g}")


def check_polya_partition(n: int = 7, tol: float = 1e-10) -> CheckResult:
    p = ModelParams(kind=ModelKind.FREE, n=n)
    worst = 0.0
    for beta in ORACLE_BETAS:
        polya = polya_free_sums(beta, p).log_z
        exhaustive = exhaustive_partition(beta, p, Ensemble.UNLABELED).log_z
        worst = max(worst, abs(polya - exhaustive))
    return CheckResult("polya_partition", worst <= tol, f"n={n} max |Δ log Z| {worst:.3g}")


def check_gray_code(n: int = 5, tol: float = 1e-10) -> CheckResult:
    worst = 0.0
    for kind in ModelKind:
        p = ModelParams(kind=kind, n=n)
        for beta in ORACLE_BETAS:
            walked = gray_code_labeled_sums(beta, p)
            table = exhaustive_partition(beta, p, Ensemble.LABELED)
            worst = max(worst, abs(walked.log_z - table.log_z), _relative_gap(walked.mean_e, table.mean_e))
    return CheckResult("gray_code_walk", worst <= tol, f"n={n} max gap {worst:.3g}")


def check_detailed_balance(n: int = 4) -> CheckResult:
    failures = []
    for kind in ModelKind:
        p = ModelParams(kind=kind, n=n)
        for ensemble in Ensemble:
            bad = detailed_balance_violations(p, ensemble)
            if bad:
                failures.append(f"{kind.value}/{ensemble.value}: {len(bad)} pairs")
    detail = "; ".join(failures) if failures else f"n={n}, both models, both ensembles, q=1/3"
    return CheckResult("detailed_balance", not failures, detail)


def check_projections(n: int = 3, d: int = 2) -> CheckResult:
    """S² = S, A² = A, SA = 0 and the permutation phase is sgn(π)."""
    for ket in basis(n, d, Sector.ANTISYMMETRIC):
        v = StateVector.of(ket)
        s, a = symmetrize(v), antisymmetrize(v)
        if symmetrize(s) != s or antisymmetrize(a) != a:
            return CheckResult("projections", False, f"not idempotent on {ket.levels}")
        if not antisymmetrize(s).is_zero() or not symmetrize(a).is_zero():
            return CheckResult("projections", False, f"sectors overlap on {ket.levels}")
    all_ones = BasisKet(n, d, (1,) * slot_count(n), Sector.ANTISYMMETRIC)
    for pi in all_permutations(n):
        _, phase = permute_ket(pi, all_ones)
        if phase != pi.sign():
            return CheckResult("projections", False, f"phase {phase} != sgn {pi} on {all_ones.levels}")
    return CheckResult("projections", True, f"n={n}, D={d}")


def check_monte_carlo(config: ExperimentConfig, sigma: float, threads: int = 1) -> List[CheckResult]:
    """Short chains against exact values at every config point with n ≤ 7."""
    results = []
    grid = [(n, beta) for n, beta in config.grid() if n <= MC_VALIDATION_LIMIT]
    if not grid:
        return [CheckResult("monte_carlo", True, f"no config point with n <= {MC_VALIDATION_LIMIT}")]
    for index, ensemble in enumerate(config.ensembles()):
        template = config.chain_template(ensemble).model_copy(update={"stream": index * len(grid)})
        for record in sweep_parameter_grid(grid, template, threads=threads):
            cfg = record.config
            truth = exact_observables(cfg.beta, cfg.params, ensemble)
            exact = {
                "u": truth.point.u,
                "c": truth.point.c,
                "s1": truth.s1,
                "chi_s1": truth.chi_s1,
            }
            label = f"mc {cfg.params.kind.value} n={cfg.n} beta={cfg.beta:.6g} {ensemble.value}"
            for est in estimate(record, cfg.params):
                if est.name not in MC_OBSERVABLES:
                    continue
                target = exact[est.name]
                gap = abs(est.value - target)
                bound = sigma * est.std_error + 1e-9 * max(1.0, abs(target))
                results.append(CheckResult(
                    f"{label} {est.name}",
                    bool(gap <= bound),
                    f"estimate {est.value:.6g} ± {est.std_error:.3g}, exact {target:.6g}",
                ))
    return results


class ValidateTool(ExperimentTool):
    name: str = "Validation Tool"
    description: str = """
    Run the oracle suite: Pólya counts, class counting, closed forms against
    exhaustive sums, the Gray-code walk, exact detailed balance, projector
    algebra and (optionally) Monte Carlo against exact values within
    validate_sigma standard errors. Writes validation.csv and returns the results.
    """

    output_dir: str = Field(default="output")
    threads: int = Field(default=1, ge=1)

    def _run(self, config: ExperimentConfig, metadata: Dict[str, Any], long_run: bool = False) -> List[CheckResult]:
        results = [
            check_polya_counts(),
            check_class_counting(),
            check_labeled_closed_form(),
            check_polya_partition(),
            check_gray_code(),
            check_detailed_balance(),
            check_projections(),
        ]
        if long_run:
            results.append(check_polya_counts(max_n=8))
        if config.validate_mc:
            results.extend(check_monte_carlo(config, config.validate_sigma, threads=self.threads))
        for result in results:
            log = logger.info if result.passed else logger.error
            log(f"{'PASS' if result.passed else 'FAIL'} {result.check}: {result.detail}")
        failed = sum(not r.passed for r in results)
        print(f"✓ {len(results) - failed} checks passed" + (f", ✗ {failed} failed" if failed else ""))
        saver = CsvSaveTool(output_dir=self.output_dir)
        saver.run({
            "data": [r._asdict() for r in results],
            "filename": "validation.csv",
            "columns": VALIDATION_COLUMNS,
            "metadata": metadata,
        })
        return results
