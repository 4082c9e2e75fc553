"""Command-line driver: compute coefficient tables, verify them, and sweep
parameter grids, persisting coefficients as JSON and reports as CSV.

Exit codes: 0 all checks passed, 1 at least one check failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import verify
from .reports import CheckReport, Witness
from .solver import (
    DESK_SCALE_CAPS,
    MAX_R,
    CoefficientTable,
    FamilyParams,
    residual_check,
    solve_coefficients,
)

FORMAT_VERSION = 1

ALPHA_GAMMA_N = {3: 4, 5: 3, 7: 2}

CHECK_NAMES = [
    "residual",
    "first_block",
    "digit_sum",
    "residue_classes",
    "a_c_terms",
    "truncated_exp",
    "tree_function",
    "b_survivors",
    "vector_b",
    "cumulant",
    "alpha_gamma",
    "valuation_recursion",
    "branch_pattern",
    "pure_units",
    "pure_slope",
    "digit_weight_bound",
    "leading_term",
    "subadditivity",
]


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    primes: list[int]
    r_values: list[int]
    max_k: dict[int, int]
    checks: list[str]
    out: Path
    jobs: int = 1
    checks_explicit: bool = False

    def validate(self) -> None:
        for p in self.primes:
            if p not in DESK_SCALE_CAPS:
                raise UsageError(
                    f"unsupported prime {p}; supported: {sorted(DESK_SCALE_CAPS)}"
                )
            k = self.max_k[p]
            if not 1 <= k <= DESK_SCALE_CAPS[p]:
                raise UsageError(
                    f"max_k={k} for p={p} outside 1..{DESK_SCALE_CAPS[p]}"
                )
        for r in self.r_values:
            if not 0 <= r <= MAX_R:
                raise UsageError(f"r={r} outside 0..{MAX_R}")
        for name in self.checks:
            if name not in CHECK_NAMES:
                raise UsageError(f"unknown check {name!r}; known: {', '.join(CHECK_NAMES)}")
        if self.jobs < 1:
            raise UsageError("jobs must be >= 1")
        if not self.primes or not self.r_values:
            raise UsageError("need at least one prime and one r value")


# ---------------------------------------------------------------------------
# Table persistence

def table_path(out: Path, p: int, r: int) -> Path:
    return out / f"table_p{p}_r{r}.json"


def save_table(table: CoefficientTable, path: Path) -> None:
    """Canonical JSON serialization; integers as decimal strings so that
    values beyond 64 bits survive every JSON reader."""
    doc = {
        "format_version": FORMAT_VERSION,
        "p": table.params.p,
        "r": table.params.r,
        "max_k": table.max_k,
        "coefficients": [
            {
                "k": k,
                "numerator": str(table.a[k].numerator),
                "denominator": str(table.a[k].denominator),
            }
            for k in range(table.max_k + 1)
        ],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_table(path: Path) -> CoefficientTable:
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("format_version") != FORMAT_VERSION:
        raise UsageError(f"{path}: unsupported format_version {doc.get('format_version')}")
    params = FamilyParams(int(doc["p"]), int(doc["r"]))
    records = sorted(doc["coefficients"], key=lambda rec: int(rec["k"]))
    if [int(rec["k"]) for rec in records] != list(range(int(doc["max_k"]) + 1)):
        raise UsageError(f"{path}: coefficient indices do not cover 0..max_k")
    coeffs = [
        Fraction(int(rec["numerator"]), int(rec["denominator"])) for rec in records
    ]
    try:
        return CoefficientTable.from_coefficients(params, coeffs)
    except (ValueError, ArithmeticError) as err:
        raise UsageError(f"{path}: {err}") from err


def _obtain_table(p: int, r: int, max_k: int, out: Path) -> CoefficientTable:
    """Load a stored table when one covers the request, else solve."""
    path = table_path(out, p, r)
    if path.exists():
        table = load_table(path)
        if table.max_k == max_k:
            return table
        if table.max_k > max_k:
            return CoefficientTable.from_coefficients(
                table.params, table.a[: max_k + 1]
            )
    return solve_coefficients(FamilyParams(p, r), max_k)


# ---------------------------------------------------------------------------
# Check registry

def applicability(name: str, p: int, r: int, max_k: int) -> str | None:
    """None when the check applies to the cell, else the reason it cannot."""
    if name == "residual":
        return None
    if name in ("first_block", "digit_sum", "residue_classes", "truncated_exp",
                "tree_function"):
        return None if r == 0 else "special fiber only"
    if name == "a_c_terms":
        return None
    if name == "b_survivors":
        if r != 0:
            return "special fiber only"
        return None if p == 3 else "exhaustive enumeration grid is p=3 only"
    if name == "vector_b":
        if r != 0:
            return "special fiber only"
        if p not in verify.VECTOR_B_GRIDS:
            return f"no default grid for p={p}"
        need = verify.vector_b_required_max_k(p)
        return None if max_k >= need else f"needs max_k >= {need}"
    if name == "cumulant":
        if r != 0:
            return "special fiber only"
        if p not in verify.CUMULANT_GRIDS:
            return f"no default grid for p={p}"
        return None if max_k >= 3 else "needs max_k >= 3"
    if name == "alpha_gamma":
        if r != 0:
            return "runs once per prime, on the r=0 cell"
        return None if p in ALPHA_GAMMA_N else f"no factorial range for p={p}"
    if name in ("valuation_recursion", "branch_pattern"):
        if r < 1:
            return "higher fibers only"
        return None if max_k >= p * p else f"needs max_k >= {p * p}"
    if name in ("pure_units", "digit_weight_bound", "subadditivity"):
        return None if r >= 1 else "higher fibers only"
    if name == "leading_term":
        if r < 1:
            return "higher fibers only"
        return None if max_k >= 2 * p else f"needs max_k >= {2 * p}"
    if name == "pure_slope":
        if r < 1:
            return "higher fibers only"
        s = (r + 1) // 2
        return None if p ** (2 * s) <= max_k else f"stable range needs max_k >= {p ** (2 * s)}"
    raise UsageError(f"unknown check {name!r}")


def _run_checks_for_cell(
    table: CoefficientTable, checks: list[str]
) -> tuple[list[CheckReport], list[tuple[str, str]]]:
    p, r, max_k = table.params.p, table.params.r, table.max_k
    reports: list[CheckReport] = []
    skipped: list[tuple[str, str]] = []
    vtable = None
    for name in CHECK_NAMES:
        if name not in checks:
            continue
        reason = applicability(name, p, r, max_k)
        if reason is not None:
            skipped.append((name, reason))
            continue
        try:
            if name in ("valuation_recursion", "branch_pattern", "pure_units",
                        "pure_slope", "digit_weight_bound", "leading_term",
                        "subadditivity") and vtable is None:
                vtable = verify.build_v_table(table)
            if name == "residual":
                report = residual_check(table)
            elif name == "first_block":
                report = verify.check_first_block(table)
            elif name == "digit_sum":
                report = verify.check_digit_sum(table)
            elif name == "residue_classes":
                report = verify.check_residue_classes(table)
            elif name == "a_c_terms":
                report = verify.check_a_c_terms(table)
            elif name == "truncated_exp":
                report = verify.check_truncated_exp(p)
            elif name == "tree_function":
                report = verify.check_tree_function(p)
            elif name == "b_survivors":
                report = verify.check_b_survivors(p)
            elif name == "vector_b":
                report = verify.check_vector_b(table)
            elif name == "cumulant":
                report = verify.check_cumulant(table)
            elif name == "alpha_gamma":
                report = verify.check_alpha_gamma(p, ALPHA_GAMMA_N[p])
            elif name == "valuation_recursion":
                report = verify.check_valuation_recursion(vtable)
            elif name == "branch_pattern":
                report = verify.check_branch_pattern(vtable)
            elif name == "pure_units":
                report = verify.check_pure_units(table, vtable)
            elif name == "pure_slope":
                report = verify.check_pure_slope(table, vtable)
            elif name == "digit_weight_bound":
                report = verify.check_digit_weight_bound(table, vtable)
            elif name == "leading_term":
                report = verify.check_leading_term(table, vtable)
            elif name == "subadditivity":
                report = verify.check_subadditivity(vtable)
            else:  # pragma: no cover
                raise UsageError(f"unhandled check {name!r}")
        except Exception as err:  # a broken table must fail, not crash
            report = CheckReport(name, {"p": p, "r": r})
            report.witnesses.append(
                Witness(index="error", expected="check completes",
                        actual=f"{type(err).__name__}: {err}", passed=False)
            )
        report.params.setdefault("p", p)
        report.params.setdefault("r", r)
        reports.append(report)
    return reports, skipped


def _cell_worker(payload):
    p, r, max_k, checks, out = payload
    table = _obtain_table(p, r, max_k, Path(out))
    reports, skipped = _run_checks_for_cell(table, list(checks))
    return p, r, reports, skipped


def _run_cells(cfg: RunConfig):
    payloads = [
        (p, r, cfg.max_k[p], tuple(cfg.checks), str(cfg.out))
        for p in cfg.primes
        for r in cfg.r_values
    ]
    if cfg.jobs == 1 or len(payloads) == 1:
        return [_cell_worker(payload) for payload in payloads]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(_cell_worker, payloads))


# ---------------------------------------------------------------------------
# Report rendering

CSV_HEADER = ["check_name", "p", "r", "index", "expected", "actual", "pass"]


def report_rows(report: CheckReport) -> list[list[str]]:
    p = report.params.get("p", "")
    r = report.params.get("r", "")
    return [
        [report.check_name, str(p), str(r), str(w.index), w.expected, w.actual,
         "true" if w.passed else "false"]
        for w in report.witnesses
    ]


def write_report_csv(path: Path, reports: list[CheckReport]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for report in reports:
            writer.writerows(report_rows(report))


# ---------------------------------------------------------------------------
# Commands

def cmd_compute(cfg: RunConfig) -> int:
    for p in cfg.primes:
        for r in cfg.r_values:
            table = solve_coefficients(FamilyParams(p, r), cfg.max_k[p])
            path = table_path(cfg.out, p, r)
            save_table(table, path)
            print(f"wrote {path} ({table.max_k + 1} coefficients)")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    _require_some_applicable_cell(cfg)
    results = _run_cells(cfg)
    all_reports: list[CheckReport] = []
    for p, r, reports, skipped in results:
        for report in reports:
            print(report.summary())
            all_reports.append(report)
        for name, reason in skipped:
            print(f"[SKIP] {name} p={p} r={r}: {reason}")
    write_report_csv(cfg.out / "report.csv", all_reports)
    failed = [rep for rep in all_reports if not rep.passed]
    for rep in failed:
        worst = rep.first_failure()
        print(f"FAILED {rep.check_name} p={rep.params.get('p')} r={rep.params.get('r')}"
              f" at {worst.index}: expected {worst.expected}, got {worst.actual}")
    return 1 if failed else 0


def cmd_sweep(cfg: RunConfig) -> int:
    _require_some_applicable_cell(cfg)
    results = _run_cells(cfg)
    cells = [(p, r) for p in cfg.primes for r in cfg.r_values]
    matrix: dict[tuple[str, tuple[int, int]], str] = {}
    deviations: list[tuple[int, int, str, str]] = []
    any_failed = False
    for p, r, reports, skipped in results:
        write_report_csv(cfg.out / f"report_p{p}_r{r}.csv", reports)
        for report in reports:
            status = "pass" if report.passed else "fail"
            any_failed = any_failed or not report.passed
            matrix[(report.check_name, (p, r))] = status
            if report.check_name == "pure_slope" and "deviation_bound" in report.notes:
                deviations.append(
                    (p, r, report.notes["deviation_bound"], report.notes["deviation_argmax"])
                )
        for name, _reason in skipped:
            matrix[(name, (p, r))] = "-"

    summary = cfg.out / "summary.csv"
    summary.parent.mkdir(parents=True, exist_ok=True)
    with summary.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["check_name"] + [f"p{p}_r{r}" for p, r in cells])
        for name in CHECK_NAMES:
            if name not in cfg.checks:
                continue
            writer.writerow([name] + [matrix.get((name, cell), "-") for cell in cells])
    with (cfg.out / "slope_deviations.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["p", "r", "deviation_bound", "argmax_k"])
        for p, r, bound, argmax in deviations:
            writer.writerow([str(p), str(r), bound, argmax])

    for name in CHECK_NAMES:
        if name not in cfg.checks:
            continue
        row = " ".join(
            f"{matrix.get((name, cell), '-'):>4}" for cell in cells
        )
        print(f"{name:>20}  {row}")
    print(f"wrote {summary}")
    return 1 if any_failed else 0


def _require_some_applicable_cell(cfg: RunConfig) -> None:
    """Explicitly requested checks must run somewhere in the grid."""
    for name in cfg.checks:
        reasons = {
            applicability(name, p, r, cfg.max_k[p])
            for p in cfg.primes
            for r in cfg.r_values
        }
        if None not in reasons:
            raise UsageError(
                f"check {name!r} applies to no requested cell: {'; '.join(sorted(x for x in reasons if x))}"
            )


# ---------------------------------------------------------------------------
# Argument handling

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boettcher",
        description="Compute and verify Boettcher coordinate coefficient tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in (("compute", cmd_compute), ("verify", cmd_verify), ("sweep", cmd_sweep)):
        cmd = sub.add_parser(name)
        cmd.add_argument("--p", type=str, default=None,
                         help="comma-separated primes, e.g. 3,5,7")
        cmd.add_argument("--r", type=str, default=None,
                         help="comma-separated r values, e.g. 0,1,2")
        cmd.add_argument("--max-k", type=int, default=None,
                         help="table size for every selected prime (default: per-prime cap)")
        cmd.add_argument("--checks", type=str, default=None,
                         help="comma-separated check names, or 'all'")
        cmd.add_argument("--out", type=str, default=None, help="output directory")
        cmd.add_argument("--jobs", type=int, default=None, help="parallel cells")
        cmd.add_argument("--config", type=str, default=None, help="JSON config file")
        cmd.set_defaults(func=func, command_name=name)
    return parser


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as err:
        raise UsageError(f"bad {what} list {text!r}") from err


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then config file, then command-line flags."""
    if args.command_name == "sweep":
        primes, r_values = [3, 5, 7], [0, 1, 2, 3]
    else:
        primes, r_values = [3], [0]
    checks = list(CHECK_NAMES)
    out = Path("boettcher_out")
    jobs = 1
    max_k_map: dict[int, int] = {}

    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file {path} not found")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            raise UsageError(f"config file {path}: {err}") from err
        primes = [int(x) for x in doc.get("primes", primes)]
        r_values = [int(x) for x in doc.get("r_values", r_values)]
        if "max_k" in doc:
            max_k_map = {int(k): int(v) for k, v in doc["max_k"].items()}
        if "checks" in doc:
            checks = list(CHECK_NAMES) if doc["checks"] == "all" else [str(x) for x in doc["checks"]]
        if "out" in doc:
            out = Path(doc["out"])
        if "jobs" in doc:
            jobs = int(doc["jobs"])

    if args.p is not None:
        primes = _parse_int_list(args.p, "prime")
    if args.r is not None:
        r_values = _parse_int_list(args.r, "r")
    if args.max_k is not None:
        max_k_map = {p: args.max_k for p in primes}
    if args.checks is not None:
        checks = list(CHECK_NAMES) if args.checks == "all" else [
            x.strip() for x in args.checks.split(",") if x.strip()
        ]
    if args.out is not None:
        out = Path(args.out)
    if args.jobs is not None:
        jobs = args.jobs

    full_max_k = {p: max_k_map.get(p, DESK_SCALE_CAPS.get(p, 0)) for p in primes}
    cfg = RunConfig(primes=primes, r_values=r_values, max_k=full_max_k,
                    checks=checks, out=out, jobs=jobs)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        cfg = resolve_config(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    try:
        return args.func(cfg)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main())
