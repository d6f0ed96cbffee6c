"""Command-line orchestration: factoring runs, exact and sampled experiments,
parameter sweeps, bound reports, and the verification battery.

Exit codes: 0 ok, 1 verification failure, 2 usage, 3 domain, 4 capacity.
Floats are printed with 12 significant digits; exactly rational quantities are
printed as "num/den" in JSON reports.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bounds import (
    bound_report,
    classical_bounds,
    lower_bound,
    per_block_measures,
    product_sandwich_check,
    upper_bound,
    viete_product,
    FOUR_OVER_PI_SQ,
)
from .channels import NotCPTP
from .measures import verify_counterexample, WitnessInvalid
from .numtheory import (
    FactorInstance,
    NotCoprime,
    OddOrder,
    TrivialRoot,
    _prime_factors,
    cfa_estimate_order,
    is_true_order,
)
from .protocol import (
    NotUnital,
    ProtocolConfig,
    TooLarge,
    _BlockEngine,
    brute_force_oracle,
    exact_success_probability,
    mixed_distribution,
    sample_trials,
    trial_rng,
)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_CAPACITY = 4

SEED_ENV_VAR = "COHERENCE_SHOR_SEED"
SWEEP_CSV_HEADER = "p,cohering_power,nsid,lower,exact,upper,classical_lo,classical_hi"

ORACLE_GRID_INSTANCES = ((15, 7, 6), (15, 7, 8), (21, 2, 6), (15, 2, 8))
ORACLE_GRID_PS = (0.0, 0.3, 0.7, 1.0)


class InvalidN(ValueError):
    """N is not an odd composite with at least two distinct prime factors."""


class MaxIterations(RuntimeError):
    """Factoring loop exhausted its trial budget."""


class GridError(ValueError):
    """Malformed sweep grid specification."""


def _fmt(x: float) -> float:
    """Round to 12 significant digits for deterministic display."""
    return float(f"{x:.12g}")


def _rational(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _parse_p(text: str, L: int) -> list[float]:
    parts = [float(p) for p in text.split(",")]
    if any(not 0.0 <= p <= 1.0 for p in parts):
        raise ValueError(f"channel parameters must lie in [0, 1], got {text!r}")
    if len(parts) == 1:
        return parts * L
    if len(parts) != L:
        raise ValueError(f"need 1 or {L} comma-separated values, got {len(parts)}")
    return parts


def _parse_grid(spec: str) -> list[float]:
    try:
        name, rng = spec.split("=")
        start, stop, step = (Fraction(s) for s in rng.split(":"))
    except ValueError as exc:
        raise GridError(f"grid must look like 'p=0:1:0.05', got {spec!r}") from exc
    if name.strip() != "p":
        raise GridError(f"only 'p' grids are supported, got {name!r}")
    if step <= 0 or stop < start:
        raise GridError(f"need step > 0 and stop >= start in {spec!r}")
    values = []
    point = start
    while point <= stop:
        values.append(float(point))
        point += step
    return values


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters; every module precondition is checked here
    before any computation starts."""

    command: str
    N: int | None = None
    x: int | None = None
    L: int | None = None
    p_prep: str = "1"
    p_detect: str = "1"
    trials: int = 1000
    seed: int = 0
    threads: int = 1
    fmt: str = "json"
    out: str | None = None
    exhaustive: bool = False
    variant: str = "sm"
    grid: str = "p=0:1:0.05"
    max_trials: int = 10000

    def instance(self) -> FactorInstance:
        if self.N is None or self.x is None:
            raise ValueError("this command needs both --n and --x")
        test_mode = self.L is not None
        return FactorInstance.create(self.N, self.x, L=self.L, test_mode=test_mode)

    def protocol(self, instance: FactorInstance) -> ProtocolConfig:
        return ProtocolConfig.from_families(
            instance,
            _parse_p(self.p_prep, instance.L),
            _parse_p(self.p_detect, instance.L),
            seed=self.seed,
        )


def _check_composite_odd(N: int) -> None:
    if N < 3 or N % 2 == 0:
        raise InvalidN(f"N={N} must be odd and >= 3")
    primes = _prime_factors(N)
    if len(primes) < 2:
        raise InvalidN(f"N={N} is a prime power; no quantum step needed")


def _draw_outcome(engine: _BlockEngine, instance: FactorInstance, seed: int, trial: int) -> int:
    rng = trial_rng(seed, trial)
    j = int(rng.integers(instance.r))
    prefix = 0
    for l in range(1, instance.L + 1):
        _, p1 = engine.block_probs(j, prefix, l)
        if rng.random() < p1:
            prefix |= 1 << (l - 1)
    return prefix


def run_factor(config: RunConfig) -> dict:
    """Full factoring loop: order-finding trials, classical verification of the
    accepted denominator, gcd extraction.  The simulation's internal rotation
    index is never recorded; the post-processing sees only the outcome k."""
    _check_composite_odd(config.N)
    draw_rng = trial_rng(config.seed, (1 << 64) - 1)
    transcript: list[dict] = []
    total = 0
    x = config.x
    while total < config.max_trials:
        if x is None:
            x = int(draw_rng.integers(2, config.N))
            if math.gcd(x, config.N) != 1:
                x = None
                continue
        instance = FactorInstance.create(config.N, x, L=config.L, test_mode=config.L is not None)
        protocol = config.protocol(instance)
        engine = _BlockEngine(protocol)
        redraw = False
        while total < config.max_trials:
            total += 1
            k = _draw_outcome(engine, instance, config.seed, total)
            estimate = cfa_estimate_order(k, instance).estimate
            entry = {"trial": total, "x": x, "k": k, "accepted": estimate}
            if estimate is not None:
                verified = is_true_order(config.N, x, estimate)
                entry["order_verified"] = verified
                if verified:
                    if estimate % 2 == 1:
                        entry["extraction"] = "odd_order"
                    else:
                        a = pow(x, estimate // 2, config.N)
                        if a in (1, config.N - 1):
                            entry["extraction"] = "trivial_root"
                        else:
                            factors = sorted({math.gcd(a - 1, config.N), math.gcd(a + 1, config.N)} - {1, config.N})
                            transcript.append(entry)
                            return {
                                "N": config.N,
                                "factors": factors,
                                "n_trials": total,
                                "seed": config.seed,
                                "trials": transcript,
                            }
                    if config.x is not None:
                        raise OddOrder(f"base x={x} cannot factor N={config.N}: {entry['extraction']}")
                    redraw = True
            transcript.append(entry)
            if redraw:
                x = None
                break
    raise MaxIterations(f"no factor found within {config.max_trials} trials")


def run_exact(config: RunConfig) -> dict:
    instance = config.instance()
    protocol = config.protocol(instance)
    mode = "exhaustive" if config.exhaustive else "fast"
    if config.exhaustive and instance.L > 16:
        raise TooLarge(f"exhaustive mode refused above L=16, got L={instance.L}")
    report = exact_success_probability(protocol, mode=mode)
    bounds = bound_report(protocol, exact=report.exact, variant=config.variant)
    data = report.to_json_dict(
        instance,
        p_prep=[_fmt(p) for p in protocol.p_prep],
        p_detect=[_fmt(p) for p in protocol.p_detect],
        lower=_fmt(bounds.lower),
        upper=_fmt(bounds.upper),
    )
    data["exact"] = _fmt(data["exact"])
    data["classical"] = _rational(report.classical)
    data["per_j"] = {str(j): _fmt(v) for j, v in report.per_j.items()}
    data["candidates_examined"] = report.candidates_examined
    return data


def run_sample(config: RunConfig) -> dict:
    instance = config.instance()
    protocol = config.protocol(instance)
    stats = sample_trials(protocol, config.trials)
    return {
        "N": instance.N,
        "x": instance.x,
        "r": instance.r,
        "L": instance.L,
        "trials": config.trials,
        "seed": config.seed,
        "successes": stats["successes"],
        "frequency": _fmt(stats["frequency"]),
        "stderr": _fmt(stats["stderr"]),
    }


def run_bounds(config: RunConfig) -> dict:
    instance = config.instance()
    protocol = config.protocol(instance)
    report = bound_report(protocol, variant=config.variant)
    data = report.to_json_dict()
    data.update(
        {
            "N": instance.N,
            "x": instance.x,
            "r": instance.r,
            "L": instance.L,
            "lower": _fmt(report.lower),
            "upper": _fmt(report.upper),
            "per_block_factors": [[_fmt(c), _fmt(m)] for c, m in report.per_block_factors],
        }
    )
    return data


def _sweep_row(config: RunConfig, instance: FactorInstance, p: float) -> dict:
    protocol = ProtocolConfig.from_families(instance, p, p, seed=config.seed)
    measures = per_block_measures(protocol)
    report = exact_success_probability(protocol)
    lo, hi = classical_bounds(instance)
    return {
        "p": p,
        "cohering_power": measures[0][0],
        "nsid": measures[0][1],
        "lower": lower_bound(instance, measures),
        "exact": report.exact,
        "upper": upper_bound(instance, measures, variant=config.variant),
        "classical_lo": float(lo),
        "classical_hi": float(hi),
    }


def run_sweep(config: RunConfig) -> list[dict]:
    instance = config.instance()
    points = _parse_grid(config.grid)
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        rows = list(pool.map(lambda p: _sweep_row(config, instance, p), points))
    return rows


def _sweep_csv(rows: list[dict]) -> str:
    lines = [SWEEP_CSV_HEADER]
    for row in rows:
        lines.append(",".join(f"{row[col]:.12g}" for col in SWEEP_CSV_HEADER.split(",")))
    return "\n".join(lines) + "\n"


def _check(name: str, passed: bool, detail: dict) -> dict:
    return {"name": name, "passed": bool(passed), **detail}


def _oracle_grid_point(spec: tuple[int, int, int], p: float) -> dict:
    N, x, L = spec
    instance = FactorInstance.create(N, x, L=L, test_mode=True)
    protocol = ProtocolConfig.from_families(instance, p, p)
    report = exact_success_probability(protocol)
    oracle_report, oracle_dist = brute_force_oracle(protocol)
    factorized = mixed_distribution(protocol)
    gap = float(np.max(np.abs(factorized.probs - oracle_dist.probs)))
    measures = per_block_measures(protocol)
    lower = lower_bound(instance, measures)
    upper = upper_bound(instance, measures)
    sandwiched = lower <= report.exact + 1e-12 and report.exact <= upper + 1e-12
    return {
        "N": N,
        "x": x,
        "L": L,
        "p": p,
        "max_outcome_gap": gap,
        "exact": report.exact,
        "oracle": oracle_report.exact,
        "passed": gap <= 1e-9 and abs(report.exact - oracle_report.exact) <= 1e-9 and sandwiched,
    }


def verification_checks(threads: int = 1, seed: int = 0) -> dict:
    """The verification battery behind the `verify` subcommand."""
    checks = []

    rep = verify_counterexample()
    eig_target = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
    eig_gap = max(abs(a - b) for a, b in zip(rep["choi_eigenvalues"], eig_target))
    checks.append(
        _check(
            "counterexample",
            abs(rep["d_theta"] - 1.0) <= 1e-9
            and abs(rep["d_composed"] - 4.0 / 3.0) <= 1e-9
            and eig_gap <= 1e-9
            and rep["phi_is_di"]
            and rep["phi_is_cptp"],
            {"report": {k: v for k, v in rep.items()}},
        )
    )

    viete_gap = viete_product(30) - FOUR_OVER_PI_SQ
    checks.append(_check("viete_product", 0.0 <= viete_gap <= 1e-6, {"gap": viete_gap}))

    rng = np.random.default_rng(seed)
    sandwich_ok = all(
        product_sandwich_check(rng.random(rng.integers(1, 13)).tolist()) for _ in range(500)
    )
    checks.append(_check("product_sandwich", sandwich_ok, {"vectors": 500}))

    from .channels import ChannelFamily, hadamard_channel
    from .measures import cohering_power, nsid_qubit

    h = hadamard_channel()
    closed_ok = abs(cohering_power(h).value - 1.0) <= 1e-12 and abs(nsid_qubit(h).value - 1.0) <= 1e-12
    for p in [i / 10 for i in range(11)]:
        closed_ok &= abs(cohering_power(ChannelFamily("prep", p).channel()).value - p) <= 1e-12
        closed_ok &= abs(nsid_qubit(ChannelFamily("detect", p).channel()).value - p) <= 1e-12
    checks.append(_check("measure_closed_forms", closed_ok, {"p_values": 11}))

    grid = [(spec, p) for spec in ORACLE_GRID_INSTANCES for p in ORACLE_GRID_PS]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        points = list(pool.map(lambda sp: _oracle_grid_point(*sp), grid))
    checks.append(
        _check(
            "oracle_equivalence_grid",
            all(pt["passed"] for pt in points),
            {"points": points},
        )
    )

    return {"passed": all(c["passed"] for c in checks), "checks": checks}


def run_verify(config: RunConfig) -> dict:
    return verification_checks(threads=config.threads, seed=config.seed)


def _json_dump(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coherence-shor",
        description="Sequential order-finding simulator with coherence-limited channels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_n=True):
        if need_n:
            p.add_argument("--n", type=int, required=True, help="modulus / number to factor")
            p.add_argument("--x", type=int, default=None, help="base (random coprime draw if omitted)")
            p.add_argument("--bits", type=int, default=None, help="control register size override (test mode)")
            p.add_argument("--p-prep", default="1", help="preparation parameter(s), scalar or L comma-separated")
            p.add_argument("--p-detect", default="1", help="detection parameter(s), scalar or L comma-separated")
        p.add_argument("--seed", type=int, default=None, help=f"RNG seed (fallback: ${SEED_ENV_VAR}, then 0)")
        p.add_argument("--threads", type=_positive_int, default=None, help="worker pool size")
        p.add_argument("--format", dest="fmt", choices=("json", "csv"), default=None)
        p.add_argument("--out", default=None, help="output path (default: stdout)")

    p_factor = sub.add_parser("factor", help="run the full factoring loop")
    common(p_factor)
    p_factor.add_argument("--max-trials", type=_positive_int, default=10000)

    p_exact = sub.add_parser("exact", help="exact success probability & bounds")
    common(p_exact)
    p_exact.add_argument("--exhaustive", action="store_true", help="enumerate all 2**L outcomes (L <= 16)")
    p_exact.add_argument("--variant", choices=("sm", "main"), default="sm")

    p_sample = sub.add_parser("sample", help="Monte Carlo protocol trials")
    common(p_sample)
    p_sample.add_argument("--trials", type=_positive_int, default=1000)

    p_sweep = sub.add_parser("sweep", help="parameter sweep over p (CSV)")
    common(p_sweep)
    p_sweep.add_argument("--grid", default="p=0:1:0.05", help="grid spec, e.g. p=0:1:0.05")
    p_sweep.add_argument("--variant", choices=("sm", "main"), default="sm")

    p_bounds = sub.add_parser("bounds", help="bound report for one configuration")
    common(p_bounds)
    p_bounds.add_argument("--variant", choices=("sm", "main"), default="sm")

    p_verify = sub.add_parser("verify", help="run the verification battery")
    common(p_verify, need_n=False)

    return parser


def _seed_from(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    return int(env) if env else 0


def _run_config(args) -> RunConfig:
    return RunConfig(
        command=args.command,
        N=getattr(args, "n", None),
        x=getattr(args, "x", None),
        L=getattr(args, "bits", None),
        p_prep=getattr(args, "p_prep", "1"),
        p_detect=getattr(args, "p_detect", "1"),
        trials=getattr(args, "trials", 1000),
        seed=_seed_from(args),
        threads=args.threads or os.cpu_count() or 1,
        fmt=args.fmt or ("csv" if args.command == "sweep" else "json"),
        out=args.out,
        exhaustive=getattr(args, "exhaustive", False),
        variant=getattr(args, "variant", "sm"),
        grid=getattr(args, "grid", "p=0:1:0.05"),
        max_trials=getattr(args, "max_trials", 10000),
    )


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    config = _run_config(args)
    try:
        if config.command == "factor":
            _emit(_json_dump(run_factor(config)), config.out)
        elif config.command == "exact":
            _emit(_json_dump(run_exact(config)), config.out)
        elif config.command == "sample":
            _emit(_json_dump(run_sample(config)), config.out)
        elif config.command == "bounds":
            _emit(_json_dump(run_bounds(config)), config.out)
        elif config.command == "sweep":
            rows = run_sweep(config)
            if config.fmt == "csv":
                _emit(_sweep_csv(rows), config.out)
            else:
                _emit(_json_dump([{k: (_fmt(v) if isinstance(v, float) else v) for k, v in r.items()} for r in rows]), config.out)
        elif config.command == "verify":
            report = run_verify(config)
            _emit(_json_dump(report), config.out)
            if not report["passed"]:
                return EXIT_VERIFY
    except GridError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TooLarge, MaxIterations) as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InvalidN, NotCoprime, NotUnital, NotCPTP, OddOrder, TrivialRoot, WitnessInvalid, ValueError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
