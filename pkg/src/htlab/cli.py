"""``htlab`` command line: run a builder on a JSON config and write its reports.

Exit codes: 0 success, 1 verification failure, 2 I/O or config error,
3 depth or resource exhaustion (partial artifacts are still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .boundary import StepFunction, add_steps, dense_target, monte_carlo_distance, slice_at, scale_step, step_equal
from .config import SEED_LIMIT, RunConfig, parse_target
from .constructors import build_spanning_family, build_universal, verify_certificate, verify_span
from .errors import AssumptionViolated, DepthExhausted, HtlabError, ResourceLimit, ValidationError
from .frequency import build_frequent, build_frequent_on_levels, build_upper_dense, verify_frequent, verify_holds
from .harmonic import harmonic_fill, is_harmonic, linear_combination
from .schedule import Schedule, density, density_series
from .tree import build_tree, tree_problems

OK, FAIL, CONFIG_ERROR, EXHAUSTED = 0, 1, 2, 3


class Reporter:
    def __init__(self, out: Path, cfg: RunConfig | None):
        self.out = out
        self.header = {"config_hash": cfg.config_hash if cfg else None}

    def json(self, name: str, payload: dict):
        self.out.mkdir(parents=True, exist_ok=True)
        body = dict(self.header, **payload)
        with open(self.out / name, "w") as fh:
            json.dump(body, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def csv(self, name: str, header: list[str], rows):
        self.out.mkdir(parents=True, exist_ok=True)
        with open(self.out / name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)


def _setup(cfg: RunConfig):
    t = build_tree(cfg.tree)
    return t, cfg.value_space()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_validate(cfg: RunConfig, rep: Reporter, seed: int) -> int:
    problems, _ = tree_problems(cfg.tree)
    try:
        cfg.value_space()
    except ValidationError as e:
        problems.extend(e.problems)
    notes = []
    if not problems:
        t = build_tree(cfg.tree)
        bad = t.weight_sum_violations()
        if bad:
            v, total = bad[0]
            notes.append(f"weights at ({v.level},{v.index}) sum to {t.field.format(total)}; "
                         "constant extension is unavailable")
    rep.json("validate.json", {"ok": not problems, "problems": problems, "notes": notes})
    for p in problems:
        print(f"FAIL {p}")
    print("valid" if not problems else f"{len(problems)} problem(s)")
    return OK if not problems else FAIL


def cmd_universal(cfg: RunConfig, rep: Reporter, seed: int) -> int:
    t, space = _setup(cfg)
    p = cfg.universal
    seed_fn = p.seed_function.build(t, space)
    targets = [dense_target(t, space, j) for j in range(1, p.n_targets + 1)]
    code = OK
    try:
        F, cert = build_universal(t, seed_fn, p.levels, p.n_targets, targets)
    except DepthExhausted as e:
        (F, cert), code = e.partial, EXHAUSTED
        print(f"depth exhausted: {e}")
    if F.depth < t.depth and t.can_materialize(t.depth):
        F = harmonic_fill(F, t.depth, t)
    failures = verify_certificate(F, cert, t, targets, p.levels)
    harmonic, _ = is_harmonic(F, t)
    if not harmonic:
        failures.append("result is not harmonic")
    if not F.same_values(seed_fn, seed_fn.depth):
        failures.append("result does not extend the seed")
    rng = np.random.default_rng(seed)
    mc = []
    for e, h in zip(cert.entries, targets):
        est = monte_carlo_distance(slice_at(F, e.level), h, t, space, p.mc_samples, rng)
        tol = 4 / math.sqrt(p.mc_samples)
        ok = abs(est - float(e.achieved)) <= tol
        mc.append({"stage": e.index, "estimate": round(est, 12), "within": ok})
        if not ok:
            failures.append(f"j={e.index}: Monte Carlo {est} off exact {e.achieved} by more than {tol}")
    rep.json("universal.json", {"certificate": cert.to_json(), "seed_depth": seed_fn.depth, "depth": F.depth,
                                "monte_carlo": mc, "failures": failures, "complete": code == OK})
    rep.csv("universal.csv", ["stage", "level", "achieved", "bound"],
            [[e.index, e.level, str(e.achieved), str(e.bound)] for e in cert.entries])
    print(f"{'stage':>5} {'level':>5} {'achieved':>14} {'bound':>6}")
    for e in cert.entries:
        print(f"{e.index:>5} {e.level:>5} {str(e.achieved):>14} {str(e.bound):>6}")
    for f in failures:
        print(f"FAIL {f}")
    if failures:
        return FAIL
    return code


def cmd_frequent(cfg: RunConfig, rep: Reporter, seed: int) -> int:
    t, space = _setup(cfg)
    p = cfg.frequent
    seed_fn = p.seed_function.build(t, space)
    code = OK
    try:
        if p.levels is None:
            f, log = build_frequent(t, seed_fn, p.max_target, p.horizon)
        else:
            f, log = build_frequent_on_levels(t, p.levels, seed_fn, p.max_target, p.horizon)
    except DepthExhausted as e:
        (f, log), code = e.partial, EXHAUSTED
        print(f"depth exhausted: {e}")
    failures = verify_frequent(f, log, t)
    if not is_harmonic(f, t)[0]:
        failures.append("result is not harmonic")
    level_map = getattr(log, "level_map", None)
    level_of = (lambda n: level_map[n]) if level_map else (lambda n: n)
    per_m = {}
    for m in sorted({h.target for h in log.hits}):
        got, want = log.hit_levels(m), log.expected_levels(m, level_of)
        if got != want:
            failures.append(f"m={m}: hit levels {got} differ from schedule {want}")
        W = f.depth
        per_m[str(m)] = {"levels": got,
                         "density": density(got, W, "lower", f"hits of target {m}").to_json() if W >= 2 else None}
    rep.json("frequent.json", {"log": log.to_json(), "per_target": per_m, "failures": failures,
                               "complete": code == OK})
    rep.csv("frequent.csv", ["k", "schedule_level", "level", "target", "achieved", "bound"],
            [[h.k, h.schedule_level, h.level, h.target, str(h.achieved), str(h.bound)] for h in log.hits])
    for h in log.hits:
        print(f"k={h.k:>3} level={h.level:>4} target={h.target} achieved={h.achieved} < {h.bound}")
    for x in failures:
        print(f"FAIL {x}")
    return FAIL if failures else code


def cmd_genericity(cfg: RunConfig, rep: Reporter, seed: int) -> int:
    t, space = _setup(cfg)
    p = cfg.genericity
    fld = space.field
    coeff_sets = [[fld.parse(str(a)) for a in row] for row in p.coeffs]
    if any(len(row) != p.m for row in coeff_sets):
        raise ValidationError(f"every coefficient list needs exactly m = {p.m} entries")
    if any(fld.is_zero(row[-1]) for row in coeff_sets):
        raise ValidationError("the last coefficient of every list must be nonzero")
    hs = [parse_target(x, t, space) for x in p.span_targets]
    own: list[list[StepFunction]] = [[dense_target(t, space, k)] for k in range(1, p.m)]
    last: list[StepFunction] = []
    seen = set()
    for row in coeff_sets:
        a = row[-1]
        for h in hs:
            g = scale_step(space, fld.inv(a), h)
            key = (g.level, g.values)
            if key not in seen:
                seen.add(key)
                last.append(g)
    own.append(last)
    code = OK
    try:
        fam = build_spanning_family(t, space, p.m, own, p.tol, p.levels)
    except DepthExhausted as e:
        print(f"depth exhausted: {e}")
        rep.json("genericity.json", {"failures": [str(e)], "complete": False})
        return EXHAUSTED
    failures = []
    for k, mem in enumerate(fam.members, start=1):
        if not mem.tree_distance < Fraction(1, k):
            failures.append(f"f_{k}: tree_distance to h_{k} is not below 1/{k}")
        for s in mem.stages:
            if not s.achieved < s.bound:
                failures.append(f"f_{k} stage {s.index}: {s.achieved} not below {s.bound}")
        if not is_harmonic(mem.function, t)[0]:
            failures.append(f"f_{k} is not harmonic")
    spans = []
    for row, raw in zip(coeff_sets, p.coeffs):
        L = linear_combination(row, fam.functions)
        for n in range(L.depth + 1):
            acc = scale_step(space, row[0], slice_at(fam.functions[0], n))
            for a, fk in zip(row[1:], fam.functions[1:]):
                acc = add_steps(space, acc, scale_step(space, a, slice_at(fk, n)), t)
            if not step_equal(slice_at(L, n), acc, t, space):
                failures.append(f"coefficients {raw}: linearity fails at level {n}")
        for hi, h in enumerate(hs):
            ok, level = verify_span(fam, row, h, p.eps, t)
            spans.append({"coeffs": [str(a) for a in raw], "target": hi, "witness": level, "ok": ok})
            if not ok:
                failures.append(f"coefficients {raw}, target {hi}: no witness below {p.eps}")
    rep.json("genericity.json", {"family": fam.to_json(space), "spans": spans, "failures": failures,
                                 "tree_distance": [f"{float(m.tree_distance):.12g}" for m in fam.members], "complete": True})
    for s in spans:
        print(f"coeffs={s['coeffs']} target={s['target']} witness={s['witness']}")
    for x in failures:
        print(f"FAIL {x}")
    return FAIL if failures else code


def cmd_x(cfg: RunConfig, rep: Reporter, seed: int) -> int:
    t, space = _setup(cfg)
    p = cfg.x
    balls = p.build_balls(t, space)
    if not balls:
        raise ValidationError("x needs at least one ball")
    seed_fn = p.seed_function.build(t, space)
    try:
        held, log = build_upper_dense(t, seed_fn, balls, p.theta_min, p.rounds)
    except AssumptionViolated as e:
        rep.json("x.json", {"failures": [str(e)], "complete": False})
        print(f"FAIL {e}")
        return FAIL
    failures = verify_holds(held, log, balls, t)
    if not is_harmonic(held.explicit, t)[0]:
        failures.append("explicit part is not harmonic")
    unvisited = [b + 1 for b in range(len(balls)) if not any(v.ball == b for v in log.visits)]
    rep.json("x.json", dict(log.to_json(), failures=failures, unvisited=unvisited,
                            explicit_depth=held.explicit.depth))
    rows = []
    for b, mem in enumerate(log.memberships):
        for n, hits, ratio in density_series(mem, log.depth, 1024):
            rows.append([b + 1, n, hits, f"{ratio:.12g}"])
    rep.csv("x_density.csv", ["ball", "N", "hits", "proxy"], rows)
    for v in log.visits:
        print(f"round {v.round} ball {v.ball + 1}: hit {v.hit_level} hold {v.start}..{v.end}")
    for b, report in enumerate(log.reports):
        print(f"ball {b + 1}: upper proxy {report.upper:.4f}" if report else f"ball {b + 1}: no hold")
    print(f"stop: {log.stop_reason}")
    for x in failures:
        print(f"FAIL {x}")
    if failures:
        return FAIL
    return EXHAUSTED if unvisited else OK


def cmd_schedule(cfg: RunConfig, rep: Reporter, seed: int) -> int:
    p = cfg.schedule
    if p.horizon < 2:
        raise ValidationError("schedule horizon must be at least 2")
    sched = Schedule.build(p.horizon)
    failures = sched.identity_failures()
    rep.csv("schedule.csv", ["k", "target", "level"],
            ([k, int(e), int(lv)] for k, (e, lv) in enumerate(zip(sched.targets, sched.levels), start=1)))
    W = int(sched.levels[-1])
    reports, rows = [], []
    for m in range(1, p.m_max + 1):
        hits = sched.hits(m)
        reports.append(density(hits, W, "lower", f"levels of stages visiting target {m}").to_json())
        for n, c, ratio in density_series(hits, W, p.points):
            rows.append([m, n, c, f"{ratio:.12g}"])
    rep.csv("schedule_density.csv", ["m", "N", "hits", "proxy"], rows)
    rep.json("schedule.json", {"horizon": p.horizon, "identity_failures": failures, "density": reports})
    for rec in reports:
        print(f"{rec['set']}: lower proxy {rec['lower_proxy']:.6f}")
    for x in failures:
        print(f"FAIL {x}")
    return FAIL if failures else OK


COMMANDS = {
    "validate": cmd_validate,
    "universal": cmd_universal,
    "frequent": cmd_frequent,
    "genericity": cmd_genericity,
    "x": cmd_x,
    "schedule": cmd_schedule,
}


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < SEED_LIMIT:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="htlab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--out", type=Path, default=Path("reports"))
    ap.add_argument("--seed", type=_seed, default=None)
    args = ap.parse_args(argv)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return CONFIG_ERROR
    try:
        cfg = RunConfig.from_json(raw)
    except ValidationError as e:
        print(f"error: malformed config: {e}", file=sys.stderr)
        return CONFIG_ERROR
    rep = Reporter(args.out, cfg)
    try:
        seed = cfg.seed if args.seed is None else args.seed
        if args.command != "validate":
            problems, _ = tree_problems(cfg.tree)
            if problems:
                raise ValidationError(problems)
        return COMMANDS[args.command](cfg, rep, seed)
    except ValidationError as e:
        if args.command == "validate":
            rep.json("validate.json", {"ok": False, "problems": e.problems, "notes": []})
            print(f"FAIL {e}")
            return FAIL
        print(f"error: {e}", file=sys.stderr)
        return CONFIG_ERROR
    except ResourceLimit as e:
        print(f"error: {e}", file=sys.stderr)
        return EXHAUSTED
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return CONFIG_ERROR
    except HtlabError as e:
        print(f"error: {e}", file=sys.stderr)
        return FAIL


if __name__ == "__main__":
    sys.exit(main())
