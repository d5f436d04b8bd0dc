"""Batch runner: ``toolkit <command> --spec file.json``.

Output tables are deterministic given the job JSON and seed; the run manifest
(version, spec hash, wall time) goes to stderr or ``--manifest`` so that the
result file itself is byte-identical across reruns.

Exit codes: 0 ok, 2 parse or input error, 3 cap exceeded, 4 invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__
from .additive import AdditiveCapError, AdditiveError, BohrSpec, bohr_members
from .filtration import Filtration, Subalgebra, degree_rank_from_degree, lower_central_series, validate_filtration
from .gowers import GowersCapError, GowersError, additive_energy, converse_harness, correlation, gowers_norm, signal_from_spec
from .lie import AlgebraError, CapError, GroupElement, LieAlgebra, abelian, coords_second_kind, free_three_step, heisenberg
from .rng import SplitMix64, derive

COMMANDS = ("gowers", "correlate", "equidist", "bch", "universal", "energy", "bohr", "factor", "sweep")
EXIT_OK, EXIT_PARSE, EXIT_CAP, EXIT_INVARIANT = 0, 2, 3, 4


class ParseError(ValueError):
    pass


class InvariantError(RuntimeError):
    def __init__(self, module: str, witness: str):
        super().__init__(f"{module}: {witness}")
        self.module = module
        self.witness = witness


class Table:
    def __init__(self, columns, rows=None):
        self.columns = list(columns)
        self.rows = [list(r) for r in (rows or [])]

    def add(self, *row):
        self.rows.append(list(row))


def render(x) -> str:
    """Exact rationals as p/q, binary64 with 17 significant digits."""
    if isinstance(x, bool) or isinstance(x, np.bool_):
        return "true" if x else "false"
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, (tuple, list)):
        return "[" + " ".join(render(a) for a in x) + "]"
    return str(x)


def _jsonable(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (Fraction, float, np.floating)):
        return render(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (tuple, list)):
        return [_jsonable(a) for a in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return str(x)


def format_table(t: Table, fmt: str) -> str:
    if fmt == "json":
        rows = [dict(zip(t.columns, (_jsonable(c) for c in r))) for r in t.rows]
        return json.dumps(rows, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(t.columns)
    for r in t.rows:
        w.writerow([render(c) for c in r])
    return buf.getvalue()


# Object builders

def algebra_from_spec(a) -> LieAlgebra:
    if a == "heisenberg":
        return heisenberg()
    if a in ("free3", "free-three-step"):
        return free_three_step()
    if isinstance(a, dict) and "abelian" in a:
        return abelian(int(a["abelian"]))
    if isinstance(a, dict):
        return LieAlgebra.from_json(a)
    raise ParseError(f"unknown algebra {a!r}")


def degree_filtration(alg: LieAlgebra) -> Filtration:
    series = lower_central_series(alg)
    return Filtration.degree(alg, [g for g in series if g.dim > 0] or [Subalgebra.full(alg)])


def _fractions(v):
    return tuple(Fraction(str(x)) for x in v)


def _seeded(spec: dict, seed: int) -> dict:
    if spec.get("family") == "random" and "seed" not in spec:
        return {**spec, "seed": seed}
    return spec


# Commands

def cmd_gowers(spec: dict, seed: int) -> Table:
    sig = signal_from_spec(_seeded(spec["signal"] if "signal" in spec else spec, seed))
    ss = spec.get("s", [2])
    ss = [ss] if isinstance(ss, int) else list(ss)
    methods = spec.get("methods", ["recursive"])
    if methods == "both":
        methods = ["naive", "recursive"]
    t = Table(["s", "method", "value"])
    for s in ss:
        vals = []
        for m in methods:
            r = gowers_norm(sig, int(s), m)
            vals.append(r.value)
            t.add(int(s), r.method, r.value)
        if len(vals) > 1 and max(vals) - min(vals) > 1e-9:
            raise InvariantError("gowers", f"methods disagree at s={s}: {vals}")
    return t


def cmd_correlate(spec: dict, seed: int) -> Table:
    f = signal_from_spec(_seeded(spec["f"], seed))
    chi = signal_from_spec(_seeded(spec["chi"], derive(seed, 1)))
    s = int(spec.get("s", 1))
    rec = converse_harness(f, chi, s, spec.get("phase_numerators"))
    t = Table(["correlation", "norm_s_plus_1", "converse_checked"])
    t.add(rec.correlation, rec.norm, rec.asserted)
    return t


def _eta_polynomial(alg, g, k, degree_bound):
    """Binomial coefficients of n -> k . psi(g(n)) from its first values."""
    from .polyseq import RealPolynomial

    kf = _fractions(k)
    vals = [sum((a * b for a, b in zip(kf, coords_second_kind(g.eval(n)))), Fraction(0)) for n in range(degree_bound + 1)]
    coeffs = {}
    for j in range(degree_bound + 1):
        diffs = vals[: j + 1]
        for _ in range(j):
            diffs = [b - a for a, b in zip(diffs, diffs[1:])]
        coeffs[j] = diffs[0]
    return RealPolynomial.binomial(coeffs)


def cmd_equidist(spec: dict, seed: int) -> Table:
    from .nilmanifold import Nilmanifold, validate_horizontal
    from .polyseq import PolySequence, frac_signed, smoothness_norm

    alg = algebra_from_spec(spec["algebra"])
    m = Nilmanifold(alg, degree_filtration(alg))
    g = PolySequence.from_json(alg, spec["sequence"])
    n = int(spec["N"])
    if n > 10 ** 5:
        raise CapError("equidistribution length capped at 10^5")
    t = Table(["character", "smoothness", "weyl_sum"])
    for k in spec["characters"]:
        ok, _ = validate_horizontal(k, m)
        if not ok:
            raise ParseError(f"{k} is not a horizontal character")
        p = _eta_polynomial(alg, g, k, g.degree_bound())
        phases = np.array([float(frac_signed(p(j))) for j in range(1, n + 1)])
        weyl = abs(np.mean(np.exp(2j * np.pi * phases)))
        t.add(tuple(int(a) for a in k), smoothness_norm(p, n), float(weyl))
    return t


def cmd_bch(spec: dict, seed: int) -> Table:
    alg = algebra_from_spec(spec["algebra"])
    alg.ensure_valid()
    pairs = [(_fractions(x), _fractions(y)) for x, y in spec.get("pairs", [])]
    count = int(spec.get("random", 0))
    rng = SplitMix64(seed)
    for _ in range(count):
        pairs.append(tuple(tuple(Fraction(rng.integer(-9, 9), rng.integer(1, 6)) for _ in range(alg.dim)) for _ in range(2)))
    t = Table(["x", "y", "product", "associative"])
    for x, y in pairs:
        gx, gy = GroupElement.exp(alg, x), GroupElement.exp(alg, y)
        z = gx * gy
        assoc = ((gx * gy) * gx).coords == (gx * (gy * gx)).coords
        if not assoc:
            raise InvariantError("lie", f"associativity fails at x={x}, y={y}")
        t.add(x, y, z.coords, assoc)
    return t


def cmd_universal(spec: dict, seed: int) -> Table:
    from .universal import GeneratorSpec, build_quotient, build_universal, semidirect_filtration

    gs = GeneratorSpec.from_json(spec)
    u = build_universal(gs)
    frep = validate_filtration(u.filtration)
    t = Table(["quantity", "value"])
    t.add("dim", u.algebra.dim)
    t.add("step", u.algebra.step)
    t.add("filtration", "pass" if frep.passed else "fail")
    if any(gs.d_lin) or any(gs.d_pet):
        c = build_quotient(u)
        t.add("quotient_dim", c.algebra.dim)
        t.add("lin_dim", c.lin.dim)
        t.add("quotient_filtration", "pass" if validate_filtration(c.filtration).passed else "fail")
        if any(gs.d_lin):
            _, rep = semidirect_filtration(c)
            t.add("semidirect_filtration", "pass" if rep.passed else "fail")
    return t


def cmd_energy(spec: dict, seed: int) -> Table:
    sets = [spec["A"]] + [spec[k] for k in ("B", "C", "D") if k in spec]
    if len(sets) not in (1, 4):
        raise ParseError("give A alone or all of A, B, C, D")
    t = Table(["energy"])
    t.add(additive_energy(*[[int(a) for a in s] for s in sets]))
    return t


def cmd_bohr(spec: dict, seed: int) -> Table:
    b = BohrSpec.from_json(spec)
    members = bohr_members(b)
    t = Table(["size", "members"])
    t.add(len(members), tuple(members))
    return t


def cmd_factor(spec: dict, seed: int) -> Table:
    from .polyseq import HorizontalCharacter, PolySequence, RealPolynomial, factor_by_characters, first_kind_coefficients

    alg = algebra_from_spec(spec["algebra"])
    f = degree_rank_from_degree(degree_filtration(alg))
    g = PolySequence.from_json(alg, spec["sequence"], f)
    chars = [HorizontalCharacter(int(c["degree"]), tuple(int(a) for a in c["k"])) for c in spec["characters"]]
    res = factor_by_characters(g, chars, int(spec["N"]), spec.get("height", 1), f)
    t = Table(["part", "degree", "coefficients"])
    for name, seq in (("epsilon", res.epsilon), ("g_prime", res.g_prime), ("gamma", res.gamma)):
        for i, v in sorted(first_kind_coefficients(seq).items()):
            t.add(name, i, v)
    t.add("denominator", "", res.denominator)
    t.add("smoothness_constant", "", res.smoothness_constant)
    return t


HANDLERS = {
    "gowers": cmd_gowers,
    "correlate": cmd_correlate,
    "equidist": cmd_equidist,
    "bch": cmd_bch,
    "universal": cmd_universal,
    "energy": cmd_energy,
    "bohr": cmd_bohr,
    "factor": cmd_factor,
}


def classify(exc: BaseException) -> int:
    if isinstance(exc, (CapError, GowersCapError, AdditiveCapError)):
        return EXIT_CAP
    if isinstance(exc, InvariantError):
        return EXIT_INVARIANT
    if isinstance(exc, (ParseError, KeyError, TypeError, json.JSONDecodeError, AlgebraError, GowersError, AdditiveError, ValueError)):
        return EXIT_PARSE
    return EXIT_INVARIANT


def run_job(command: str, spec: dict, seed: int) -> Table:
    if command not in HANDLERS:
        raise ParseError(f"unknown command {command!r}")
    if not isinstance(spec, dict):
        raise ParseError("spec must be a JSON object")
    return HANDLERS[command](spec, seed)


def _sweep_one(args) -> tuple:
    idx, command, spec, seed = args
    try:
        t = run_job(command, spec, seed)
        return idx, command, "ok", t.columns, t.rows, ""
    except Exception as exc:  # a failed job is reported, siblings continue
        return idx, command, "failed", [], [], f"exit {classify(exc)}: {exc}"


def sweep(jobs: list, seed: int, parallelism: int = 1) -> Table:
    """Run jobs, concatenating their rows in spec order in long format."""
    work = []
    for i, job in enumerate(jobs):
        job_seed = int(job.get("seed", derive(seed, i)))
        work.append((i, job.get("command"), job.get("spec", {}), job_seed))
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_sweep_one, work))
    else:
        results = [_sweep_one(w) for w in work]
    t = Table(["job", "command", "status", "row", "column", "value"])
    for idx, command, status, cols, rows, err in sorted(results, key=lambda r: r[0]):
        if status != "ok":
            t.add(idx, command, status, "", "error", err)
            continue
        for r, row in enumerate(rows):
            for c, v in zip(cols, row):
                t.add(idx, command, status, r, c, v)
    return t


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="toolkit", description="Nilsequence and Gowers-norm experiment runner.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--spec", required=True, help="JSON spec file, or inline JSON")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for sweep")
    p.add_argument("--manifest", help="write the run manifest here instead of stderr")
    return p


def _load_spec(arg: str):
    text = arg if arg.lstrip().startswith(("{", "[")) else open(arg, encoding="utf-8").read()
    return text, json.loads(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    start = time.perf_counter()
    try:
        text, spec = _load_spec(args.spec)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"toolkit: cannot read spec: {exc}", file=sys.stderr)
        return EXIT_PARSE
    seed = args.seed & ((1 << 64) - 1)
    try:
        if args.command == "sweep":
            jobs = spec["jobs"] if isinstance(spec, dict) else spec
            table = sweep(jobs, seed, max(1, args.jobs))
        else:
            table = run_job(args.command, spec, seed)
    except Exception as exc:
        code = classify(exc)
        print(f"toolkit: {args.command} failed (exit {code}): {exc}", file=sys.stderr)
        return code
    out = format_table(table, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    manifest = {
        "toolkit": __version__,
        "command": args.command,
        "spec_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "wall_time_s": round(time.perf_counter() - start, 6),
    }
    line = json.dumps(manifest, sort_keys=True)
    if args.manifest:
        with open(args.manifest, "w", encoding="utf-8") as fh:
            fh.write(line + "\n")
    else:
        print(line, file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
