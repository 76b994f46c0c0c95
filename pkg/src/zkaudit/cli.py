"""Command-line front end: scripted demos, desk-scale benchmarks and token audits.

    zkaudit demo --script happy-path --seed 7
    zkaudit bench --relation all --depth 4 --json
    zkaudit audit --snapshot ledger.bin --record 2 --key alice.key

Generator vectors are cached under ``$ZKAUDIT_CACHE_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import json
import random
import statistics
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import protocol
from .ledger import Ledger
from .primitives import AddressKeyPair
from .protocol import PublicParams, RecordType, TokenError, UnknownCommitment
from .zk import relations as rel
from .zk.bulletproofs import CACHE_ENV
from .zk.r1cs import UnsatisfiedError

EXIT_REJECTED = 1
EXIT_USAGE = 2
BUNDLED = ("happy-path", "expired-share", "double-assign")
_OPS = {"store": RecordType.STORE, "assign": RecordType.OWN, "share": RecordType.SHARE, "access": RecordType.ACCESS}


class ScriptError(ValueError):
    pass


# --- scripts ------------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    actor: str
    op: str
    args: dict


@dataclass(frozen=True)
class Script:
    name: str
    parties: tuple[str, ...]
    steps: tuple[Step, ...]
    depth: int = 4
    replicas: int = 3

    @classmethod
    def parse(cls, text: str) -> "Script":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScriptError(f"script is not valid JSON: {exc}") from None
        parties = tuple(doc.get("parties", ()))
        steps = []
        for i, raw in enumerate(doc.get("steps", ())):
            op = raw.get("op")
            if op not in _OPS:
                raise ScriptError(f"step {i}: unknown op {op!r}")
            if raw.get("actor") not in parties:
                raise ScriptError(f"step {i}: unknown actor {raw.get('actor')!r}")
            steps.append(Step(raw["actor"], op, dict(raw.get("args", {}))))
        if not steps:
            raise ScriptError("script has no steps")
        return cls(doc.get("name", "script"), parties, tuple(steps), int(doc.get("depth", 4)), int(doc.get("replicas", 3)))

    @classmethod
    def load(cls, ref: str) -> "Script":
        """A file path, or the name of a bundled script."""
        path = Path(ref)
        if path.is_file():
            return cls.parse(path.read_text())
        if ref in BUNDLED:
            return cls.parse(resources.files("zkaudit").joinpath("scripts", f"{ref}.json").read_text())
        raise ScriptError(f"no script file or bundled script named {ref!r} (bundled: {', '.join(BUNDLED)})")


@dataclass
class StepResult:
    index: int
    actor: str
    op: str
    accepted: bool
    reason: str | None = None
    seq: int | None = None

    def line(self) -> str:
        verdict = "accepted" if self.accepted else f"rejected({self.reason})"
        where = f" seq={self.seq}" if self.seq is not None else ""
        return f"step {self.index}: {self.actor} {self.op} -> {verdict}{where}"


@dataclass
class DemoRun:
    script: Script
    ledger: Ledger
    keys: dict[str, AddressKeyPair]
    results: list[StepResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.accepted for r in self.results)


def run_script(script: Script, seed: int = 0) -> DemoRun:
    """Replay every step against a fresh simulated ledger; a rejected step does not stop the run."""
    rng = random.Random(seed)
    params = PublicParams(script.depth)
    ledger = Ledger(params, replicas=script.replicas)
    keys = {name: AddressKeyPair.generate(rng) for name in script.parties}
    tokens: dict[str, bytes] = {}
    run = DemoRun(script, ledger, keys)

    for i, step in enumerate(script.steps):
        a = step.args
        me = keys[step.actor]
        try:
            if step.op == "store":
                ct, rec = protocol.store(a["data"].encode(), me, keys[a["provider"]].public, params, rng)
            elif step.op == "assign":
                ct, rec = protocol.assign_owner(tokens[a["token"]], me, keys[a["owner"]].public, ledger, params, rng)
            elif step.op == "share":
                ct, rec = protocol.share(tokens[a["token"]], me, keys[a["user"]].public, int(a["expiry"]), ledger, params, rng)
            else:
                ct, rec = protocol.access(tokens[a["token"]], me, keys[a["provider"]].public, int(a["now"]), ledger, params, rng)
        except KeyError as exc:
            raise ScriptError(f"step {i}: missing argument or unknown name {exc}") from None
        except UnsatisfiedError:
            run.results.append(StepResult(i, step.actor, step.op, False, "unprovable"))
            continue
        except (TokenError, UnknownCommitment) as exc:
            run.results.append(StepResult(i, step.actor, step.op, False, f"bad-token: {exc}"))
            continue
        verdict = ledger.submit_and_seal(rec)
        seq = len(ledger.log) - 1 if verdict else None
        run.results.append(StepResult(i, step.actor, step.op, verdict.accepted, None if verdict else verdict.reason.value, seq))
        if verdict and "as" in a:
            tokens[a["as"]] = ct
    return run


def write_key(path: Path, keys: AddressKeyPair) -> None:
    path.write_text(json.dumps({"sk_adr": keys.sk_adr.hex()}) + "\n")


def read_key(path: Path) -> AddressKeyPair:
    try:
        doc = json.loads(Path(path).read_text())
        return AddressKeyPair.from_secret(bytes.fromhex(doc["sk_adr"]))
    except (OSError, ValueError, KeyError) as exc:
        raise ScriptError(f"cannot read key file {path}: {exc}") from None


def cmd_demo(args) -> int:
    script = Script.load(args.script)
    run = run_script(script, args.seed)
    if args.json:
        print(json.dumps({"script": script.name, "seed": args.seed, "ok": run.ok, "steps": [vars(r) for r in run.results]}))
    else:
        print(f"script {script.name} (seed {args.seed}, depth {script.depth}, {script.replicas} replicas)")
        for r in run.results:
            print(r.line())
        print("events:")
        sys.stdout.write(run.ledger.events_ndjson())
    if args.events:
        Path(args.events).write_text(run.ledger.events_ndjson())
    if args.snapshot:
        Path(args.snapshot).write_bytes(run.ledger.export())
    if args.keys_dir:
        out = Path(args.keys_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, keys in run.keys.items():
            write_key(out / f"{name}.key", keys)
    return 0 if run.ok else EXIT_REJECTED


# --- bench ----------------------------------------------------------------------


def _chain(params: PublicParams, rng, upto: RecordType):
    """Fresh chain on its own ledger up to ``upto``; returns that record and its prove time."""
    ledger = Ledger(params)
    owner, provider, user = (AddressKeyPair.generate(rng) for _ in range(3))
    steps = [
        (RecordType.STORE, lambda tk: protocol.store(b"bench", owner, provider.public, params, rng)),
        (RecordType.OWN, lambda tk: protocol.assign_owner(tk, provider, owner.public, ledger, params, rng)),
        (RecordType.SHARE, lambda tk: protocol.share(tk, owner, user.public, 100, ledger, params, rng)),
        (RecordType.ACCESS, lambda tk: protocol.access(tk, user, provider.public, 50, ledger, params, rng)),
    ]
    tk = None
    for kind, op in steps:
        start = time.perf_counter()
        tk, rec = op(tk)
        elapsed = time.perf_counter() - start
        if kind is upto:
            return rec, elapsed
        if not ledger.submit_and_seal(rec):
            raise RuntimeError(f"benchmark setup: {kind.name.lower()} record rejected")
    raise AssertionError("unreachable")


def bench_relation(kind: RecordType, depth: int, runs: int = 5, seed: int = 0) -> dict:
    params = PublicParams(depth)
    report = rel.constraint_report(kind.relation, depth)
    rng = random.Random(seed)
    prove_s, verify_s, sizes = [], [], set()
    for _ in range(runs):
        rec, elapsed = _chain(params, rng, kind)
        prove_s.append(elapsed)
        start = time.perf_counter()
        ok = rel.verify(kind.relation, rec.instance(), rec.proof, depth, gens=params.generators)
        verify_s.append(time.perf_counter() - start)
        if not ok:
            raise RuntimeError(f"{kind.name.lower()} proof failed to verify")
        sizes.add(len(rec.proof))
    (proof_bytes,) = sizes
    return {
        "relation": kind.relation.name.lower(),
        "depth": depth,
        "constraints": report.constraints,
        "multiplications": report.gates,
        "proof_bytes": proof_bytes,
        "proof_elements": proof_bytes // 32,
        "prove_s": statistics.median(prove_s),
        "verify_s": statistics.median(verify_s),
        "runs": runs,
    }


def cmd_bench(args) -> int:
    kinds = list(_OPS.values()) if args.relation == "all" else [_OPS[args.relation]]
    rows = [bench_relation(k, args.depth, args.runs, args.seed) for k in kinds]
    if args.json:
        print(json.dumps(rows, indent=2))
        return 0
    header = f"{'relation':<9}{'depth':>6}{'|C|':>9}{'|M|':>8}{'prove s':>10}{'verify s':>10}{'proof B':>9}"
    print(header)
    for r in rows:
        print(
            f"{r['relation']:<9}{r['depth']:>6}{r['constraints']:>9}{r['multiplications']:>8}"
            f"{r['prove_s']:>10.3f}{r['verify_s']:>10.3f}{r['proof_bytes']:>9}"
        )
    print(f"medians of {args.runs} runs; prove time includes record assembly")
    return 0


# --- audit ------------------------------------------------------------------------


def cmd_audit(args) -> int:
    try:
        ledger = Ledger.load(Path(args.snapshot).read_bytes())
    except (OSError, ValueError) as exc:
        print(f"error: cannot load snapshot {args.snapshot}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    keys = read_key(args.key)
    if not 0 <= args.record < len(ledger.log):
        print(f"error: record {args.record} not in log (0..{len(ledger.log) - 1})", file=sys.stderr)
        return EXIT_USAGE
    report = ledger.audit(args.record, keys)
    if args.json:
        print(json.dumps(report.as_dict()))
    else:
        print(f"record {report.seq} ({report.record_type}): {report.verdict}")
        for k, v in report.as_dict().items():
            if k not in ("seq", "record_type", "verdict") and v:
                print(f"  {k}: {v}")
    if report.verdict == "decryption-failed":
        print(f"error: key {args.key} cannot decrypt the token of record {args.record}; wrong key?", file=sys.stderr)
        return EXIT_USAGE
    return 0 if report.match else EXIT_REJECTED


# --- entry point --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zkaudit", description=__doc__.splitlines()[0], epilog=f"cache: ${CACHE_ENV}")
    sub = parser.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", help="replay a scenario script against a simulated ledger")
    demo.add_argument("--script", default="happy-path", help=f"script path or bundled name ({', '.join(BUNDLED)})")
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--json", action="store_true")
    demo.add_argument("--events", help="also write the NDJSON event log here")
    demo.add_argument("--snapshot", help="write the final ledger snapshot here")
    demo.add_argument("--keys-dir", help="write each party's key file into this directory")
    demo.set_defaults(func=cmd_demo)

    bench = sub.add_parser("bench", help="constraint counts, proof sizes and prove/verify times")
    bench.add_argument("--relation", choices=[*_OPS, "all"], default="all")
    bench.add_argument("--depth", type=int, default=4)
    bench.add_argument("--runs", type=int, default=5)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--json", action="store_true")
    bench.set_defaults(func=cmd_bench)

    audit = sub.add_parser("audit", help="decrypt a logged record's token and check it against the ledger")
    audit.add_argument("--snapshot", required=True)
    audit.add_argument("--record", type=int, required=True, help="sequence number in the log")
    audit.add_argument("--key", required=True, help="key file written by demo --keys-dir")
    audit.add_argument("--json", action="store_true")
    audit.set_defaults(func=cmd_audit)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "runs", 5) < 5 and args.command == "bench":
        print("error: benchmarks need at least 5 runs", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ScriptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
