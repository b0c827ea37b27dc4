"""Command-line front end.

    python3 -m rigidity build-seq     --config run.json --out out/
    python3 -m rigidity build-measure --pmax 2
    python3 -m rigidity verify
    python3 -m rigidity witness-poly  --l 2 --l 3
    python3 -m rigidity report

Every command writes into ``--out``; failures exit with the code of the
raised error and leave ``error.json`` next to the partial outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from .angle import to_decimal_string
from .config import RunConfig
from .errors import ConfigError, RigidityError
from .fejer import build_witness
from .measure import MeasureTower, interval_masses, measure_document, mu, restore_tower
from .output import atomic_write, bar_plot, dumps, line_plot, write_json
from .sequence import RigiditySequence, build_sequence, theorem1_check
from .store import load_sequence, write_sequence
from .verify import (
    Record,
    bucket,
    coverage,
    divisibility_profile,
    frac_pi,
    obstruction_check,
    remark7_check,
    replay_stages,
)

COMMANDS = ("build-seq", "build-measure", "verify", "witness-poly", "report")


class Run:
    """One CLI invocation: the config, the output root and lazily built objects."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.family = cfg.make_family()
        self._seq: RigiditySequence | None = None
        self.threads = cfg.threads or (os.cpu_count() or 1)

    # sequence -----------------------------------------------------------

    def build_seq(self) -> RigiditySequence:
        cfg = self.cfg
        seq = build_sequence(
            self.family,
            cfg.num_stages,
            cfg.num_bases,
            cfg.length,
            k_max=cfg.k_max,
            window_budget=cfg.window_budget,
            k_policy=cfg.k_policy_fn(),
            box_budget=cfg.box_budget,
            threads=self.threads,
        )
        write_sequence(self.out / "sequence", seq, self.family, cfg.sequence_key())
        self._seq = seq
        return seq

    @property
    def seq(self) -> RigiditySequence:
        if self._seq is None:
            self._seq = load_sequence(self.out / "sequence", self.cfg.sequence_key()) or self.build_seq()
        return self._seq

    # measure ------------------------------------------------------------

    def build_measure(self) -> MeasureTower:
        tower = MeasureTower(
            self.family, self.seq, scan_budget=self.cfg.scan_budget, slack_fraction=Fraction(self.cfg.slack_fraction)
        )
        error = None
        try:
            tower.build(self.cfg.p_max)
        except RigidityError as exc:
            error = exc
        d = self.out / "measure"
        for p in range(tower.p + 1):
            write_json(d / f"mu_{p}.json", measure_document(tower, p))
        write_json(
            d / "schedule.json",
            {
                "requested_p_max": self.cfg.p_max,
                "reached_p": tower.p,
                "schedule": tower.schedule.as_dict(),
                "records": [r.as_dict() for r in tower.schedule.records],
                "error": error.record() if error else None,
            },
        )
        if error:
            raise error
        return tower

    def stored_tower(self) -> MeasureTower | None:
        d = self.out / "measure"
        files = sorted(d.glob("mu_*.json"), key=lambda p: int(p.stem.split("_")[1]))
        if not files:
            return None
        doc = json.loads(files[-1].read_text(encoding="utf-8"))
        return restore_tower(self.family, self.seq, doc)

    # verification -------------------------------------------------------

    def verify(self) -> list[Record]:
        cfg, fam, seq = self.cfg, self.family, self.seq
        records = replay_stages(fam, seq, digits=80)

        k, eps = cfg.theorem1["k"], cfg.fraction("theorem1")
        n0 = theorem1_check(seq, eps, k, fam)
        records.append(
            Record("theorem1", {"k": k, "eps": str(eps)}, "NOT_YET" if n0 is None else "TRUE", witness=n0)
        )

        i, eps7 = cfg.remark7["i"], cfg.fraction("remark7")
        r7 = remark7_check(seq, i, eps7, fam)
        records.append(
            Record(
                "remark7",
                {"i": i, "eps": str(eps7)},
                "NOT_YET" if r7.n0 is None else "TRUE",
                witness=r7.n0,
                margin=None if r7.max_after is None else float(Fraction(1, 2) + eps7 - r7.max_after),
            )
        )

        theta = frac_pi()
        for l in cfg.coverage_l:
            cov = coverage(theta, seq.values, l, label="frac(pi)")
            records.append(
                Record(
                    "coverage",
                    {"theta": "frac(pi)", "l": l, "N": len(seq)},
                    "FULL" if cov.full else "NOT_YET",
                    witness=cov.as_dict(),
                )
            )

        profile = divisibility_profile(seq, cfg.k_max)
        done = seq.completed_super_stages()
        for kk, row in profile.items():
            ok = all(row["per_super_stage"].get(j, 0) >= 1 for j in done)
            records.append(
                Record(
                    "divisibility",
                    {"k": kk, "completed_super_stages": done},
                    "TRUE" if ok else "FALSE",
                    witness=row["per_super_stage"],
                    margin=len(row["indices"]),
                )
            )

        for b in seq.bases:
            if not b.stages:
                continue
            delta = 2 * b.stages[-1].eps
            approximated = sorted({t for st in b.stages for t in st.indices})
            for t in sorted(set(approximated) | {b.excluded}):
                res = obstruction_check(b, t, delta, fam)
                expect = "FAIL" if t == b.excluded else "CONFINED"
                records.append(
                    Record(
                        "obstruction",
                        {"excluded": b.excluded, "theta": f"alpha_{t}", "delta": str(delta), "expected": expect},
                        res.outcome,
                        witness=res.as_dict(),
                    )
                )

        tower = self.stored_tower()
        if tower is not None:
            records.extend(self._measure_records(tower))
        return records

    def _measure_records(self, tower: MeasureTower) -> list[Record]:
        out = []
        for p in range(tower.p + 1):
            for rec in (tower.check_add(p), tower.check_i(p), tower.check_ii(p)):
                out.append(Record(f"measure_{rec.name}", {"p": p, "scope": rec.scope}, rec.outcome, rec.witness, rec.margin))
            m = mu(tower.ks, p)
            for p0 in range(1, p + 1):
                try:
                    arcs = interval_masses(m, p0, self.family)
                    out.append(
                        Record(
                            "interval_masses",
                            {"p": p, "p0": p0},
                            "TRUE",
                            witness=[str(mass) for _, _, mass in arcs],
                            margin=to_decimal_string(arcs[0][1], 12),
                        )
                    )
                except RigidityError as exc:
                    out.append(Record("interval_masses", {"p": p, "p0": p0}, "FALSE", witness=exc.record()))
        for p in range(tower.p):
            for s in range(1, 2**p + 1):
                if p == 0:
                    continue
                for rec in tower.check_abc(p, s) + [tower.check_perturbation(p, s)]:
                    out.append(
                        Record(f"measure_{rec.name}", {"p": p, "s": s, "scope": rec.scope}, rec.outcome, rec.witness, rec.margin)
                    )
        return out

    # witnesses ----------------------------------------------------------

    def witness_poly(self, ls) -> list[dict]:
        out = []
        for l in ls:
            poly, cert = build_witness(l)
            d = self.out / "witness"
            atomic_write(d / f"phi_{l}.csv", poly.to_csv())
            doc = {
                "l": l,
                "degree": poly.degree,
                "recipe": poly.recipe,
                "outcome": cert.outcome.value,
                "margin": cert.margin,
                "detail": cert.detail,
            }
            write_json(d / f"phi_{l}.json", doc)
            out.append(doc)
        return out

    # report -------------------------------------------------------------

    def plots(self, tower: MeasureTower | None) -> None:
        d = self.out / "report" / "plots"
        seq = self.seq
        series = {}
        if tower is not None:
            for p in range(tower.p + 1):
                m = mu(tower.ks, p)
                series[f"p={p}"] = [(n, float(tower.ev.mu_eval(m, n).mid)) for n in range(1, len(seq) + 1)]
        atomic_write(d / "mu_eval.svg", line_plot(series, "mu_eval(mu_p, n)", "n", "integral of ||m_n theta||"))

        bins = 20
        theta = frac_pi()
        counts = [0] * bins
        for m in seq.values:
            b = bucket(theta, m, bins)
            if b is not None:
                counts[b] += 1
        labels = [f"{b / bins:.2f}" for b in range(bins)]
        atomic_write(
            d / "histogram.svg",
            bar_plot({"frac(m_n pi)": counts}, labels, "frac(m_n pi) histogram", "arc", "count"),
        )

        profile = divisibility_profile(seq, self.cfg.k_max)
        stages = sorted({t.stage for t in seq.terms})
        groups = {f"k={k}": [row["per_super_stage"].get(j, 0) for j in stages] for k, row in profile.items()}
        atomic_write(
            d / "divisibility.svg",
            bar_plot(groups, [f"stage {j}" for j in stages], "terms not divisible by k", "super-stage", "count"),
        )


def _write_error(out: Path, exc: RigidityError) -> None:
    write_json(out / "error.json", exc.record())
    print(dumps(exc.record()), end="", file=sys.stderr)


def run(command: str, cfg: RunConfig, ls=None) -> int:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}", operation="cli.run")
    r = Run(cfg)
    r.out.mkdir(parents=True, exist_ok=True)
    write_json(r.out / "config.json", cfg.content_dict())
    err = r.out / "error.json"
    if err.exists():
        err.unlink()
    failure: RigidityError | None = None
    try:
        if command == "build-seq":
            r.build_seq()
        elif command == "build-measure":
            r.build_measure()
        elif command == "witness-poly":
            r.witness_poly(ls or cfg.witness_l)
        elif command == "verify":
            write_json(r.out / "verify" / "report.json", [x.as_dict() for x in r.verify()])
        elif command == "report":
            r.build_seq()
            try:
                r.build_measure()
            except RigidityError as exc:
                failure = exc
            witnesses = r.witness_poly(cfg.witness_l)
            records = r.verify()
            write_json(r.out / "verify" / "report.json", [x.as_dict() for x in records])
            r.plots(r.stored_tower())
            write_json(
                r.out / "report" / "summary.json",
                {
                    "config": cfg.content_dict(),
                    "sequence_length": len(r.seq),
                    "sequence_head": r.seq.values[:10],
                    "completed_super_stages": r.seq.completed_super_stages(),
                    "witness_degrees": {str(w["l"]): w["degree"] for w in witnesses},
                    "outcomes": _tally(records),
                    "measure_error": failure.record() if failure else None,
                },
            )
    except RigidityError as exc:
        failure = exc
    if failure is not None:
        _write_error(r.out, failure)
        return failure.exit_code
    return 0


def _tally(records: list[Record]) -> dict:
    out: dict[str, dict[str, int]] = {}
    for rec in records:
        row = out.setdefault(rec.check, {})
        row[rec.outcome] = row.get(rec.outcome, 0) + 1
    return out


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rigidity", description="Rigidity sequences and atomic measure towers.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="JSON run configuration")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--stages", type=int, help="number of stages per base sequence")
    ap.add_argument("--length", type=int, help="number of interleaved terms")
    ap.add_argument("--pmax", type=int, help="highest measure generation")
    ap.add_argument("--digits-cap", type=int, help="precision cap in decimal digits")
    ap.add_argument("--threads", type=int, help="scan threads (0 = auto)")
    ap.add_argument("--l", type=int, action="append", dest="ls", help="witness-poly: interval count (repeatable)")
    return ap


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    out = Path(args.out or "out")
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        cfg = cfg.with_overrides(
            out=args.out,
            num_stages=args.stages,
            length=args.length,
            p_max=args.pmax,
            digit_cap=args.digits_cap,
            threads=args.threads,
        )
        out = Path(cfg.out)
        return run(args.command, cfg, args.ls)
    except RigidityError as exc:
        out.mkdir(parents=True, exist_ok=True)
        _write_error(out, exc)
        return exc.exit_code
