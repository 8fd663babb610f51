"""Command line entry point: ``relamen JOB [--out PATH] [--seed N] [--threads N] [--exact]``."""
from __future__ import annotations

import argparse
import sys

from .errors import RelamenError
from .jobs import bundled_jobs, parse_spec, report_text, run


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relamen", description="Run a relamen job file and print a JSON report.")
    ap.add_argument("job", nargs="?", help="job file, or example:NAME for a bundled job")
    ap.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    ap.add_argument("--seed", type=int, default=None, help="override the task seed")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--exact", action="store_true", help="use rational arithmetic where available")
    ap.add_argument("--list-examples", action="store_true", help="list bundled job names and exit")
    ap.add_argument("--show", action="store_true", help="print the job file text instead of running it")
    return ap


def _read(job: str) -> str:
    if job.startswith("example:"):
        jobs = bundled_jobs()
        name = job.split(":", 1)[1]
        if name not in jobs:
            raise FileNotFoundError(f"no bundled job {name!r}; try --list-examples")
        return jobs[name]
    with open(job, encoding="utf-8") as fh:
        return fh.read()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_examples:
        for name in bundled_jobs():
            print(name)
        return 0
    if not args.job:
        print("relamen: a job file is required", file=sys.stderr)
        return 2
    if args.threads < 1:
        print("relamen: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        text = _read(args.job)
        if args.show:
            sys.stdout.write(text)
            return 0
        job = parse_spec(text)
    except (OSError, RelamenError) as exc:
        print(f"relamen: {exc}", file=sys.stderr)
        return 2
    report, code = run(job, seed=args.seed, threads=args.threads, exact=args.exact)
    out = report_text(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
