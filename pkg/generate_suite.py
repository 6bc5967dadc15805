#!/usr/bin/env python3
"""Run the canonical experiment suite, skipping experiments whose inputs are unchanged."""

import argparse
import hashlib
import json
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple


OUTPUT_ROOT = Path("output/suite")
CACHE_FILE = Path(".suite_cache.json")


class Experiment(NamedTuple):
    name: str
    config: str
    commands: tuple[str, ...] = ("compare",)


SUITE = [
    Experiment("general", "configs/general.json", ("compare", "landscape")),
    Experiment("three_humps", "configs/three_humps.json"),
    Experiment("ackley_timing", "configs/ackley_timing.json"),
]


def digest(*parts: bytes) -> str:
    h = hashlib.sha256()
    for part in parts:
        h.update(part)
    return h.hexdigest()[:16]


def source_digest(root: Path = Path(".")) -> str:
    """Digest of every top-level module except this script."""
    sources = sorted(p for p in root.glob("*.py") if p.name != Path(__file__).name)
    return digest(*(p.read_bytes() for p in sources))


@dataclass
class SuiteCache:
    """Manifest of experiment name -> digest of its config, commands and the sources."""

    path: Path = CACHE_FILE
    entries: dict[str, str] = field(default_factory=dict)

    @classmethod
    def load(cls, path: Path = CACHE_FILE) -> "SuiteCache":
        try:
            entries = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError):
            entries = {}
        return cls(path, entries if isinstance(entries, dict) else {})

    def save(self) -> None:
        self.path.write_text(json.dumps(self.entries, indent=2, sort_keys=True) + "\n")

    @staticmethod
    def key(experiment: Experiment, sources: str) -> str:
        config = Path(experiment.config)
        manifest = {
            "commands": list(experiment.commands),
            "config": config.read_text() if config.exists() else None,
            "sources": sources,
        }
        return digest(json.dumps(manifest, sort_keys=True).encode())

    def is_fresh(self, experiment: Experiment, key: str, outdir: Path) -> bool:
        return self.entries.get(experiment.name) == key and (outdir / "summary.csv").exists()


def run_experiment(experiment: Experiment, outdir: Path) -> None:
    for command in experiment.commands:
        cmd = ["uv", "run", "python", "main.py", command, experiment.config, "-o", str(outdir)]
        result = subprocess.run(cmd, capture_output=True, text=True)
        if result.returncode != 0:
            raise RuntimeError(f"{experiment.name} {command} failed:\n{result.stderr}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Run the canonical experiment suite")
    parser.add_argument("-f", "--force", action="store_true", help="Rerun every experiment")
    parser.add_argument("--only", nargs="+", metavar="NAME", help="Run these experiments only")
    args = parser.parse_args(argv)

    cache = SuiteCache.load(CACHE_FILE)
    sources = source_digest()
    selected = [e for e in SUITE if not args.only or e.name in args.only]
    ran = skipped = 0

    for experiment in selected:
        outdir = OUTPUT_ROOT / experiment.name
        key = SuiteCache.key(experiment, sources)
        if not args.force and cache.is_fresh(experiment, key, outdir):
            print(f"{experiment.name}: up to date")
            skipped += 1
            continue

        print(f"Running {experiment.name}...")
        try:
            run_experiment(experiment, outdir)
        except RuntimeError as e:
            print(f"  ERROR: {e}")
            cache.save()
            return 1
        print(f"  Saved to {outdir}")
        cache.entries[experiment.name] = key
        ran += 1

    cache.save()
    print(f"\nRan {ran}, {skipped} up to date.")
    if skipped and not args.force:
        print("Use --force to rerun them.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
