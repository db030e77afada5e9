#!/usr/bin/env python3
"""Walk through the library one stage at a time on a small synthetic corpus.

    python demos/walkthrough.py

Prints a few mined candidates, one segmented sentence, the synonym groups,
the type-adjusted groups and the top EAV tuples, then the evaluation.
"""

import os
import tempfile

from metapattern.pipeline import Inputs, PipelineConfig, Run, run_stage
from metapattern.synthetic import SyntheticSpec, generate_synthetic


def show(title, lines, limit=6):
    print(f"\n== {title}")
    for line in list(lines)[:limit]:
        print("  " + line.rstrip("\n"))


def main():
    work = tempfile.mkdtemp(prefix="metapattern-demo-")
    data = os.path.join(work, "data")
    paths = generate_synthetic(SyntheticSpec.scaled(0.25)).write(data)
    print(f"synthetic corpus written to {data}")

    config = PipelineConfig(mode="TS", ontology=paths["ontology"])
    inputs = Inputs(paths["corpus"], paths["labels"], paths["pair_labels"], paths["catalog"],
                    paths["assignments"], paths["gold"])
    run = Run(config, inputs, os.path.join(work, "run"))
    run.write("config.json", config.to_json())

    run_stage("mine", run)
    rows = [r for r in open(run.path("candidates.tsv")) if not r.startswith("#")]
    show(f"mine: {len(rows)} candidates; longest slotted ones (pattern, count, rectified)",
         sorted((r for r in rows if "$" in r), key=lambda r: -len(r.split("\t")[0]))[:6])

    run_stage("train-q", run)
    run_stage("segment", run)
    show("segment: quality patterns (id, pattern, quality, rectified count)",
         (r for r in open(run.path("quality_patterns.tsv")) if not r.startswith("#")), limit=10)
    show("segment: a segmented sentence", (r for r in open(run.path("segmented.txt")) if "[" in r), limit=1)

    run_stage("group", run)
    ids = {r.split("\t")[0]: r.split("\t")[1] for r in open(run.path("quality_patterns.tsv")) if not r.startswith("#")}
    show("group: synonym groups",
         (f"{g}: " + " | ".join(ids[m] for m in ms.strip().split(","))
          for g, ms in (r.split("\t") for r in open(run.path("groups.tsv")))), limit=10)

    run_stage("adjust", run)
    for g in run.read_groups("adjusted_groups.jsonl"):
        print(f"  adjusted -> {g.signature}: {len(g.extractions)} extractions, members {len(g.members)}")

    run_stage("extract", run)
    show("extract: top EAV tuples", open(run.path("eav.tsv")))

    metrics = run_stage("eval", run)
    print("\n== eval\n" + metrics.as_text())


if __name__ == "__main__":
    main()
