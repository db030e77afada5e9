import os
import time

import pytest

from metapattern.corpus import load_ontology, parse_typed_corpus
from metapattern.pipeline import Inputs, PipelineConfig, run_pipeline
from metapattern.synthetic import SyntheticSpec, generate_synthetic

ONTOLOGY_TEXT = """\
# test ontology
ROOT\tLOCATION
ROOT\tPERSON
ROOT\tORGANIZATION
LOCATION\tCOUNTRY
LOCATION\tETHNICITY
LOCATION\tCITY
PERSON\tPOLITICIAN
PERSON\tATHLETE
ORGANIZATION\tCOMPANY
"""


@pytest.fixture(scope="session")
def ontology():
    return load_ontology(ONTOLOGY_TEXT)


@pytest.fixture
def small_corpus(ontology):
    lines = [
        "d1\tE|United_States|United States|LOCATION>COUNTRY W|president E|Barack_Obama|Barack Obama|PERSON>POLITICIAN M|.",
        "d1\tW|the E|Russian|Russian|LOCATION>ETHNICITY W|president E|Vladimir_Putin|Vladimir Putin|PERSON>POLITICIAN W|said M|.",
        "d2\tE|Barack_Obama|Barack Obama|PERSON>POLITICIAN W|'s W|age W|is W|55 M|.",
        "d2\tE|France|France|LOCATION>COUNTRY W|president E|Francois_Hollande|Francois Hollande|PERSON>POLITICIAN M|.",
    ]
    return parse_typed_corpus("\n".join(lines) + "\n", ontology)


@pytest.fixture(scope="session")
def bundle_dir(tmp_path_factory):
    """The shipped synthetic benchmark, generated once per session."""
    out = tmp_path_factory.mktemp("synthetic")
    generate_synthetic(SyntheticSpec()).write(str(out))
    return str(out)


def bundle_inputs(d):
    f = lambda n: os.path.join(d, n)  # noqa: E731
    return Inputs(f("corpus.txt"), f("labels.tsv"), f("pair_labels.tsv"), f("catalog.tsv"),
                  f("assignments.tsv"), f("gold.tsv"))


@pytest.fixture(scope="session")
def pipeline_runs(bundle_dir, tmp_path_factory):
    """Lazily computed pipeline runs on the shipped corpus, keyed by mode.

    ``get.elapsed[mode]`` holds the wall time of each run in seconds.
    """
    cache = {}

    def get(mode):
        if mode not in cache:
            out = str(tmp_path_factory.mktemp(f"run_{mode}"))
            cfg = PipelineConfig(mode=mode, ontology=os.path.join(bundle_dir, "ontology.tsv"))
            t0 = time.perf_counter()
            metrics = run_pipeline(cfg, bundle_inputs(bundle_dir), out)
            get.elapsed[mode] = time.perf_counter() - t0
            cache[mode] = (out, metrics)
        return cache[mode]

    get.elapsed = {}
    return get
