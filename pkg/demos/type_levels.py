#!/usr/bin/env python3
"""How graininess and support pick an entity-type level for one slot.

    python demos/type_levels.py
"""

from collections import Counter

from metapattern.corpus import load_ontology
from metapattern.typeadjust import decide_slot

ONTOLOGY = """\
ROOT\tLOCATION
ROOT\tPERSON
LOCATION\tCOUNTRY
LOCATION\tETHNICITY
LOCATION\tCITY
PERSON\tPOLITICIAN
PERSON\tATHLETE
"""

CASES = {
    # slot of "$LOCATION president $PERSON": mostly countries and ethnicities
    "LOCATION": Counter({"COUNTRY": 50, "ETHNICITY": 30, "CITY": 2, "LOCATION": 18}),
    # slot of "$PERSON 's age is $DIGIT": most people have no finer type
    "PERSON": Counter({"PERSON": 90, "POLITICIAN": 6, "ATHLETE": 4}),
}


def main(theta=0.8, gamma=0.1):
    onto = load_ontology(ONTOLOGY)
    for root, dist in CASES.items():
        d = decide_slot(root, dist, onto, theta, gamma)
        print(f"\nslot typed {root}, bindings {dict(dist)}")
        for t, g, s in d.diagnostics:
            verdict = "descend" if t in d.descend else "drop" if t in d.dropped else "keep"
            print(f"  {t:<10} g={g:.2f} s={s:.2f} -> {verdict}")
        finals = Counter()
        for t, n in dist.items():
            finals[d.assign(onto.path_to(t))] += n
        print("  final types:", {k or "(discarded)": v for k, v in finals.items()})


if __name__ == "__main__":
    main()
