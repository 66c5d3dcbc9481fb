"""Validate session exports against the published schema.

Also checks that a few corrupted copies are rejected, so a schema that
accepts everything cannot pass.
"""

import copy
import json
import sys

import jsonschema


def main() -> int:
    schema_path, *exports = sys.argv[1:]
    with open(schema_path) as f:
        schema = json.load(f)
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    for path in exports:
        with open(path) as f:
            doc = json.load(f)
        errors = list(validator.iter_errors(doc))
        for e in errors:
            print(f"{path}: {'/'.join(map(str, e.absolute_path))}: {e.message}")
        if errors:
            return 1
        if not doc["windows"]:
            print(f"{path}: no windows to check")
            return 1

        corruptions = [
            lambda d: d["windows"][0].pop("terms"),
            lambda d: d["windows"][0]["tones"].update(confident=1.5),
            lambda d: d["windows"][0].update(status="fine"),
            lambda d: d["config"].update(mode="auto"),
            lambda d: d.update(extra=1),
        ]
        for i, corrupt in enumerate(corruptions):
            bad = copy.deepcopy(doc)
            corrupt(bad)
            if validator.is_valid(bad):
                print(f"{path}: corruption {i} was accepted")
                return 1
        print(f"{path}: valid ({len(doc['windows'])} windows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
