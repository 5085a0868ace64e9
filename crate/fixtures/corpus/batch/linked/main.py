import json

from pipeline import localize


def run(path):
    with open(path) as handle:
        records = json.load(handle)
    return [localize(r) for r in records]
