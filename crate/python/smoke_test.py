"""Smoke test for the reann extension: one seed on lenses, phase by phase."""

import json
from pathlib import Path

import reann

DATA = Path(__file__).resolve().parent.parent / "data" / "lenses.data"


def main():
    cfg = reann.RunConfig("lenses", data_path=str(DATA), seeds=[0])
    assert cfg.dataset == "lenses"
    assert reann.RunConfig.from_toml(cfg.to_toml()).seeds == [0]

    train, test = reann.load_splits(cfg)
    assert len(train) == 12 and len(test) == 12

    grown = reann.grow(cfg, train, 0)
    pruned, rolled_back = reann.prune(cfg, grown, train, 0)
    assert pruned.connections <= grown.connections
    again = reann.Network.from_json(pruned.to_json(cfg))
    assert again.connections == pruned.connections

    disc = reann.discretize(cfg, pruned, train)
    assert disc.discrete_accuracy >= disc.continuous_accuracy - 0.01
    rules = reann.extract(cfg, disc, train)
    text = rules.text()
    assert text.splitlines()[-1].startswith("Default Rule: ")
    assert reann.RuleSet.from_json(rules.to_json()).text() == text
    assert 0.0 <= rules.accuracy(test) <= 1.0

    record = json.loads(reann.run_seed(cfg, 0))
    report = json.loads(reann.run(cfg))
    assert record["seed"] == 0 and report["records"][0] == record

    print(text)
    print("smoke test ok: rollback=%s test accuracy=%.4f" % (rolled_back, rules.accuracy(test)))


if __name__ == "__main__":
    main()
