"""Run every CLI subcommand on a small demo corpus and validate each JSON it
writes against schemas/report.schema.json."""

import copy
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

DEFS_BY_NAME = {
    "report.json": "report",
    "evaluation.json": "evaluation",
    "comparison.json": "comparison",
    "sweep.json": "sweep",
    "manifest.json": "manifest",
    "prepare.json": "prepare",
    "features.json": "features",
    "config.json": "config",
}


def validator_for(schema, definition):
    sub = copy.deepcopy(schema)
    sub["$ref"] = "#/$defs/" + definition
    return jsonschema.Draft202012Validator(sub)


def run(cli, cwd, *args, expect=0):
    proc = subprocess.run([cli, *args], cwd=cwd, capture_output=True, text=True)
    if proc.returncode != expect:
        sys.exit(f"toxfair {' '.join(args)} exited {proc.returncode}, expected {expect}\n{proc.stderr}")
    return proc.stdout


def main():
    cli = str(pathlib.Path(sys.argv[1]).resolve())
    source_dir = pathlib.Path(sys.argv[2]).resolve()
    schema = json.loads((source_dir / "schemas" / "report.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(schema)

    with tempfile.TemporaryDirectory() as tmp:
        work = pathlib.Path(tmp)
        data = source_dir / "data"
        run(cli, work, "synth", "--demo-corpus", "--comments", "1500", "--tweets", "60", "--out", "data",
            "--identity-terms", str(data / "identity_terms.txt"), "--slur-terms", str(data / "slur_placeholders.txt"))

        base = {
            "paths": {
                "comments": "data/comments.csv",
                "embeddings": "data/embeddings.txt",
                "templates": str(data / "templates.tsv"),
                "identity_terms": str(data / "identity_terms.txt"),
                "slur_terms": str(data / "slur_placeholders.txt"),
                "tweets": "data/tweets.csv",
                "external_scores": "data/external_scores.csv",
            },
            "split": {"train": 0.7, "validation": 0.1, "test": 0.2},
            "features": {"kind": "tfidf", "min_df": 1},
            "model": {"kind": "logistic", "learning_rate": 0.05, "epochs": 3},
            "rebalance": {
                "enabled": True,
                "synthetic_per_category": 50,
                "targets": {
                    "toxic_identity": 100,
                    "toxic_non_identity": 100,
                    "non_toxic_identity": 100,
                    "non_toxic_non_identity": 100,
                },
            },
            "seed": 3,
        }
        (work / "c.json").write_text(json.dumps(base))
        embed = copy.deepcopy(base)
        embed["features"] = {"kind": "embed_sum", "oov": "unknown_vector"}
        embed["model"] = {"kind": "mlp", "hidden": [8], "epochs": 2}
        (work / "e.json").write_text(json.dumps(embed))
        sweep = copy.deepcopy(base)
        sweep["sweep"] = {"category": "toxic_identity", "from": 0, "to": 100, "step": 50}
        (work / "s.json").write_text(json.dumps(sweep))

        run(cli, work, "prepare", "--config", "c.json", "--out", "prep")
        run(cli, work, "train", "--config", "c.json", "--out", "run")
        run(cli, work, "train", "--config", "e.json", "--out", "embed")
        run(cli, work, "evaluate", "--config", "c.json", "--model", "run", "--out", "eval")
        run(cli, work, "compare-external", "--config", "c.json", "--model", "run", "--out", "cmp")
        run(cli, work, "sweep", "--config", "s.json", "--out", "sweep")
        effective = json.loads(run(cli, work, "train", "--config", "c.json", "--print-effective-config"))

        documents = [("--print-effective-config", "config", effective)]
        for path in sorted(work.rglob("*.json")):
            if path.name in DEFS_BY_NAME and path.parent != work:
                documents.append((str(path.relative_to(work)), DEFS_BY_NAME[path.name], json.loads(path.read_text())))

        seen = {definition for _, definition, _ in documents}
        missing = set(DEFS_BY_NAME.values()) - seen
        failures = 0
        if missing:
            print(f"no output exercised: {sorted(missing)}")
            failures += 1
        for name, definition, document in documents:
            errors = list(validator_for(schema, definition).iter_errors(document))
            status = "ok" if not errors else "INVALID"
            print(f"{status:8} {definition:11} {name}")
            for error in errors[:5]:
                print(f"         at {list(error.absolute_path)}: {error.message[:200]}")
            failures += bool(errors)

        # The schema must also reject what the tool never writes.
        report = json.loads((work / "run" / "report.json").read_text())
        bad = dict(report, stray=1)
        if validator_for(schema, "report").is_valid(bad):
            print("schema accepted a report with an unknown key")
            failures += 1
        bad = dict(report, auc=1.5)
        if validator_for(schema, "report").is_valid(bad):
            print("schema accepted an out-of-range AUC")
            failures += 1

    print(f"{len(documents)} documents checked, {failures} problems")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
