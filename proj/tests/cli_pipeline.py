"""End-to-end checks of the eileen CLI and the HTTP API it serves.

Run as: python3 cli_pipeline.py --cli build/tools/eileen --source-dir .
"""

import argparse
import filecmp
import json
import os
import re
import subprocess
import sys
import tempfile
import time
import unittest
from pathlib import Path

import jsonschema
import requests

ARGS = None


def cli(*args, artifacts, check=True):
    proc = subprocess.run([ARGS.cli, "--artifacts", str(artifacts), *map(str, args)],
                          capture_output=True, text=True, timeout=300)
    if check and proc.returncode != 0:
        raise AssertionError(f"{args} exited {proc.returncode}: {proc.stderr}")
    return proc


def run_pipeline(artifacts):
    fixtures = Path(ARGS.source_dir) / "data" / "fixtures"
    corpus = fixtures / "corpus"
    cli("ingest", "-i", f"pubmed={corpus / 'pubmed.jsonl'}",
        "-i", f"federal_exporter={corpus / 'federal_exporter.jsonl'}", artifacts=artifacts)
    cli("build-index", artifacts=artifacts)
    cli("fit-lsa", artifacts=artifacts)
    cli("simulate-users", artifacts=artifacts)
    cli("train-ltr", artifacts=artifacts)
    eval_out = cli("--json", "eval-ltr", artifacts=artifacts)
    cli("train-keyphrase", "--semeval", fixtures / "keyphrase", artifacts=artifacts)
    cli("extract-keyphrases", "--out", artifacts / "keyphrases.tsv", artifacts=artifacts)
    stats = cli("stats", artifacts=artifacts)
    return json.loads(eval_out.stdout), stats.stdout


class Pipeline(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        cls.root = Path(cls.tmp.name)
        start = time.monotonic()
        cls.report, cls.stats = run_pipeline(cls.root / "first")
        cls.seconds = time.monotonic() - start

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def test_runs_under_a_minute(self):
        self.assertLess(self.seconds, 60.0)

    def test_variant_report(self):
        by_name = {r["variant"]: r["auc"] for r in self.report}
        self.assertEqual(set(by_name), {"all12", "no_es_score", "no_library_cosine", "es_only",
                                        "es_plus_library"})
        self.assertGreaterEqual(by_name["all12"] - by_name["es_only"], 0.15)

    def test_stats_rows(self):
        for label in ("Number of documents\t200", "Keyphrases with one word",
                      "Keyphrases with more than five words"):
            self.assertIn(label, self.stats)

    def test_rerun_is_byte_identical(self):
        second = self.root / "second"
        run_pipeline(second)
        first = self.root / "first"
        files = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file())
        self.assertIn(Path("ltr_model.json"), files)
        self.assertIn(Path("keyphrases.tsv"), files)
        for rel in files:
            with self.subTest(file=str(rel)):
                self.assertTrue(filecmp.cmp(first / rel, second / rel, shallow=False))


class Errors(unittest.TestCase):
    def test_usage_errors_exit_2(self):
        with tempfile.TemporaryDirectory() as tmp:
            self.assertEqual(cli("no-such-command", artifacts=tmp, check=False).returncode, 2)
            self.assertEqual(cli("ingest", artifacts=tmp, check=False).returncode, 2)
            self.assertEqual(cli(artifacts=tmp, check=False).returncode, 2)

    def test_help_for_every_command(self):
        for command in ("ingest", "build-index", "fit-lsa", "train-ltr", "eval-ltr", "train-keyphrase",
                        "extract-keyphrases", "stats", "simulate-users", "serve"):
            with self.subTest(command=command):
                proc = subprocess.run([ARGS.cli, command, "--help"], capture_output=True, text=True)
                self.assertEqual(proc.returncode, 0)
                self.assertIn("Exit codes", proc.stdout)

    def test_missing_artifacts_is_io_error(self):
        with tempfile.TemporaryDirectory() as tmp:
            proc = cli("stats", artifacts=tmp, check=False)
            self.assertEqual(proc.returncode, 3)
            self.assertIn("train-keyphrase", proc.stderr)

    def test_eval_ltr_with_one_user(self):
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            corpus = Path(ARGS.source_dir) / "data" / "fixtures" / "corpus"
            cli("ingest", "-i", f"pubmed={corpus / 'pubmed.jsonl'}", artifacts=tmp)
            cli("fit-lsa", artifacts=tmp)
            cli("build-index", artifacts=tmp)
            cli("simulate-users", "--users", 1, artifacts=tmp)
            proc = cli("eval-ltr", artifacts=tmp, check=False)
            self.assertEqual(proc.returncode, 6)
            self.assertIn("need ≥ 2 users for 4:1 split", proc.stderr)


class Serve(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        with open(Path(ARGS.source_dir) / "docs" / "api_schema.json", encoding="utf-8") as f:
            cls.schema = json.load(f)
        cls.tmp = tempfile.TemporaryDirectory()
        artifacts = Path(cls.tmp.name)
        fixtures = Path(ARGS.source_dir) / "data" / "fixtures"
        cli("ingest", "-i", f"pubmed={fixtures / 'corpus' / 'pubmed.jsonl'}", artifacts=artifacts)
        cli("fit-lsa", "--k", 30, artifacts=artifacts)
        cli("build-index", artifacts=artifacts)
        cli("train-keyphrase", "--semeval", fixtures / "keyphrase", "--trees", 50, artifacts=artifacts)
        cls.server = subprocess.Popen([ARGS.cli, "--artifacts", str(artifacts), "serve", "--port", "0"],
                                      stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        line = cls.server.stdout.readline()
        match = re.search(r":(\d+)\s*$", line)
        if not match:
            cls.server.kill()
            raise AssertionError(f"server did not report a port: {line!r} {cls.server.stderr.read()}")
        cls.base = f"http://127.0.0.1:{match.group(1)}"
        cls.artifacts = artifacts

    @classmethod
    def tearDownClass(cls):
        cls.server.terminate()
        cls.server.wait(timeout=30)
        cls.tmp.cleanup()

    def check(self, response, status, definition):
        self.assertEqual(response.status_code, status, response.text)
        self.assertIn("application/json", response.headers["Content-Type"])
        jsonschema.validate(response.json(), {**self.schema, "$ref": f"#/$defs/{definition}"})
        return response.json()

    def test_session(self):
        self.check(requests.get(f"{self.base}/health", timeout=10), 200, "health")
        user = self.check(requests.post(f"{self.base}/users", json={"display_name": "Ada"}, timeout=10),
                          201, "user")
        auth = {"Authorization": f"Bearer {user['token']}"}

        self.check(requests.get(f"{self.base}/recommendations", headers=auth, timeout=10), 409, "error")
        self.check(requests.post(f"{self.base}/search", json={"query": "malaria"}, timeout=10), 401, "error")
        self.check(requests.post(f"{self.base}/search", json={"query": " "}, headers=auth, timeout=10),
                   400, "error")

        found = self.check(requests.post(f"{self.base}/search", json={"query": "malaria transmission"},
                                         headers=auth, timeout=10), 200, "search")
        self.assertTrue(found["hits"])
        first = found["hits"][0]["doc_id"]
        voted = self.check(requests.post(f"{self.base}/vote", json={"doc_id": first, "vote": "relevant"},
                                         headers=auth, timeout=10), 200, "library_response")
        self.assertEqual(voted["library"]["relevant_ids"], [first])
        self.check(requests.post(f"{self.base}/vote", json={"doc_id": 10**6, "vote": "relevant"},
                                 headers=auth, timeout=10), 404, "error")

        rec = self.check(requests.get(f"{self.base}/recommendations", params={"top_k": 5}, headers=auth,
                                      timeout=10), 200, "recommendations")
        self.assertEqual(len(rec["recommendations"]), 5)
        self.assertNotIn(first, [d["doc_id"] for d in rec["recommendations"]])

        self.check(requests.get(f"{self.base}/library", headers=auth, timeout=10), 200, "library_response")
        popularity = self.check(requests.get(f"{self.base}/keyphrases/popularity", headers=auth, timeout=10),
                                200, "popularity")
        prefix = next(iter(popularity), "ma")[:2]
        self.check(requests.get(f"{self.base}/autocomplete", params={"prefix": prefix}, headers=auth,
                                timeout=10), 200, "autocomplete")
        self.check(requests.get(f"{self.base}/nowhere", headers=auth, timeout=10), 404, "error")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--cli", required=True)
    parser.add_argument("--source-dir", required=True)
    ARGS, rest = parser.parse_known_args()
    ARGS.cli = os.path.abspath(ARGS.cli)
    unittest.main(argv=[sys.argv[0], *rest], verbosity=2)
