"""End-to-end checks of the gravistab command line: exit codes, determinism,
config round trip and schema validation of every emitted JSON file."""

import filecmp
import json
import pathlib
import subprocess
import sys
import tempfile
import unittest

import jsonschema
from referencing import Registry, Resource

BINARY = pathlib.Path(sys.argv[1]).resolve()
SCHEMAS = pathlib.Path(sys.argv[2]).resolve()

EXIT_PASS, EXIT_FAIL, EXIT_BLOWUP, EXIT_USAGE = 0, 2, 3, 64
CHECKS = ["inequalities", "antonov", "coercivity", "rearrangement", "kernel"]


def run(*args, cwd):
    return subprocess.run([str(BINARY), *map(str, args)], cwd=cwd, capture_output=True, text=True)


def load_registry():
    resources = []
    for path in SCHEMAS.glob("*.schema.json"):
        schema = json.loads(path.read_text())
        resources.append((schema["$id"], Resource.from_contents(schema)))
    return Registry().with_resources(resources)


REGISTRY = load_registry()


def validate(document_path, schema_name):
    schema = json.loads((SCHEMAS / f"{schema_name}.schema.json").read_text())
    validator = jsonschema.Draft202012Validator(schema, registry=REGISTRY)
    validator.validate(json.loads(pathlib.Path(document_path).read_text()))


class CliTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        cls.dir = pathlib.Path(cls.tmp.name)
        r = run("model", "build", "--law", "king", "--uc", "1", "--out", "king", cwd=cls.dir)
        assert r.returncode == EXIT_PASS, r.stderr
        r = run("model", "build", "--law", "polytrope", "--n", "1", "--cf", "1", "--uc", "1",
                "--out", "poly1", cwd=cls.dir)
        assert r.returncode == EXIT_PASS, r.stderr

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def test_version(self):
        r = run("--version", cwd=self.dir)
        self.assertEqual(r.returncode, EXIT_PASS)
        self.assertRegex(r.stdout.strip(), r"^gravistab \d+\.\d+\.\d+$")

    def test_model_outputs_validate(self):
        for name in ["king", "poly1"]:
            d = self.dir / name
            validate(d / "model.json", "model")
            validate(d / "residuals.json", "residuals")
            for profile in ["phi", "rho", "dphi"]:
                self.assertTrue((d / f"{profile}.csv").exists())
                validate(d / f"{profile}.csv.json", "profile_sidecar")
                header = (d / f"{profile}.csv").read_text().splitlines()[0]
                self.assertEqual(header, "r,value")

    def test_schemas_reject_bad_documents(self):
        doc = json.loads((self.dir / "king" / "model.json").read_text())
        doc["M"] = -1.0
        bad = self.dir / "bad_model.json"
        bad.write_text(json.dumps(doc))
        with self.assertRaises(jsonschema.ValidationError):
            validate(bad, "model")
        report = {"check": "kernel", "pass": True, "cases": [{"form": "x", "value": 0.0}]}
        bad.write_text(json.dumps(report))
        with self.assertRaises(jsonschema.ValidationError):
            validate(bad, "check_kernel")

    def test_usage_errors(self):
        self.assertEqual(run("model", "build", "--out", "x", cwd=self.dir).returncode, EXIT_USAGE)
        self.assertEqual(run("check", "nonsense", "--model", "king", cwd=self.dir).returncode, EXIT_USAGE)
        self.assertEqual(run("model", "build", "--law", "king", "--bogus", "1", cwd=self.dir).returncode,
                         EXIT_USAGE)
        self.assertEqual(run(cwd=self.dir).returncode, EXIT_USAGE)

    def test_non_compact_support(self):
        r = run("model", "build", "--law", "polytrope", "--n", "3.5", "--uc", "1", "--out", "le",
                cwd=self.dir)
        self.assertEqual(r.returncode, EXIT_FAIL)
        self.assertIn("non-compact support", r.stderr)

    def test_checks_pass_and_validate(self):
        for model in ["king", "poly1"]:
            for name in CHECKS:
                report = self.dir / f"{model}_{name}.json"
                r = run("check", name, "--model", model, "--report", report, cwd=self.dir)
                self.assertEqual(r.returncode, EXIT_PASS, f"{model} {name}: {r.stdout}{r.stderr}")
                validate(report, f"check_{name}")
                self.assertTrue(json.loads(report.read_text())["pass"])

    def test_check_determinism(self):
        a, b = self.dir / "det_a.json", self.dir / "det_b.json"
        for out in (a, b):
            r = run("check", "coercivity", "--model", "king", "--seed", "9", "--report", out, cwd=self.dir)
            self.assertEqual(r.returncode, EXIT_PASS)
        self.assertTrue(filecmp.cmp(a, b, shallow=False))

    def test_evolve_determinism_and_layout(self):
        outs = []
        for tag in ("a", "b"):
            out = self.dir / f"evolve_{tag}"
            r = run("evolve", "--model", "king", "--n", "3000", "--t", "0.5", "--dt", "0.01",
                    "--perturb", "kick:0.01", "--csv", "--out", out, cwd=self.dir)
            self.assertEqual(r.returncode, EXIT_PASS, r.stderr)
            outs.append(out)
        for name in ["initial.bin", "final.bin", "diagnostics.csv", "final.csv"]:
            self.assertTrue(filecmp.cmp(outs[0] / name, outs[1] / name, shallow=False), name)
        self.assertEqual((outs[0] / "final.bin").stat().st_size, 8 * (3 + 7 * 3000))
        header = (outs[0] / "diagnostics.csv").read_text().splitlines()[0]
        self.assertEqual(header, "t,H,Hcin,Hpot,mass,l1,l2,linf,dist")

    def test_stability_unperturbed_bounded(self):
        outs = []
        for tag in ("a", "b"):
            out = self.dir / f"stab_{tag}"
            r = run("stability", "--model", "king", "--n", "5000", "--t", "1", "--kind", "none",
                    "--out", out, cwd=self.dir)
            self.assertEqual(r.returncode, EXIT_PASS, r.stderr)
            self.assertEqual(r.stdout.strip(), "bounded")
            outs.append(out)
        self.assertEqual((outs[0] / "verdict.txt").read_text(), "bounded\n")
        validate(outs[0] / "stability.json", "stability")
        for name in ["diagnostics.csv", "distance.csv", "stability.json", "verdict.txt"]:
            self.assertTrue(filecmp.cmp(outs[0] / name, outs[1] / name, shallow=False), name)

    def test_stability_small_scale_bounded(self):
        out = self.dir / "stab_scale"
        r = run("stability", "--model", "king", "--n", "5000", "--t", "1", "--kind", "scale",
                "--eta", "0.01", "--out", out, cwd=self.dir)
        self.assertEqual(r.returncode, EXIT_PASS, r.stderr)
        validate(out / "stability.json", "stability")
        self.assertEqual(json.loads((out / "stability.json").read_text())["verdict"], "bounded")

    def test_blowup_exit(self):
        r = run("evolve", "--model", "king", "--n", "2000", "--t", "40", "--dt", "2", "--out", "blow",
                cwd=self.dir)
        self.assertEqual(r.returncode, EXIT_BLOWUP)
        self.assertTrue((self.dir / "blow" / "diagnostics.csv").exists())

    def test_config_round_trip_and_flags_win(self):
        cfg1, cfg2 = self.dir / "run1.cfg", self.dir / "run2.cfg"
        r = run("evolve", "--model", "king", "--n", "1500", "--t", "0.2", "--seed", "5", "--out", "cfg_a",
                "--dump-config", cfg1, cwd=self.dir)
        self.assertEqual(r.returncode, EXIT_PASS, r.stderr)
        r = run("evolve", "--config", cfg1, "--dump-config", cfg2, "--out", "cfg_b", cwd=self.dir)
        self.assertEqual(r.returncode, EXIT_PASS, r.stderr)
        lines1 = [l for l in cfg1.read_text().splitlines() if not l.startswith("out=")]
        lines2 = [l for l in cfg2.read_text().splitlines() if not l.startswith("out=")]
        self.assertEqual(lines1, lines2)
        self.assertIn("out=cfg_b", cfg2.read_text().splitlines())
        for name in ["initial.bin", "final.bin", "diagnostics.csv"]:
            self.assertTrue(filecmp.cmp(self.dir / "cfg_a" / name, self.dir / "cfg_b" / name, shallow=False))
        # a flag overrides the config value
        cfg3 = self.dir / "run3.cfg"
        r = run("evolve", "--config", cfg1, "--seed", "6", "--out", "cfg_c", "--dump-config", cfg3,
                cwd=self.dir)
        self.assertEqual(r.returncode, EXIT_PASS, r.stderr)
        self.assertIn("seed=6", cfg3.read_text().splitlines())


if __name__ == "__main__":
    unittest.main(argv=sys.argv[:1], verbosity=2)
