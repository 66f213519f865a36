import json
import shutil
import subprocess

import numpy as np
import pytest

from subrank_lab import generators as gen
from subrank_lab.cli import EXIT_MALFORMED, EXIT_NOT_FOUND, EXIT_OK, EXIT_VERIFY, main
from subrank_lab.experiments import SHOWCASES, ExperimentReport
from subrank_lab.io import load_certificate, load_tensor, save_certificate, save_tensor
from subrank_lab.certificates import SubrankCertificate, identity_certificate

import oracles


def run(capsys, *argv):
    code = main(list(map(str, argv)))
    out, err = capsys.readouterr()
    return code, out, err


def report(out):
    return ExperimentReport.from_dict(json.loads(out))


class TestGen:
    def test_quaternion_to_file(self, tmp_path, capsys):
        path = tmp_path / "q.json"
        code, _, err = run(capsys, "gen", "quaternion", "-o", path)
        assert code == EXIT_OK and "seed=0" in err
        assert load_tensor(path) == gen.quaternion_tensor()

    def test_gaussian_seeded(self, capsys):
        code, out, _ = run(capsys, "gen", "gaussian", "--shape", "3x3x5", "--seed", 4)
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["shape"] == [3, 3, 5]
        assert np.array_equal(np.array(doc["data"]).reshape(3, 3, 5),
                              gen.random_gaussian((3, 3, 5), 4).data)

    def test_bad_shape(self, capsys):
        with pytest.raises(SystemExit):
            run(capsys, "gen", "gaussian", "--shape", "3x3")


class TestVerify:
    def test_quaternion_exact(self, tmp_path, capsys):
        save_tensor(gen.quaternion_tensor(), tmp_path / "t.json")
        save_certificate(SubrankCertificate(*gen.QUATERNION_CERTIFICATE), tmp_path / "c.json")
        code, out, _ = run(capsys, "verify", "-i", tmp_path / "t.json", "-c", tmp_path / "c.json")
        assert code == EXIT_OK
        rep = report(out)
        assert rep.ok and rep.results["residual"] == 0.0

    def test_failure_exit(self, tmp_path, capsys):
        save_tensor(gen.conjugate_pair_tensor(), tmp_path / "t.json")
        save_certificate(identity_certificate(2), tmp_path / "c.json")
        code, out, _ = run(capsys, "verify", "-i", tmp_path / "t.json", "-c", tmp_path / "c.json")
        assert code == EXIT_VERIFY and not report(out).ok

    def test_wrong_length_data(self, tmp_path, capsys):
        (tmp_path / "t.json").write_text(json.dumps({"shape": [2, 2, 2], "data": [1.0] * 5}))
        save_certificate(identity_certificate(2), tmp_path / "c.json")
        code, _, err = run(capsys, "verify", "-i", tmp_path / "t.json", "-c", tmp_path / "c.json")
        assert code == EXIT_MALFORMED and "entries" in err

    def test_missing_file(self, tmp_path, capsys):
        save_certificate(identity_certificate(2), tmp_path / "c.json")
        code, _, _ = run(capsys, "verify", "-i", tmp_path / "nope.json", "-c", tmp_path / "c.json")
        assert code == EXIT_MALFORMED

    def test_shape_mismatch(self, tmp_path, capsys):
        save_tensor(gen.quaternion_tensor(), tmp_path / "t.json")
        save_certificate(identity_certificate(2), tmp_path / "c.json")
        code, _, _ = run(capsys, "verify", "-i", tmp_path / "t.json", "-c", tmp_path / "c.json")
        assert code == EXIT_MALFORMED


class TestSearchAndBounds:
    def test_search_found_writes_certificate(self, tmp_path, capsys):
        save_tensor(gen.quaternion_tensor(), tmp_path / "t.json")
        code, out, _ = run(capsys, "search", "-i", tmp_path / "t.json", "--r", 2,
                           "--restarts", 4, "--cert-out", tmp_path / "c.json")
        assert code == EXIT_OK and report(out).ok
        cert = load_certificate(tmp_path / "c.json")
        assert oracles.cert_residual(gen.quaternion_tensor().data, *cert.maps) < 1e-10

    def test_search_not_found(self, tmp_path, capsys):
        save_tensor(gen.conjugate_pair_tensor(), tmp_path / "t.json")
        code, out, _ = run(capsys, "search", "-i", tmp_path / "t.json", "--r", 2,
                           "--restarts", 4, "--max-iters", 100)
        assert code == EXIT_NOT_FOUND
        assert "no certificate found" in out

    def test_search_above_dimension(self, tmp_path, capsys):
        save_tensor(gen.conjugate_pair_tensor(), tmp_path / "t.json")
        code, out, _ = run(capsys, "search", "-i", tmp_path / "t.json", "--r", 3)
        assert code == EXIT_NOT_FOUND and "Failed" in out

    def test_bounds(self, tmp_path, capsys):
        save_tensor(gen.traceless_symmetric_335(), tmp_path / "t.json")
        code, out, _ = run(capsys, "bounds", "-i", tmp_path / "t.json")
        assert code == EXIT_OK
        res = report(out).results
        assert res["best_upper_bound"] == 3 and res["obstruction_bound"] == 2

    def test_cpd(self, tmp_path, capsys):
        save_tensor(gen.conjugate_pair_tensor(), tmp_path / "t.json")
        code, out, _ = run(capsys, "cpd", "-i", tmp_path / "t.json")
        assert code == EXIT_OK
        assert report(out).results["decomposition"]["rank"] == 2

    def test_output_file(self, tmp_path, capsys):
        save_tensor(gen.quaternion_tensor(), tmp_path / "t.json")
        code, out, _ = run(capsys, "bounds", "-i", tmp_path / "t.json", "-o", tmp_path / "r.json")
        assert code == EXIT_OK and out == ""
        assert json.loads((tmp_path / "r.json").read_text())["command"] == "bounds"


class TestMonteCarlo:
    def test_small_222_csv(self, tmp_path, capsys):
        code, out, _ = run(capsys, "montecarlo", "--samples", 20000, "--seed", 1,
                           "--band", 0.02, "--csv", tmp_path / "f.csv")
        rep = report(out)
        assert code == (EXIT_OK if rep.ok else EXIT_VERIFY)
        assert rep.results["samples"] == 20000
        assert (tmp_path / "f.csv").read_text().startswith("class,")

    def test_threads_do_not_change_result(self, capsys):
        _, a, _ = run(capsys, "montecarlo", "--samples", 70000, "--seed", 3)
        _, b, _ = run(capsys, "montecarlo", "--samples", 70000, "--seed", 3, "--threads", 3)
        assert report(a).results["estimate"] == report(b).results["estimate"]

    def test_bad_format(self, capsys):
        code, _, _ = run(capsys, "montecarlo", "--format", "2x2")
        assert code == EXIT_MALFORMED


@pytest.mark.parametrize("name", SHOWCASES)
def test_every_showcase_exits_zero(name, capsys):
    code, out, _ = run(capsys, "showcase", name)
    assert code == EXIT_OK, out
    assert report(out).ok


def test_console_script_installed():
    exe = shutil.which("subrank-lab")
    if exe is None:
        pytest.skip("console script not on PATH")
    done = subprocess.run([exe, "--version"], capture_output=True, text=True, check=True)
    assert done.stdout.startswith("subrank-lab")


def _emitted_certificates(node):
    if isinstance(node, dict):
        if "certificate" in node and isinstance(node["certificate"], dict) \
                and "phi1" in node["certificate"]:
            yield node["certificate"]
        for value in node.values():
            yield from _emitted_certificates(value)
    elif isinstance(node, list):
        for value in node:
            yield from _emitted_certificates(value)


def _showcase_targets(name):
    from subrank_lab.experiments import downgrade_trial
    from subrank_lab.tensor import unit_tensor
    if name == "downgrade":
        T, _, S, _ = downgrade_trial(0)
        return [T, S]
    return {
        "quaternion": [gen.quaternion_tensor()],
        "c-mult": [gen.complex_mult_tensor(2)],
        "paper-335": [gen.traceless_symmetric_335()],
        "example-1-5": [gen.conjugate_pair_tensor()],
        "sqrt-bound": [unit_tensor(9), gen.complex_mult_tensor(2)],
        "pairing": [gen.complex_mult_tensor(2)],
    }[name]


@pytest.mark.parametrize("name", SHOWCASES)
def test_showcase_certificates_reverify(name, capsys):
    from subrank_lab.io import certificate_from_dict
    _, out, _ = run(capsys, "showcase", name)
    docs = list(_emitted_certificates(json.loads(out)["results"]))
    targets = _showcase_targets(name)
    assert len(docs) == len(targets)
    for doc, T in zip(docs, targets):
        cert = certificate_from_dict(doc)
        assert oracles.cert_residual(T.data, *cert.maps) < 1e-8
