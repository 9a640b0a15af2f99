import math

import numpy as np
import pytest

from dcpv.cli import run
from dcpv.features import load_features, save_features, write_pgm
from dcpv.store import load
from dcpv.synthetic import make_corpus


@pytest.fixture
def features(tmp_path):
    path = tmp_path / "feats.csv"
    save_features(path, make_corpus(5, 3, 64, sigma=0.15, seed=2, noise="vector"))
    return path


def cli(*args):
    return run([str(a) for a in args])


class TestCli:
    def test_keygen_seeded(self, tmp_path):
        assert cli("keygen", "--out", tmp_path / "k1", "--seed", "0x10") == 0
        assert cli("keygen", "--out", tmp_path / "k2", "--seed", "16") == 0
        text = (tmp_path / "k1").read_text()
        assert text == (tmp_path / "k2").read_text()
        assert text.startswith("k1=") and "\nk2=" in text

    def test_keygen_random(self, tmp_path):
        cli("keygen", "--out", tmp_path / "a")
        cli("keygen", "--out", tmp_path / "b")
        assert (tmp_path / "a").read_text() != (tmp_path / "b").read_text()

    def test_enroll_verify(self, tmp_path, features, capsys):
        db = tmp_path / "store.db"
        assert cli("enroll", "--features", features, "--k1", 7, "--k2", 9, "--store", db) == 0
        assert load(db).subject_ids == [f"s{i:03d}" for i in range(5)]
        code = cli("verify", "--features", features, "--k1", 7, "--id", "s001", "--store", db,
                   "--sample", 2)
        out = capsys.readouterr().out
        assert code == 0 and "ACCEPT id=s001" in out
        assert cli("verify", "--features", features, "--k1", 8, "--id", "s001",
                   "--store", db) == 1
        assert "REJECT" in capsys.readouterr().out

    def test_enroll_duplicate_requires_replace(self, tmp_path, features):
        db = tmp_path / "store.db"
        args = ("enroll", "--features", features, "--k1", 1, "--k2", 2, "--store", db,
                "--id", "s000")
        assert cli(*args) == 0
        assert cli(*args) == 2
        assert cli(*args, "--replace") == 0

    def test_unknown_subject(self, tmp_path, features):
        db = tmp_path / "store.db"
        cli("enroll", "--features", features, "--k1", 1, "--k2", 2, "--store", db)
        assert cli("verify", "--features", features, "--k1", 1, "--id", "nobody",
                   "--store", db) == 2

    def test_unsafe_needs_flag(self, tmp_path, features):
        db = tmp_path / "store.db"
        base = ("enroll", "--features", features, "--k1", 1, "--k2", 2, "--store", db,
                "--P", "0,0,1")
        assert cli(*base) == 2
        assert cli(*base, "--allow-unsafe") == 0

    def test_evaluate_outputs(self, tmp_path, features):
        out = tmp_path / "ev"
        assert cli("evaluate", "--features", features, "--out", out, "--shared-key") == 0
        roc = (out / "roc.csv").read_text().splitlines()
        assert roc[0] == "FAR,GAR" and roc[1] == "0.0,0.0" and roc[-1] == "1.0,1.0"
        dist = (out / "dist.csv").read_text().splitlines()
        assert dist[0] == "label,score" and len(dist) == 1 + 15 * 14 // 2
        summary = (out / "summary.txt").read_text()
        assert "EER%=" in summary and "baseline_EER%=" in summary
        first = (out / "summary.txt").read_bytes()
        cli("evaluate", "--features", features, "--out", out, "--shared-key")
        assert (out / "summary.txt").read_bytes() == first

    def test_analyze(self, tmp_path, capsys):
        assert cli("analyze", "--K", 3, "--P", "0.8,0.1,0.1", "--out", tmp_path / "h.txt") == 0
        text = (tmp_path / "h.txt").read_text()
        assert "classification=Hard" in text and "condition_value=0.4" in text
        assert cli("analyze", "--K", 4, "--P", "0.8,0.1,0.1") == 2
        assert cli("analyze", "--K", 3, "--P", "0.5,0.6") == 2

    def test_attack(self, tmp_path, features):
        db = tmp_path / "store.db"
        cli("enroll", "--features", features, "--k1", 1, "--k2", 2, "--store", db,
            "--m-p", 16, "--P", "0,0,1", "--allow-unsafe")
        assert cli("attack", "--store", db, "--id", "s000", "--iters", 200, "--restarts", 2,
                   "--out", tmp_path / "a.txt") == 0
        text = (tmp_path / "a.txt").read_text()
        assert "matched_entries=" in text and "recovered_exact=unknown" in text
        cli("attack", "--store", db, "--id", "s000", "--iters", 200, "--restarts", 2,
            "--jobs", 2, "--out", tmp_path / "b.txt")
        assert (tmp_path / "b.txt").read_text() == text

    def test_unlink(self, tmp_path, features):
        out = tmp_path / "u"
        assert cli("unlink", "--features", features, "--out", out, "--bins", 10) == 0
        assert "D_sys=" in (out / "unlinkability.txt").read_text()
        lines = (out / "unlinkability.csv").read_text().splitlines()
        assert lines[0] == "score,D,mated_mass,non_mated_mass" and len(lines) == 11

    def test_extract(self, tmp_path):
        y, x = np.mgrid[0:128, 0:128]
        d = (y % 16) - 8
        px = 200 - 160 * np.exp(-d**2 / 2.88)
        paths = []
        for name in ("p01_0.pgm", "p01_1.pgm"):
            write_pgm(tmp_path / name, px)
            paths.append(tmp_path / name)
        assert cli("extract", *paths, "--out", tmp_path / "f.csv") == 0
        rows = load_features(tmp_path / "f.csv")
        assert [(r.subject_id, r.sample_id) for r in rows] == [("p01", "0"), ("p01", "1")]
        assert rows[0].m_f == 384 and np.all(rows[0].values.reshape(64, 6)[:, 0] == 1)

    def test_usage_and_io_errors(self, tmp_path):
        assert cli() == 2
        assert cli("verify", "--k1", "zz") == 2
        assert cli("evaluate", "--features", tmp_path / "missing.csv", "--out", tmp_path) == 3
        assert cli("--help") == 0
