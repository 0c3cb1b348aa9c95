"""CLI subcommands: contracts, exit codes, determinism, report figures."""

import numpy as np
import pytest

from cmprior.cli import main
from cmprior.core import (
    BinaryMask,
    Tensor,
    read_mask_pgm,
    read_tensor,
    write_mask_pgm,
    write_tensor,
)
from cmprior.episodes import parse_config_file, parse_episode_spec
from cmprior.core import FormatError
from cmprior.synthetic import two_blob_episode


@pytest.fixture
def episode_files(tmp_path, data_dir):
    """Spec file wired to the checked-in fixtures."""
    spec = tmp_path / "episode.txt"
    spec.write_text(
        "# toy 1-shot episode\n"
        f"support={data_dir}/support_feat.cmpt,{data_dir}/support_mask.pgm\n"
        f"query={data_dir}/query_feat.cmpt\n"
        f"gt={data_dir}/gt_mask.pgm\n"
        "class=4\n"
    )
    return spec


class TestCmdPrior:
    def test_writes_valid_prior(self, tmp_path, data_dir):
        out = tmp_path / "m0.cmpt"
        code = main([
            "prior",
            "--support-feat", str(data_dir / "support_feat.cmpt"),
            "--support-mask", str(data_dir / "support_mask.pgm"),
            "--query-feat", str(data_dir / "query_feat.cmpt"),
            "--out", str(out),
        ])
        assert code == 0
        t = read_tensor(out)
        assert t.dims == (1, 12, 12)
        assert t.data.min() >= 0.0
        assert t.data.max() <= 1.0

    def test_image_resolution_mask_resampled(self, tmp_path, data_dir):
        out = tmp_path / "m0.cmpt"
        code = main([
            "prior",
            "--support-feat", str(data_dir / "support_feat.cmpt"),
            "--support-mask", str(data_dir / "support_mask_48.pgm"),
            "--query-feat", str(data_dir / "query_feat.cmpt"),
            "--out", str(out),
        ])
        assert code == 0
        # 48x48 is an exact 4x nearest upscale, so area pooling recovers the
        # feature-resolution mask and the prior matches the native-mask run
        native = tmp_path / "m0n.cmpt"
        main([
            "prior",
            "--support-feat", str(data_dir / "support_feat.cmpt"),
            "--support-mask", str(data_dir / "support_mask.pgm"),
            "--query-feat", str(data_dir / "query_feat.cmpt"),
            "--out", str(native),
        ])
        assert out.read_bytes() == native.read_bytes()

    def test_empty_mask_exit_3(self, tmp_path, data_dir):
        empty = tmp_path / "empty.pgm"
        write_mask_pgm(BinaryMask(np.zeros((12, 12), dtype=np.uint8)), empty)
        code = main([
            "prior",
            "--support-feat", str(data_dir / "support_feat.cmpt"),
            "--support-mask", str(empty),
            "--query-feat", str(data_dir / "query_feat.cmpt"),
            "--out", str(tmp_path / "m0.cmpt"),
        ])
        assert code == 3

    def test_channel_mismatch_exit_2(self, tmp_path, data_dir):
        other = tmp_path / "other.cmpt"
        write_tensor(Tensor(np.ones((5, 12, 12), dtype=np.float32)), other)
        code = main([
            "prior",
            "--support-feat", str(data_dir / "support_feat.cmpt"),
            "--support-mask", str(data_dir / "support_mask.pgm"),
            "--query-feat", str(other),
            "--out", str(tmp_path / "m0.cmpt"),
        ])
        assert code == 2

    def test_missing_file_exit_2(self, tmp_path, data_dir):
        code = main([
            "prior",
            "--support-feat", str(tmp_path / "missing.cmpt"),
            "--support-mask", str(data_dir / "support_mask.pgm"),
            "--query-feat", str(data_dir / "query_feat.cmpt"),
            "--out", str(tmp_path / "m0.cmpt"),
        ])
        assert code == 2


class TestCmdPropagate:
    @pytest.fixture
    def m0_file(self, tmp_path, data_dir):
        out = tmp_path / "m0.cmpt"
        main([
            "prior",
            "--support-feat", str(data_dir / "support_feat.cmpt"),
            "--support-mask", str(data_dir / "support_mask.pgm"),
            "--query-feat", str(data_dir / "query_feat.cmpt"),
            "--out", str(out),
        ])
        return out

    def test_defaults_converge(self, tmp_path, data_dir, m0_file):
        out = tmp_path / "mstar.cmpt"
        trace = tmp_path / "trace.csv"
        code = main([
            "propagate",
            "--query-feat", str(data_dir / "query_feat.cmpt"),
            "--prior", str(m0_file),
            "--trace-out", str(trace),
            "--out", str(out),
        ])
        assert code == 0
        residuals = [
            float(line.split(",")[1])
            for line in trace.read_text().strip().splitlines()[1:]
        ]
        assert residuals[-1] < 1e-6
        t = read_tensor(out)
        assert t.dims == (1, 12, 12)

    def test_uncertified_exit_5(self, tmp_path, data_dir, m0_file):
        code = main([
            "propagate",
            "--query-feat", str(data_dir / "query_feat.cmpt"),
            "--prior", str(m0_file),
            "--alpha", "0.05", "--delta", "0.2",
            "--out", str(tmp_path / "mstar.cmpt"),
        ])
        assert code == 5

    def test_max_iters_exit_4_with_outputs(self, tmp_path, data_dir, m0_file):
        out = tmp_path / "mstar.cmpt"
        trace = tmp_path / "trace.csv"
        code = main([
            "propagate",
            "--query-feat", str(data_dir / "query_feat.cmpt"),
            "--prior", str(m0_file),
            "--max-iters", "1", "--tol", "1e-12",
            "--trace-out", str(trace),
            "--out", str(out),
        ])
        assert code == 4
        assert out.exists()
        assert trace.exists()


class TestCmdPipeline:
    def test_one_shot_with_gt(self, tmp_path, episode_files, capsys):
        out_dir = tmp_path / "out"
        code = main([
            "pipeline",
            "--episode", str(episode_files),
            "--out-dir", str(out_dir),
        ])
        assert code == 0
        for name in (
            "prior_initial.cmpt",
            "prior_converged.cmpt",
            "mask.pgm",
            "mask_initial.pgm",
            "trace_shot0.csv",
            "report.txt",
        ):
            assert (out_dir / name).exists(), name
        report = (out_dir / "report.txt").read_text()
        assert report.startswith("class=4 iou=")
        assert "miou=" in report
        captured = capsys.readouterr()
        assert "class=4" in captured.out

    def test_k3_identical_supports_match_k1(self, tmp_path, data_dir):
        spec1 = tmp_path / "k1.txt"
        spec3 = tmp_path / "k3.txt"
        support = f"support={data_dir}/support_feat.cmpt,{data_dir}/support_mask.pgm\n"
        spec1.write_text(support + f"query={data_dir}/query_feat.cmpt\n")
        spec3.write_text(support * 3 + f"query={data_dir}/query_feat.cmpt\n")
        main(["pipeline", "--episode", str(spec1), "--out-dir", str(tmp_path / "o1")])
        main(["pipeline", "--episode", str(spec3), "--out-dir", str(tmp_path / "o3")])
        assert (tmp_path / "o1" / "mask.pgm").read_bytes() == (
            tmp_path / "o3" / "mask.pgm"
        ).read_bytes()

    def test_parse_error_exit_2_names_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("query=a.cmpt\nwhat even is this\n")
        code = main(["pipeline", "--episode", str(bad), "--out-dir", str(tmp_path / "o")])
        assert code == 2
        assert "line 2" in capsys.readouterr().err

    def test_config_file_applied(self, tmp_path, episode_files):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("# tighter graph\ntop_k=4\nmax_iters=50\n")
        out_dir = tmp_path / "out"
        code = main([
            "pipeline",
            "--episode", str(episode_files),
            "--config", str(cfg),
            "--out-dir", str(out_dir),
        ])
        assert code == 0

    def test_bad_config_key_exit_2(self, tmp_path, episode_files):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("warp_speed=9\n")
        code = main([
            "pipeline",
            "--episode", str(episode_files),
            "--config", str(cfg),
            "--out-dir", str(tmp_path / "out"),
        ])
        assert code == 2

    def test_blob_episode_propagation_not_worse(self, tmp_path):
        ep = two_blob_episode(seed=3)
        paths = {}
        for name, tensor in (
            ("sf", ep.support_features),
            ("qf", ep.query_features),
        ):
            paths[name] = tmp_path / f"{name}.cmpt"
            write_tensor(tensor, paths[name])
        for name, mask in (("sm", ep.support_mask), ("gt", ep.query_gt)):
            paths[name] = tmp_path / f"{name}.pgm"
            write_mask_pgm(mask, paths[name])
        spec = tmp_path / "ep.txt"
        spec.write_text(
            f"support={paths['sf']},{paths['sm']}\n"
            f"query={paths['qf']}\n"
            f"gt={paths['gt']}\n"
        )
        out_dir = tmp_path / "out"
        assert main(["pipeline", "--episode", str(spec), "--out-dir", str(out_dir)]) == 0

        from cmprior.fusion import iou

        final = read_mask_pgm(out_dir / "mask.pgm")
        initial = read_mask_pgm(out_dir / "mask_initial.pgm")
        assert iou(final, ep.query_gt) >= iou(initial, ep.query_gt)


class TestCmdEval:
    def test_identical(self, tmp_path, capsys):
        m = BinaryMask((np.indices((4, 4)).sum(0) % 2).astype(np.uint8))
        a = tmp_path / "a.pgm"
        write_mask_pgm(m, a)
        assert main(["eval", "--pred", str(a), "--gt", str(a)]) == 0
        assert capsys.readouterr().out.strip() == "iou=1.000000 fbiou=1.000000"

    def test_complement(self, tmp_path, capsys):
        m = BinaryMask(np.array([[1, 0], [0, 1]], dtype=np.uint8))
        a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
        write_mask_pgm(m, a)
        write_mask_pgm(m.complement(), b)
        assert main(["eval", "--pred", str(a), "--gt", str(b)]) == 0
        assert capsys.readouterr().out.strip() == "iou=0.000000 fbiou=0.000000"

    def test_hand_case(self, tmp_path, capsys):
        pred = BinaryMask(np.array([[1, 1, 0, 0]], dtype=np.uint8))
        gt = BinaryMask(np.array([[1, 0, 0, 0]], dtype=np.uint8))
        a, b = tmp_path / "p.pgm", tmp_path / "g.pgm"
        write_mask_pgm(pred, a)
        write_mask_pgm(gt, b)
        assert main(["eval", "--pred", str(a), "--gt", str(b)]) == 0
        out = capsys.readouterr().out.strip()
        assert out == f"iou=0.500000 fbiou={7 / 12:.6f}"

    def test_shape_mismatch_exit_2(self, tmp_path):
        a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
        write_mask_pgm(BinaryMask(np.ones((2, 2), dtype=np.uint8)), a)
        write_mask_pgm(BinaryMask(np.ones((3, 3), dtype=np.uint8)), b)
        assert main(["eval", "--pred", str(a), "--gt", str(b)]) == 2


class TestCmdBench:
    def test_sparse_rows(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = main([
            "bench", "--sizes", "4,6,8", "--mode", "sparse",
            "--reps", "2", "--iters", "3", "--csv-out", str(out),
        ])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "mode,n,build_ms,iter_ms,total_ms"
        assert len(lines) == 4
        assert [l.split(",")[1] for l in lines[1:]] == ["16", "36", "64"]

    def test_dense_cap_exit_6(self, tmp_path):
        code = main([
            "bench", "--sizes", "96", "--mode", "dense",
            "--csv-out", str(tmp_path / "b.csv"),
        ])
        assert code == 6

    def test_both_modes_agree_via_solver(self, tmp_path):
        # correctness piggyback at n=16: sparse and dense iterate identically
        from cmprior.core import SolverConfig
        from cmprior.graph import build_transfer, dense_transfer_oracle
        from cmprior.solver import iterate_once
        from cmprior.synthetic import spanning_prior, unit_features

        rng = np.random.default_rng(42 + 4)
        feats = unit_features(32, 4, 4, rng)
        m0 = spanning_prior(4, 4, rng)
        cfg = SolverConfig(top_k=8)
        sp = build_transfer(feats, cfg.top_k, cfg.temperature)
        de = dense_transfer_oracle(feats, cfg.top_k, cfg.temperature)
        ms, _, _ = iterate_once(m0, m0, sp, cfg)
        md, _, _ = iterate_once(m0, m0, de, cfg)
        assert np.abs(ms.values - md.values).max() <= 1e-5


class TestDeterminism:
    def test_repeat_invocations_bitwise_identical(self, tmp_path, data_dir, episode_files):
        outputs = []
        for run in ("a", "b"):
            d = tmp_path / run
            d.mkdir()
            main([
                "prior",
                "--support-feat", str(data_dir / "support_feat.cmpt"),
                "--support-mask", str(data_dir / "support_mask.pgm"),
                "--query-feat", str(data_dir / "query_feat.cmpt"),
                "--out", str(d / "m0.cmpt"),
            ])
            main([
                "propagate",
                "--query-feat", str(data_dir / "query_feat.cmpt"),
                "--prior", str(d / "m0.cmpt"),
                "--trace-out", str(d / "trace.csv"),
                "--out", str(d / "mstar.cmpt"),
            ])
            main(["pipeline", "--episode", str(episode_files), "--out-dir", str(d / "ep")])
            outputs.append(d)
        a, b = outputs
        for rel in (
            "m0.cmpt", "mstar.cmpt", "trace.csv",
            "ep/prior_initial.cmpt", "ep/prior_converged.cmpt",
            "ep/mask.pgm", "ep/mask_initial.pgm", "ep/trace_shot0.csv",
            "ep/report.txt",
        ):
            assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


class TestHelp:
    @pytest.mark.parametrize(
        "cmd", ["prior", "propagate", "pipeline", "bench", "eval", "report"]
    )
    def test_help_exits_zero_and_lists_flags(self, cmd, capsys):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "--" in out
        if cmd == "propagate":
            for flag in ("--alpha", "--delta", "--epsilon", "--temperature",
                         "--top-k", "--max-iters", "--tol"):
                assert flag in out
            assert "0.03" in out  # defaults are displayed


class TestSpecParsers:
    def test_episode_round_trip(self, tmp_path):
        spec = tmp_path / "e.txt"
        spec.write_text(
            "support=f1.cmpt,m1.pgm\nsupport=f2.cmpt,m2.pgm\n"
            "query=q.cmpt\ngt=g.pgm\nclass=7\n"
        )
        parsed = parse_episode_spec(spec)
        assert len(parsed.supports) == 2
        assert parsed.query_feat == "q.cmpt"
        assert parsed.gt_mask == "g.pgm"
        assert parsed.class_id == 7

    def test_missing_query(self, tmp_path):
        spec = tmp_path / "e.txt"
        spec.write_text("support=f.cmpt,m.pgm\n")
        with pytest.raises(FormatError, match="no query"):
            parse_episode_spec(spec)

    def test_support_needs_two_paths(self, tmp_path):
        spec = tmp_path / "e.txt"
        spec.write_text("support=f.cmpt\nquery=q.cmpt\n")
        with pytest.raises(FormatError, match="line 1"):
            parse_episode_spec(spec)

    def test_config_values_typed(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("alpha=0.01\ntop_k=12\n# comment\n\ntol=1e-7\n")
        parsed = parse_config_file(cfg)
        assert parsed == {"alpha": 0.01, "top_k": 12, "tol": 1e-7}
        assert isinstance(parsed["top_k"], int)
