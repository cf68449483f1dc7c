"""End-to-end tests of the command-line interface."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

import dendrites as dn
from dendrites.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def space_file(runner, tmp_path):
    path = tmp_path / "space.json"
    result = runner.invoke(main, ["space", "gen", "--kind", "harmonic", "--k", "4", "--out", str(path)])
    assert result.exit_code == 0, result.output
    return path


@pytest.fixture()
def dendrite_file(runner, tmp_path, space_file):
    path = tmp_path / "dendrite.json"
    result = runner.invoke(main, ["dendrite", "build", str(space_file), "--out", str(path)])
    assert result.exit_code == 0, result.output
    return path


class TestSpaceGen:
    def test_harmonic_round_trip(self, runner, tmp_path):
        path = tmp_path / "h4.json"
        result = runner.invoke(main, ["space", "gen", "--kind", "harmonic", "--k", "4", "--out", str(path)])
        assert result.exit_code == 0
        assert "5 points" in result.output
        sp = dn.space_from_file(str(path))
        expected = dn.harmonic_space(4)
        assert sp.labels == expected.labels
        assert (sp.matrix == expected.matrix).all()

    def test_cantor(self, runner, tmp_path):
        path = tmp_path / "cantor.json"
        result = runner.invoke(main, ["space", "gen", "--kind", "cantor", "--depth", "2", "--out", str(path)])
        assert result.exit_code == 0
        assert "4 points" in result.output
        sp = dn.space_from_file(str(path))
        assert (sp.matrix == dn.cantor_space(2).matrix).all()

    def test_deterministic_bytes(self, runner, tmp_path):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        for path in (p1, p2):
            result = runner.invoke(main, ["space", "gen", "--kind", "fiber_c", "--n-max", "1", "--out", str(path)])
            assert result.exit_code == 0
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_params_exit_one(self, runner, tmp_path):
        result = runner.invoke(main, ["space", "gen", "--kind", "harmonic", "--k", "0", "--out", str(tmp_path / "x.json")])
        assert result.exit_code == 1

    def test_unknown_kind_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["space", "gen", "--kind", "sphere", "--out", str(tmp_path / "x.json")])
        assert result.exit_code == 2


class TestDendriteBuild:
    def test_build_reports_shape(self, runner, tmp_path, space_file):
        out = tmp_path / "den.json"
        dot = tmp_path / "den.dot"
        result = runner.invoke(
            main, ["dendrite", "build", str(space_file), "--out", str(out), "--dot", str(dot)]
        )
        assert result.exit_code == 0
        assert "9 vertices, 8 edges" in result.output
        assert dot.read_text().startswith("graph")
        data = json.loads(out.read_text())
        sp = dn.space_from_file(str(space_file))
        den = dn.dendrite_from_json(data, sp)
        assert den.n_vertices == 9

    def test_deterministic_bytes(self, runner, tmp_path, space_file):
        p1, p2 = tmp_path / "d1.json", tmp_path / "d2.json"
        for path in (p1, p2):
            result = runner.invoke(main, ["dendrite", "build", str(space_file), "--out", str(path)])
            assert result.exit_code == 0
        assert p1.read_bytes() == p2.read_bytes()


class TestDendriteVerify:
    def test_clean_build_passes(self, runner, space_file, dendrite_file):
        result = runner.invoke(
            main, ["dendrite", "verify", str(dendrite_file), "--space", str(space_file)]
        )
        assert result.exit_code == 0, result.output
        report = json.loads(result.output)
        assert report["ok"] is True
        assert report["isometry_error"] == 0.0

    def test_corrupted_file_fails(self, runner, tmp_path, space_file, dendrite_file):
        data = json.loads(dendrite_file.read_text())
        data["edges"][0]["length"] *= 3.0
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(data))
        result = runner.invoke(main, ["dendrite", "verify", str(bad), "--space", str(space_file)])
        assert result.exit_code == 1
        assert json.loads(result.output)["ok"] is False

    def test_seed_env_override(self, runner, space_file, dendrite_file):
        args = ["dendrite", "verify", str(dendrite_file), "--space", str(space_file)]
        via_flag = runner.invoke(main, args + ["--seed", "123"])
        via_env = runner.invoke(main, args, env={"DENDRITE_SEED": "123"})
        assert via_flag.exit_code == via_env.exit_code == 0
        assert via_flag.output == via_env.output


class TestMapExtend:
    def test_identity(self, runner, tmp_path, space_file):
        out = tmp_path / "sys.json"
        result = runner.invoke(main, ["map", "extend", str(space_file), "--identity", "--out", str(out)])
        assert result.exit_code == 0, result.output
        payload = json.loads(out.read_text())
        assert set(payload) == {"space", "dendrite", "extension"}
        sp = dn.space_from_file(str(space_file))
        den = dn.dendrite_from_json(payload["dendrite"], sp)
        dmap = dn.extension_from_json(payload["extension"], den)
        for leaf in den.leaves():
            assert dn.evaluate_map(dmap, den.vertex_point(leaf)) == den.vertex_point(leaf)

    def test_assign_matches_library(self, runner, tmp_path, space_file):
        out = tmp_path / "sys.json"
        assign = "0=1,1=0,1/2=1/2,1/3=1/3,1/4=1/4"
        result = runner.invoke(main, ["map", "extend", str(space_file), "--assign", assign, "--out", str(out)])
        assert result.exit_code == 0, result.output
        payload = json.loads(out.read_text())
        sp = dn.space_from_file(str(space_file))
        labels = list(sp.labels)
        expected = dn.embed_system(
            sp, {labels.index("0"): labels.index("1"), labels.index("1"): labels.index("0"),
                 labels.index("1/2"): labels.index("1/2"), labels.index("1/3"): labels.index("1/3"),
                 labels.index("1/4"): labels.index("1/4")}
        )
        assert payload["extension"]["endpoint_images"] == {
            a: b for a, b in dn.extension_to_json(expected.map)["endpoint_images"].items()
        }

    def test_constant(self, runner, tmp_path, space_file):
        out = tmp_path / "sys.json"
        result = runner.invoke(main, ["map", "extend", str(space_file), "--constant", "1/2", "--out", str(out)])
        assert result.exit_code == 0, result.output
        payload = json.loads(out.read_text())
        images = set(payload["extension"]["endpoint_images"].values())
        assert images == {"1/2"}

    def test_requires_exactly_one_mode(self, runner, tmp_path, space_file):
        out = str(tmp_path / "sys.json")
        result = runner.invoke(main, ["map", "extend", str(space_file), "--identity", "--constant", "0", "--out", out])
        assert result.exit_code == 2
        result = runner.invoke(main, ["map", "extend", str(space_file), "--out", out])
        assert result.exit_code == 2

    def test_unknown_label_exits_one(self, runner, tmp_path, space_file):
        out = str(tmp_path / "sys.json")
        result = runner.invoke(main, ["map", "extend", str(space_file), "--constant", "7/9", "--out", out])
        assert result.exit_code == 1

    def test_malformed_assign_is_usage_error(self, runner, tmp_path, space_file):
        out = str(tmp_path / "sys.json")
        result = runner.invoke(main, ["map", "extend", str(space_file), "--assign", "0;1", "--out", out])
        assert result.exit_code == 2


class TestSkewSimulate:
    def test_steps_mode_matches_library(self, runner, tmp_path):
        csv = tmp_path / "orbit.csv"
        result = runner.invoke(
            main,
            ["skew", "simulate", "--omega", "0", "--eta", "0101", "--eta2", "0001",
             "--steps", "16", "--csv", str(csv)],
        )
        assert result.exit_code == 0, result.output
        lines = csv.read_text().strip().splitlines()
        assert lines[0] == "t,dist"
        assert len(lines) == 17
        a = dn.SkewState(dn.ZERO_WORD, dn.OmegaWord.from_string("0101"), dn.parse_fiber("P:0"))
        b = dn.SkewState(dn.ZERO_WORD, dn.OmegaWord.from_string("0001"), dn.parse_fiber("P:0"))
        expected = list(dn.orbit_distances(a, b, 16))
        for t, line in enumerate(lines[1:]):
            stamp, dist = line.split(",")
            assert int(stamp) == t
            assert float(dist) == expected[t]  # %.17g round-trips exactly

    def test_column_mode_row_count(self, runner, tmp_path):
        csv = tmp_path / "orbit.csv"
        result = runner.invoke(main, ["skew", "simulate", "--col-checkpoints", "2", "--csv", str(csv)])
        assert result.exit_code == 0, result.output
        assert "113 steps" in result.output
        assert len(csv.read_text().strip().splitlines()) == 114

    def test_exactly_one_horizon_mode(self, runner, tmp_path):
        csv = str(tmp_path / "orbit.csv")
        result = runner.invoke(main, ["skew", "simulate", "--csv", csv])
        assert result.exit_code == 2
        result = runner.invoke(
            main, ["skew", "simulate", "--steps", "5", "--col-checkpoints", "1", "--csv", csv]
        )
        assert result.exit_code == 2

    def test_bad_fiber_exits_one(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["skew", "simulate", "--fiber", "W:3", "--steps", "4", "--csv", str(tmp_path / "x.csv")],
        )
        assert result.exit_code == 1


class TestChaosClassify:
    def test_state_mode(self, runner):
        result = runner.invoke(
            main,
            ["chaos", "classify", "--eta", "0101", "--eta2", "0001",
             "--col-checkpoints", "1,2,3", "--s", "2"],
        )
        assert result.exit_code == 0, result.output
        verdict = json.loads(result.output)
        assert verdict["proximal_lower_bound"] == 0.5
        assert verdict["li_yorke_possible"] is False
        assert verdict["dc3"]["checkpoints"] == [10, 112, 1115]
        assert verdict["dc3"]["gap"] == 1.0 - 12 / 112

    def test_csv_flow_matches_state_mode(self, runner, tmp_path):
        csv = tmp_path / "orbit.csv"
        sim = runner.invoke(
            main,
            ["skew", "simulate", "--eta", "0101", "--eta2", "0001",
             "--col-checkpoints", "1,2,3", "--csv", str(csv)],
        )
        assert sim.exit_code == 0, sim.output
        result = runner.invoke(main, ["chaos", "classify", "--csv", str(csv), "--s", "2"])
        assert result.exit_code == 0, result.output
        verdict = json.loads(result.output)
        # word coordinates are unknown in csv mode
        assert verdict["proximal_lower_bound"] is None
        assert verdict["li_yorke_possible"] is None
        assert verdict["dc3"]["checkpoints"] == [10, 112, 1115]
        assert verdict["dc3"]["gap"] == 1.0 - 12 / 112

    def test_json_and_svg_outputs(self, runner, tmp_path):
        out = tmp_path / "verdict.json"
        svg = tmp_path / "profile.svg"
        result = runner.invoke(
            main,
            ["chaos", "classify", "--eta", "0101", "--eta2", "0001",
             "--col-checkpoints", "1,2", "--json", str(out), "--svg", str(svg)],
        )
        assert result.exit_code == 0, result.output
        assert json.loads(out.read_text())["proximal_lower_bound"] == 0.5
        assert svg.read_text().startswith("<svg")

    def test_csv_excludes_simulation_flags(self, runner, tmp_path):
        csv = tmp_path / "orbit.csv"
        csv.write_text("t,dist\n0,0.5\n")
        result = runner.invoke(main, ["chaos", "classify", "--csv", str(csv), "--steps", "5"])
        assert result.exit_code == 2

    def test_checkpoint_flags_conflict(self, runner):
        result = runner.invoke(
            main,
            ["chaos", "classify", "--col-checkpoints", "1", "--checkpoints", "10"],
        )
        assert result.exit_code == 2

    def test_short_csv_exits_one(self, runner, tmp_path):
        csv = tmp_path / "orbit.csv"
        csv.write_text("t,dist\n0,0.5\n1,0.5\n")
        result = runner.invoke(main, ["chaos", "classify", "--csv", str(csv)])
        assert result.exit_code == 1


class TestChaosFamily:
    def test_matches_library(self, runner):
        result = runner.invoke(main, ["chaos", "family", "--count", "4", "--depth", "16"])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        expected = dn.scrambled_family(lambda p: p % 2 == 0, 4, depth=16)
        assert payload["words"] == [str(w) for w in expected]

    def test_coding_specs(self, runner):
        for coding, pattern in (
            ("odd", lambda p: p % 2 == 1),
            ("mod:3", lambda p: p % 3 == 0),
            ("mod:3:1", lambda p: p % 3 == 1),
            ("pos:1,2,5", lambda p: p in (1, 2, 5)),
        ):
            result = runner.invoke(main, ["chaos", "family", "--coding", coding, "--count", "2", "--depth", "12"])
            assert result.exit_code == 0, (coding, result.output)
            payload = json.loads(result.output)
            expected = dn.scrambled_family(pattern, 2, depth=12)
            assert payload["words"] == [str(w) for w in expected]

    def test_writes_file(self, runner, tmp_path):
        out = tmp_path / "family.json"
        result = runner.invoke(main, ["chaos", "family", "--count", "2", "--out", str(out)])
        assert result.exit_code == 0
        assert json.loads(out.read_text())["count"] == 2

    def test_count_too_large_exits_one(self, runner):
        result = runner.invoke(main, ["chaos", "family", "--coding", "pos:0", "--count", "4"])
        assert result.exit_code == 1

    def test_bad_coding_is_usage_error(self, runner):
        result = runner.invoke(main, ["chaos", "family", "--coding", "mod:0", "--count", "2"])
        assert result.exit_code == 2
        result = runner.invoke(main, ["chaos", "family", "--coding", "fibonacci", "--count", "2"])
        assert result.exit_code == 2


class TestTopLevel:
    def test_version(self, runner):
        result = runner.invoke(main, ["--version"])
        assert result.exit_code == 0
        assert "dendrites" in result.output

    def test_help_lists_groups(self, runner):
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        for group in ("space", "dendrite", "map", "skew", "chaos"):
            assert group in result.output
