"""Tests for FileArtifactStore.

This module tests reading and writing every artifact kind through the
filesystem store, including the error paths for malformed files.
"""

from pathlib import Path

import numpy as np
import pytest

from cavitykin.adapters.file_store import FileArtifactStore, format_value
from cavitykin.domain.dtos import FrameDTO, VolumetricReportDTO
from cavitykin.domain.models import CavitySample, IkConstraints, RegressionDataset, Surface
from cavitykin.domain.slp import SlpModel
from cavitykin.domain.synth import PROFILE_PRESETS, BeamProfile, ExperimentPlan
from cavitykin.exceptions import EmptyFile, ParseError


class TestSurfaceFiles:
    """Test suite for surface CSV and JSON files."""

    def setup_method(self) -> None:
        """Set up test fixtures."""
        self.store = FileArtifactStore()
        self.surface = Surface([[0.1, -0.2, 0.0], [1.0 / 3.0, 0.0, -0.05], [0.0, 0.0, 1e-17]])

    @pytest.mark.parametrize("name", ["surface.csv", "surface.json"])
    def test_round_trip_is_exact(self, tmp_path: Path, name: str) -> None:
        """Test that saved surfaces load back bit for bit, in row order."""
        path = tmp_path / name
        self.store.save_surface(self.surface, path)
        np.testing.assert_array_equal(self.store.load_surface(path).points, self.surface.points)

    def test_csv_layout(self, tmp_path: Path) -> None:
        """Test that the CSV has the x,y,z header and shortest float text."""
        path = tmp_path / "nested" / "surface.csv"
        self.store.save_surface(self.surface, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x,y,z"
        assert lines[2] == "0.3333333333333333,0.0,-0.05"
        assert len(lines) == 4

    def test_writes_are_deterministic(self, tmp_path: Path) -> None:
        """Test that identical inputs give byte-identical files."""
        self.store.save_surface(self.surface, tmp_path / "a.csv")
        self.store.save_surface(self.surface, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_bad_number_reports_row_and_field(self, tmp_path: Path) -> None:
        """Test that a malformed value names its row and column."""
        path = tmp_path / "bad.csv"
        path.write_text("x,y,z\n0,0,0\n0.1,abc,0\n")
        with pytest.raises(ParseError) as exc_info:
            self.store.load_surface(path)
        assert exc_info.value.line == 3
        assert exc_info.value.field == "y"
        assert "row 3" in exc_info.value.message

    def test_wrong_field_count(self, tmp_path: Path) -> None:
        """Test that a row with too few fields is rejected at its line."""
        path = tmp_path / "short.csv"
        path.write_text("x,y,z\n0,0\n")
        with pytest.raises(ParseError) as exc_info:
            self.store.load_surface(path)
        assert exc_info.value.line == 2

    def test_non_finite_coordinate(self, tmp_path: Path) -> None:
        """Test that a NaN coordinate is rejected and its column named."""
        path = tmp_path / "nan.csv"
        path.write_text("x,y,z\n0,0,nan\n")
        with pytest.raises(ParseError) as exc_info:
            self.store.load_surface(path)
        assert exc_info.value.field == "z"

    def test_missing_header(self, tmp_path: Path) -> None:
        """Test that a CSV without the x,y,z header fails on line 1."""
        path = tmp_path / "noheader.csv"
        path.write_text("0,0,0\n1,1,1\n")
        with pytest.raises(ParseError) as exc_info:
            self.store.load_surface(path)
        assert exc_info.value.line == 1

    @pytest.mark.parametrize("content", ["", "x,y,z\n", "x,y,z\n\n\n"])
    def test_empty_csv(self, tmp_path: Path, content: str) -> None:
        """Test that blank or header-only CSV files raise EmptyFile."""
        path = tmp_path / "empty.csv"
        path.write_text(content)
        with pytest.raises(EmptyFile):
            self.store.load_surface(path)

    def test_empty_json_surface(self, tmp_path: Path) -> None:
        """Test that a JSON surface without points raises EmptyFile."""
        path = tmp_path / "empty.json"
        path.write_text('{"schema_version": 1, "points": []}')
        with pytest.raises(EmptyFile):
            self.store.load_surface(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        """Test that a missing surface raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            self.store.load_surface(tmp_path / "absent.csv")


class TestJsonArtifacts:
    """Test suite for the JSON artifacts."""

    def setup_method(self) -> None:
        """Set up test fixtures."""
        self.store = FileArtifactStore()

    def test_model_round_trip_is_byte_stable(self, tmp_path: Path, smooth_model: SlpModel) -> None:
        """Test that load then save reproduces the model file exactly."""
        first, second = tmp_path / "m1.json", tmp_path / "m2.json"
        self.store.save_model(smooth_model, first)
        self.store.save_model(self.store.load_model(first), second)
        assert first.read_bytes() == second.read_bytes()
        assert first.read_text().endswith("}\n")

    def test_model_validation_error_names_field(self, tmp_path: Path) -> None:
        """Test that a model schema error reports the offending field."""
        path = tmp_path / "model.json"
        path.write_text('{"schema_version": 1, "w1": "heavy"}')
        with pytest.raises(ParseError) as exc_info:
            self.store.load_model(path)
        assert exc_info.value.field is not None

    def test_inconsistent_model_is_a_parse_error(self, tmp_path: Path, model_json: str) -> None:
        """Test that a model whose clamp disagrees with its transform is rejected."""
        path = tmp_path / "model.json"
        path.write_text(model_json.replace('"clamp_max_s": 1.0', '"clamp_max_s": 2.0'))
        with pytest.raises(ParseError):
            self.store.load_model(path)

    def test_dataset_round_trip(self, tmp_path: Path) -> None:
        """Test that a dataset with splits loads back equal."""
        samples = tuple(CavitySample(s=0.05 * i, d=0.01, cavity_id=0, point_index=i + 1) for i in range(3))
        dataset = RegressionDataset(samples=samples, splits={"train": (0, 1), "test": (2,)})
        path = tmp_path / "dataset.json"
        self.store.save_dataset(dataset, path, provenance={"profile": "mid"})
        assert self.store.load_dataset(path) == dataset

    def test_single_and_multiple_profiles(self, tmp_path: Path) -> None:
        """Test that one profile or a list of profiles both load."""
        single = tmp_path / "one.json"
        self.store.save_profile(PROFILE_PRESETS["mid"], single)
        assert self.store.load_profiles(single) == [PROFILE_PRESETS["mid"]]

        several = tmp_path / "all.json"
        several.write_text(
            '{"profiles": [{"amplitude": 0.08, "width": 0.3, "name": "low"},'
            ' {"amplitude": 0.1, "width": 0.2, "kind": "skewed"}]}'
        )
        profiles = self.store.load_profiles(several)
        assert profiles[0] == PROFILE_PRESETS["low"]
        assert profiles[1] == BeamProfile(amplitude=0.1, width=0.2, kind="skewed")

    def test_malformed_json_reports_line(self, tmp_path: Path) -> None:
        """Test that invalid JSON reports the line of the syntax error."""
        path = tmp_path / "profile.json"
        path.write_text('{\n  "amplitude": 0.1,\n  "width": \n}')
        with pytest.raises(ParseError) as exc_info:
            self.store.load_profiles(path)
        assert exc_info.value.line == 4

    def test_constraints_and_plan(self, tmp_path: Path) -> None:
        """Test that constraints and experiment plans load back equal."""
        constraints = IkConstraints(plane_z=0.0, center_box=((-1.0, 1.0), (-2.0, 2.0), (-1.0, 1.0)))
        self.store.save_constraints(constraints, tmp_path / "constraints.json")
        assert self.store.load_constraints(tmp_path / "constraints.json") == constraints

        plan = ExperimentPlan.default(seed=8)
        self.store.save_plan(plan, tmp_path / "plan.json")
        assert self.store.load_plan(tmp_path / "plan.json") == plan

    def test_reports(self, tmp_path: Path) -> None:
        """Test that a report loads under its own schema and fails under another."""
        frame = FrameDTO(center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0))
        self.store.save_report(frame, tmp_path / "frame.json")
        assert self.store.load_report(tmp_path / "frame.json", FrameDTO) == frame
        with pytest.raises(ParseError):
            self.store.load_report(tmp_path / "frame.json", VolumetricReportDTO)


class TestWriteRows:
    """Test suite for tabular output."""

    def test_formats_values(self, tmp_path: Path) -> None:
        """Test that rows are written with shortest floats and lowercase booleans."""
        path = tmp_path / "out" / "rows.csv"
        FileArtifactStore().write_rows(path, ("case_id", "cost", "success"), [(0, 0.1, True), (1, np.float64(2.5e-12), False)])
        assert path.read_text() == "case_id,cost,success\n0,0.1,true\n1,2.5e-12,false\n"

    def test_format_value(self) -> None:
        """Test the text form of booleans, tiny floats and strings."""
        assert format_value(np.bool_(True)) == "true"
        assert format_value(1e-17) == "1e-17"
        assert format_value("mid") == "mid"
