"""
Half-disk fields, their file formats and the marching-squares nodal sets.
"""

import json

import numpy as np
import pytest

from reduction_tools.boundary_profile import boundary_touch_latitudes
from reduction_tools.contours import zero_contours, zero_segments
from reduction_tools.errors import DomainError
from reduction_tools.fields import (CSV_HEADER, Field2D, field_to_csv, half_disk_grid, parse_grid, to_json_text,
                                    write_field_csv, write_sidecar)


def make_field(fn, n_s: int = 33, n_r: int = 17) -> Field2D:
    s_grid, r_grid, mask = half_disk_grid(n_s, n_r)
    s, r = np.meshgrid(s_grid, r_grid, indexing="ij")
    return Field2D(s_grid, r_grid, np.where(mask, fn(s, r), 0.0), mask)


class TestField2D:

    def test_grid_and_mask(self):
        s_grid, r_grid, mask = half_disk_grid(33, 17)
        assert s_grid[0] == -1.0 and s_grid[-1] == 1.0
        assert r_grid[0] == 0.0 and r_grid[-1] == 1.0
        assert mask[16, 0]
        assert not mask[0, 0]
        assert not mask[16, -1]

    def test_shape_mismatch_raises(self):
        s_grid, r_grid, mask = half_disk_grid(9, 5)
        with pytest.raises(DomainError):
            Field2D(s_grid, r_grid, np.zeros((5, 9)), mask)

    def test_axis_profile_drops_masked_nodes(self):
        field = make_field(lambda s, r: 1 - s * s - r * r)
        s, values = field.axis_profile()
        assert len(s) == 31
        assert values == pytest.approx(1 - s * s)

    def test_evenness(self):
        assert make_field(lambda s, r: s * s + r).evenness_error() == pytest.approx(0.0, abs=1e-15)
        assert make_field(lambda s, r: s).evenness_error() > 1.0

    def test_masked_values_and_scaling(self):
        field = make_field(lambda s, r: 1 - s * s - r * r)
        assert np.isnan(field.masked_values()[0, 0])
        assert field.scaled(2.0).values[16, 0] == pytest.approx(2.0)

    def test_parse_grid(self):
        assert parse_grid("129x65") == (129, 65)
        assert parse_grid("33X17") == (33, 17)
        with pytest.raises(DomainError):
            parse_grid("129by65")


class TestFileFormats:

    def test_csv_lists_masked_nodes_only(self):
        field = make_field(lambda s, r: s + 2 * r)
        lines = field_to_csv(field).strip().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) - 1 == int(field.mask.sum())
        s, r, value = (float(x) for x in lines[1].split(","))
        assert value == s + 2 * r

    def test_csv_is_deterministic(self, tmp_path):
        field = make_field(lambda s, r: np.cos(s) * r)
        first, second = tmp_path / "a" / "field.csv", tmp_path / "b" / "field.csv"
        write_field_csv(field, str(first))
        write_field_csv(field, str(second))
        assert first.read_bytes() == second.read_bytes()

    def test_json_rejects_non_finite_floats(self):
        assert json.loads(to_json_text({"a": [1.5, 2]})) == {"a": [1.5, 2]}
        for bad in (float("nan"), float("inf"), np.float64("-inf")):
            with pytest.raises(ValueError):
                to_json_text({"a": bad})

    def test_json_floats_carry_seventeen_digits(self):
        text = to_json_text({"eps": 0.1, "values": [np.float64(1.0) / 3.0, 2.5e-12], "n": 3, "ok": True})
        assert '"eps": 0.10000000000000001' in text
        assert "0.33333333333333331" in text
        assert "e-12" in text
        assert '"n": 3' in text and '"ok": true' in text
        assert json.loads(text)["values"][0] == 1.0 / 3.0
        assert text.startswith("{\n  \"eps\"")

    def test_sidecar(self, tmp_path):
        path = tmp_path / "out.csv"
        path.write_text("x\n")
        write_sidecar(str(path), {"dim": 3}, started=0.0, extra={"rho": 0.5})
        meta = json.loads((tmp_path / "out.csv.meta.json").read_text())
        assert meta["data_file"] == "out.csv"
        assert meta["arguments"] == {"dim": 3}
        assert meta["rho"] == 0.5
        assert "finished_at" in meta and "runtime_s" in meta


class TestContours:

    def test_vertical_line(self):
        field = make_field(lambda s, r: s)
        contours = zero_contours(field)
        assert len(contours) == 1
        assert all(point[0] == pytest.approx(0.0, abs=1e-12) for point in contours[0])
        h = max(field.spacing)
        assert boundary_touch_latitudes(contours, 2 * h) == pytest.approx([0.0], abs=1e-12)

    def test_circle_meets_the_axis(self):
        field = make_field(lambda s, r: s * s + r * r - 0.25, n_s=65, n_r=33)
        contours = zero_contours(field)
        assert len(contours) == 1
        radii = [np.hypot(*point) for point in contours[0]]
        assert np.max(np.abs(np.array(radii) - 0.5)) < max(field.spacing)
        ends = sorted(point[0] for point in (contours[0][0], contours[0][-1]))
        assert ends == pytest.approx([-0.5, 0.5], abs=1e-12)

    def test_masked_cells_are_skipped(self):
        field = make_field(lambda s, r: s)
        field.mask[16, :] = False
        assert zero_segments(field) == []

    def test_no_sign_change_no_contour(self):
        assert zero_contours(make_field(lambda s, r: 1 + s * s)) == []
