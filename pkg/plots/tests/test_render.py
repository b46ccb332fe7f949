import json
from pathlib import Path

import numpy as np
import pytest

from interorder_plots import FigureSpec, SchemaError, load_spec, render

BUNDLE = Path(__file__).resolve().parents[2] / "data"
PROFILE = BUNDLE / "exact_n8" / "profile.csv"
DELTA = BUNDLE / "exact_n8" / "delta.csv"


def heatmap_csv():
    grids = sorted((BUNDLE / "exact_n8_heatmap").glob("heatmap_*.csv"))
    assert grids, "bundled heatmap CSVs missing"
    return grids[0]


def read_column(path, name, sample_set=None):
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    idx = header.index(name)
    if sample_set is not None:
        set_idx = header.index("sample_set")
        rows = [r for r in rows if r[set_idx] == sample_set]
    return np.array([float(r[idx]) for r in rows])


class TestSpecs:
    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(SchemaError):
            FigureSpec(kind="pie", inputs=(str(PROFILE),), output="x.png")

    def test_missing_input_rejected(self, tmp_path):
        with pytest.raises(SchemaError):
            FigureSpec(kind="order-profile", inputs=(str(tmp_path / "no.csv"),),
                       output="x.png")

    def test_load_spec_roundtrip(self, tmp_path):
        payload = {"kind": "order-profile", "inputs": [str(PROFILE)],
                   "output": str(tmp_path / "fig.png")}
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(payload))
        spec = load_spec(str(spec_path))
        assert spec.kind == "order-profile"


class TestRenderKinds:
    def test_order_profile(self, tmp_path):
        out = tmp_path / "profile.png"
        spec = FigureSpec(kind="order-profile", inputs=(str(PROFILE),),
                          output=str(out))
        arrays = render(spec)
        assert out.exists() and out.stat().st_size > 0
        want = read_column(PROFILE, "i_mean[score]", sample_set="normal")
        assert np.array_equal(arrays["normal_y"], want)
        want_adv = read_column(PROFILE, "i_mean[score]", sample_set="adversarial")
        assert np.array_equal(arrays["adversarial_y"], want_adv)

    def test_delta_utility(self, tmp_path):
        out = tmp_path / "delta.png"
        spec = FigureSpec(kind="delta-utility", inputs=(str(DELTA),),
                          output=str(out))
        arrays = render(spec)
        assert out.exists()
        assert np.array_equal(arrays["delta_j"],
                              read_column(DELTA, "delta_j[score]"))
        assert np.array_equal(arrays["normalized_abs"],
                              read_column(DELTA, "normalized_abs_delta_i[ratio]"))

    def test_disentanglement(self, tmp_path):
        out = tmp_path / "d.png"
        spec = FigureSpec(kind="disentanglement", inputs=(str(PROFILE),),
                          output=str(out))
        arrays = render(spec)
        assert out.exists()
        want = read_column(PROFILE, "d_mean[ratio]", sample_set="adversarial")
        assert np.array_equal(arrays["adversarial_y"], want)

    def test_heatmap(self, tmp_path):
        src = heatmap_csv()
        out = tmp_path / "heatmap.png"
        spec = FigureSpec(kind="heatmap", inputs=(str(src),), output=str(out))
        arrays = render(spec)
        assert out.exists()
        lines = src.read_text().strip().splitlines()
        want = np.array([[float(v) for v in line.split(",")]
                         for line in lines[1:]])
        assert np.array_equal(arrays["grid"], want)
        # grid shape matches the 4x2 partition of the bundled run
        assert arrays["grid"].shape == (4, 2)

    def test_zero_delta_renders_flat_line(self, tmp_path):
        csv = tmp_path / "delta.csv"
        csv.write_text(
            "order_m,order_fraction,delta_i[score],delta_j[score],"
            "normalized_abs_delta_i[ratio]\n"
            "1,0.125,0,0,0\n2,0.25,0,0,0\n"
        )
        out = tmp_path / "flat.png"
        arrays = render(FigureSpec(kind="delta-utility", inputs=(str(csv),),
                                   output=str(out)))
        assert out.exists()
        assert np.all(arrays["delta_j"] == 0.0)


class TestSchemaErrors:
    def test_missing_column_named(self, tmp_path):
        csv = tmp_path / "bad.csv"
        csv.write_text("order_m,order_fraction\n1,0.125\n")
        spec = FigureSpec(kind="delta-utility", inputs=(str(csv),),
                          output=str(tmp_path / "x.png"))
        with pytest.raises(SchemaError) as err:
            render(spec)
        assert "delta_i[score]" in str(err.value)


class TestDeterminism:
    def test_same_spec_same_bytes(self, tmp_path):
        out1, out2 = tmp_path / "a.png", tmp_path / "b.png"
        for out in (out1, out2):
            render(FigureSpec(kind="order-profile", inputs=(str(PROFILE),),
                              output=str(out)))
        assert out1.read_bytes() == out2.read_bytes()
