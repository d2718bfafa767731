import xml.etree.ElementTree as ET

from wmsync.plotting import emit_plots, line_plot_svg

NS = "{http://www.w3.org/2000/svg}"


def parse(svg):
    return ET.fromstring(svg)


def test_empty_table_gives_axes_only():
    root = parse(line_plot_svg({}, "t"))
    assert root.find(f".//{NS}polyline") is None
    assert root.find(f".//{NS}g[@class='axes']") is not None


def test_one_series_two_points():
    root = parse(line_plot_svg({"dm1": [(0.1, 0.5), (0.2, 0.7)]}))
    lines = root.findall(f".//{NS}polyline")
    assert len(lines) == 1
    assert len(lines[0].get("points").split()) == 2


def test_values_round_trip_through_attributes():
    series = {"dm1": [(0.02, 0.0123), (0.15, 0.16)], "fsmc": [(0.02, 0.011), (0.15, 0.161)]}
    root = parse(line_plot_svg(series))
    back = {}
    for g in root.findall(f".//{NS}g[@class='series']"):
        back[g.get("data-series")] = [(float(c.get("data-x")), float(c.get("data-y")))
                                      for c in g.findall(f"{NS}circle")]
    assert back == series


def test_deterministic():
    s = {"a": [(1, 2), (0, 1)]}
    assert line_plot_svg(s, "x") == line_plot_svg(s, "x")


def test_emit_plots(tmp_path):
    overall = [{"entropy_target": 0.02, "decoder": "dm1", "mean_ber": 0.01, "mean_niis": 0.02,
                "mean_sao": 3.0},
               {"entropy_target": 0.15, "decoder": "none", "mean_ber": "", "mean_niis": "",
                "mean_sao": ""}]
    constant = [{"entropy": 0.02, "decoder": "dm1", "ber": 0.0, "niis": 0.1, "sao": 2},
                {"entropy": 0.02, "decoder": "dm1", "ber": 0.1, "niis": 0.3, "sao": 4}]
    paths = emit_plots(tmp_path, overall, constant)
    assert sorted(p.name for p in paths) == sorted(
        f"{kind}_{m}.svg" for kind in ("overall", "constant") for m in ("ber", "niis", "sao"))
    root = parse((tmp_path / "constant_niis.svg").read_text())
    circle = root.find(f".//{NS}circle")
    assert float(circle.get("data-y")) == 0.2
