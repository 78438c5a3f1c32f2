"""SVG rendering: schema checks, output structure, determinism."""

import os

import pytest

from blocklab import emit_plot

SPECTRUM = "re,im\n3.0,0.0\n2.0,0.0\n1.0,0.5\n-0.5,-0.9\n"
TREE = (
    "depth,estimator,successes,trials,p_hat,std_err\n"
    "2,majority,120,200,0.6,0.0346\n"
    "4,majority,110,200,0.55,0.0352\n"
    "2,bp,130,200,0.65,0.0337\n"
    "4,bp,118,200,0.59,0.0348\n"
)


def _sweep_csv():
    header = (
        "experiment,q,n,c_in,c_out,c,lambda,seed,init,converged,sweeps,"
        "overlap,bethe_f"
    )
    rows = [
        "e,2,100,3.0,1.0,2.0,0.5,0,random,true,10,0.1,1.0",
        "e,2,100,3.0,1.0,2.0,0.5,1,random,true,11,0.2,1.0",
        "e,2,100,4.5,1.5,3.0,0.5,0,random,true,12,0.5,1.1",
        "e,2,100,4.5,1.5,3.0,0.5,1,random,true,13,0.6,1.1",
    ]
    return header + "\n" + "\n".join(rows) + "\n"


def test_spectrum_plot(tmp_path):
    src = tmp_path / "s.csv"
    src.write_text(SPECTRUM)
    out = tmp_path / "s.svg"
    emit_plot(str(src), "spectrum", str(out), bulk_c=3.0)
    svg = out.read_text()
    assert svg.startswith("<svg")
    assert svg.rstrip().endswith("</svg>")
    assert "circle" in svg


def test_sweep_plot(tmp_path):
    src = tmp_path / "w.csv"
    src.write_text(_sweep_csv())
    out = tmp_path / "w.svg"
    emit_plot(str(src), "sweep", str(out))
    svg = out.read_text()
    assert "polyline" in svg
    assert "random" in svg  # legend labels the init


def test_tree_plot(tmp_path):
    src = tmp_path / "t.csv"
    src.write_text(TREE)
    out = tmp_path / "t.svg"
    emit_plot(str(src), "tree", str(out))
    svg = out.read_text()
    assert "majority" in svg and "bp" in svg


def test_byte_deterministic(tmp_path):
    src = tmp_path / "s.csv"
    src.write_text(SPECTRUM)
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    emit_plot(str(src), "spectrum", str(a), bulk_c=3.0)
    emit_plot(str(src), "spectrum", str(b), bulk_c=3.0)
    assert a.read_bytes() == b.read_bytes()


def test_schema_mismatch_rejected(tmp_path):
    src = tmp_path / "bad.csv"
    src.write_text("real,imag\n1.0,0.0\n")
    with pytest.raises(ValueError):
        emit_plot(str(src), "spectrum", str(tmp_path / "x.svg"))
    # nothing was written
    assert not os.path.exists(tmp_path / "x.svg")


def test_empty_csv_rejected(tmp_path):
    src = tmp_path / "empty.csv"
    src.write_text("re,im\n")
    with pytest.raises(ValueError):
        emit_plot(str(src), "spectrum", str(tmp_path / "y.svg"))
    src.write_text("")
    with pytest.raises(ValueError):
        emit_plot(str(src), "spectrum", str(tmp_path / "y.svg"))


def test_unknown_kind_rejected(tmp_path):
    src = tmp_path / "s.csv"
    src.write_text(SPECTRUM)
    with pytest.raises(ValueError):
        emit_plot(str(src), "histogram", str(tmp_path / "z.svg"))


def test_missing_input_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        emit_plot(str(tmp_path / "nope.csv"), "spectrum", str(tmp_path / "o.svg"))
