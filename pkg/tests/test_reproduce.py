import pytest

from v2xlat.reproduce import TABLE_IDS, Cell, UnknownTableError, render_csv, render_text, reproduce


@pytest.mark.parametrize("tid", TABLE_IDS)
def test_every_table_renders(tid):
    cells = reproduce(tid)
    assert cells
    text = render_text(tid, cells)
    assert text.startswith(f"Table {tid}")
    assert render_csv(cells).startswith("row,column,computed,published,deviation\n")


def test_unknown_table():
    with pytest.raises(UnknownTableError):
        reproduce("XVI")


def test_lowercase_id_accepted():
    assert reproduce("vi") == reproduce("VI")


def test_deviation_kinds():
    assert Cell("r", "c", 1.1, 1.0).deviation == pytest.approx(0.1)
    assert Cell("r", "c", "unstable", "unstable").deviation == "match"
    assert Cell("r", "c", 1.0, "unsupported").deviation == "mismatch"
    assert Cell("r", "c", 0.2, (0.1, 0.3)).deviation == 0.0
    assert Cell("r", "c", 0.6, (0.1, 0.3)).deviation == pytest.approx(1.0)
    assert Cell("r", "c", 0.6, None).deviation is None


def test_published_values_are_not_inputs():
    # the computed column never equals a published value that the model cannot produce
    cells = {(c.row, c.column): c for c in reproduce("VI")}
    cell = cells[("MEC@M1 p9999", "alpha=0.01")]
    assert cell.published == 1.304 and cell.computed != cell.published
