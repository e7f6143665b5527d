import pytest

from sqarray import catalog
from sqarray.fixtures import load_json, resolve


@pytest.mark.parametrize("table", ["T1", "T3", "T5", "T6"])
def test_table_reproduces(table):
    rows = catalog.run(table)
    assert rows
    failed = [r.line() for r in rows if r.status != "pass"]
    assert not failed, "\n".join(failed)


def test_table4_subset():
    rows = catalog.table4(cells=[(10, 3), (12, 3), (16, 4), (20, 5)])
    assert [r.status for r in rows] == ["pass"] * 4
    assert rows[1].key.endswith("*")


def test_table2_sampled_mean():
    rows = catalog.table2(sample=5000, seed=0)
    means = [r for r in rows if r.quantity == "mean"]
    assert len(means) == 3 and all(r.status == "pass" for r in means)


def test_better_status():
    row = catalog._row("T4", "k", "min a_tt", 3.0, 2.9, 5e-4, allow_better=True)
    assert row.status == "better"
    assert catalog._row("T4", "k", "min a_tt", 3.0, 3.1, 5e-4, allow_better=True).status == "fail"


def test_unknown_table():
    with pytest.raises(ValueError):
        catalog.run("T7")


def test_missing_fixture_named():
    with pytest.raises(FileNotFoundError, match="absent.json"):
        resolve("absent.json")


def test_tables_fixture_complete():
    data = load_json("tables.json")
    assert set(data) >= set(catalog.TABLES)
