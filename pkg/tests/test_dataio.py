import pytest

from linou.dataio import (
    MARKET_COLUMNS, bundled_dataset, bundled_stats, format_market_csv, load_stats_csv,
    parse_market_csv, to_csv, to_text, write_market_csv, load_market_csv,
)
from linou.errors import EmptyBlock, ParseError, SchemaMismatch

HEADER = "# S0=5.16\n" + ",".join(MARKET_COLUMNS) + "\n"


def test_bundled_market_file():
    ds = bundled_dataset()
    assert ds.S0 == 5.16
    assert ds.valuation_date == "2007-11-22"
    assert len(ds.quote_blocks) == 6
    assert len(ds.quotes) == 38
    assert ds.taus == sorted(ds.taus)
    q = ds.quotes[0]
    assert (q.tau, q.r, q.log_moneyness, q.implied_vol) == (0.0795, 0.0425, 0.0626, 0.3354)
    for blk in ds.quote_blocks:
        lm = [q.log_moneyness for q in blk]
        assert lm == sorted(lm, reverse=True)
        assert len({q.r for q in blk}) == 1


def test_bundled_statistics():
    stats = bundled_stats()
    assert [s.tau for s in stats] == bundled_dataset().taus
    assert stats[1].values() == (0.1145, -0.578, 1.44)


def test_round_trip(tmp_path):
    ds = bundled_dataset()
    write_market_csv(ds, tmp_path / "m.csv")
    back = load_market_csv(tmp_path / "m.csv")
    assert back == ds
    assert format_market_csv(back) == format_market_csv(ds)


def test_parse_errors_name_the_line():
    with pytest.raises(ParseError) as exc:
        parse_market_csv(HEADER + "0.5,0.04,0.0,0.3\n0.5,0.04,0.1,0.0\n")
    assert exc.value.line == 4
    assert "line 4" in str(exc.value)
    with pytest.raises(ParseError):
        parse_market_csv(HEADER + "0.5,0.04,abc,0.3\n")
    with pytest.raises(ParseError):
        parse_market_csv(HEADER + "0.5,0.04,0.0\n")
    with pytest.raises(ParseError):
        parse_market_csv(HEADER + "0.5,0.04,0.0,0.3\n0.5,0.05,0.1,0.3\n")
    with pytest.raises(ParseError):
        parse_market_csv("# S0=-1\n" + ",".join(MARKET_COLUMNS) + "\n0.5,0.04,0.0,0.3\n")


def test_schema_errors():
    with pytest.raises(SchemaMismatch):
        parse_market_csv("")
    with pytest.raises(SchemaMismatch):
        parse_market_csv("# S0=5\ntau,r,lm,iv\n")
    with pytest.raises(SchemaMismatch):
        parse_market_csv(",".join(MARKET_COLUMNS) + "\n0.5,0.04,0.0,0.3\n")
    with pytest.raises(EmptyBlock):
        parse_market_csv(HEADER)


def test_stats_file_errors(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("")
    with pytest.raises(SchemaMismatch):
        load_stats_csv(path)
    path.write_text("tau_yr,sigma\n")
    with pytest.raises(SchemaMismatch):
        load_stats_csv(path)


def test_tables():
    rows = [(0.5, 0.123456789, "x")]
    assert to_csv(("a", "b", "c"), rows) == "a,b,c\n0.5,0.123456789,x\n"
    text = to_text(("a", "b", "c"), rows)
    assert text.splitlines()[2].split() == ["0.5", "0.123457", "x"]
