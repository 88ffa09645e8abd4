import io

import pytest
from rich.console import Console

from qpir_lab.timers import LoopTimer, TimedSection


def test_sections_record_each_call():
    timer = LoopTimer()
    for _ in range(3):
        with timer.section("runs") as timed:
            pass
        assert timed.elapsed_time_ms >= 0
    with timer.section("schemes"):
        pass
    assert [len(timer.sections[name]) for name in ("runs", "schemes")] == [3, 1]
    assert timer.total_ms("runs") >= 0
    assert timer.total_ms("missing") == 0

    df = timer.get_section_times_df()
    assert list(df.columns) == ["Section", "Calls", "Sum Time (ms)", "Sum Time (%)"]
    assert df["Section"].tolist() == ["runs", "schemes"]
    assert df["Calls"].tolist() == [3, 1]

    timer.reset()
    assert timer.get_section_times_df().empty


def test_section_stops_on_error():
    timer = LoopTimer()
    with pytest.raises(RuntimeError):
        with timer.section("broken"):
            raise RuntimeError("boom")
    assert timer.sections["broken"][0].stop_ns is not None


def test_unfinished_section():
    with pytest.raises(ValueError, match="has not finished"):
        TimedSection("open", start_ns=0).elapsed_time_ms


def test_pretty_print():
    timer = LoopTimer()
    with timer.section("codes"):
        pass
    console = Console(file=io.StringIO(), width=200)
    timer.pretty_print_section_times(console)
    text = console.file.getvalue()
    assert "Section times" in text and "codes" in text
