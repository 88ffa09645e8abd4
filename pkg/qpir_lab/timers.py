"""Wall-clock timing of named sections: one per verification check, or per sweep phase."""

from __future__ import annotations

import time
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass
from typing import DefaultDict, Iterator, List, Optional

import pandas as pd
from rich.console import Console
from rich.table import Table


@dataclass
class TimedSection:
    name: str
    start_ns: Optional[int] = None
    stop_ns: Optional[int] = None

    @property
    def elapsed_time_ms(self) -> float:
        if self.start_ns is None or self.stop_ns is None:
            raise ValueError(f"Section {self.name!r} has not finished")
        return (self.stop_ns - self.start_ns) / 1e6


class LoopTimer:
    """Named sections; a section may be timed many times."""

    def __init__(self):
        self.reset()

    def reset(self) -> None:
        self.sections: DefaultDict[str, List[TimedSection]] = defaultdict(list)

    @contextmanager
    def section(self, name: str) -> Iterator[TimedSection]:
        """Times the body; the yielded record is complete once the block exits."""
        timed = TimedSection(name)
        self.sections[name].append(timed)
        timed.start_ns = time.perf_counter_ns()
        try:
            yield timed
        finally:
            timed.stop_ns = time.perf_counter_ns()

    def total_ms(self, name: str) -> float:
        return sum(timed.elapsed_time_ms for timed in self.sections.get(name, []))

    def get_section_times_df(self) -> pd.DataFrame:
        names = list(self.sections)
        sums = [self.total_ms(name) for name in names]
        total = sum(sums)
        return pd.DataFrame(
            {
                "Section": names,
                "Calls": [len(self.sections[name]) for name in names],
                "Sum Time (ms)": sums,
                "Sum Time (%)": [t / total * 100 if total > 0 else 0.0 for t in sums],
            }
        )

    def pretty_print_section_times(
        self,
        console: Console,
        df: Optional[pd.DataFrame] = None,
        n_decimal_places: int = 1,
    ) -> None:
        if df is None:
            df = self.get_section_times_df()
        table = Table(title="Section times")
        for column in df.columns:
            table.add_column(column, justify="left" if column == "Section" else "right")
        for _, row in df.iterrows():
            table.add_row(
                *[
                    f"{value:.{n_decimal_places}f}" if isinstance(value, float) else str(value)
                    for value in row.tolist()
                ]
            )
        console.print(table)
