import json
import sys
from typing import Optional, TextIO

import pandas as pd

from src.domain.interfaces import IRecordWriter, ITableWriter


class CsvTableWriter(ITableWriter):
    """Writes tables as comma-separated text with '\\n' line endings."""

    def __init__(self, target: Optional[str] = None, float_format: str = "%.15g", stream: Optional[TextIO] = None):
        self.target = target
        self.float_format = float_format
        self.stream = stream

    def write_table(self, table: pd.DataFrame) -> None:
        options = dict(index=False, float_format=self.float_format, lineterminator="\n")
        if self.target is not None:
            table.to_csv(self.target, **options)
            return
        stream = self.stream if self.stream is not None else sys.stdout
        stream.write(table.to_csv(**options))
        stream.flush()


class JsonRecordWriter(IRecordWriter):
    def __init__(self, stream: Optional[TextIO] = None, indent: Optional[int] = 2):
        self.stream = stream
        self.indent = indent

    def write_record(self, payload: dict) -> None:
        stream = self.stream if self.stream is not None else sys.stdout
        # repr-exact floats, so a parsed record equals the emitted one
        stream.write(json.dumps(payload, indent=self.indent, allow_nan=False) + "\n")
        stream.flush()
