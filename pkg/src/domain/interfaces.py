from abc import ABC, abstractmethod

import numpy as np
import pandas as pd


class INormalSource(ABC):
    @abstractmethod
    def standard_normal(self, count: int) -> np.ndarray:
        """Return `count` independent N(0, 1) variates, deterministic for the source's seed."""
        pass


class ITableWriter(ABC):
    @abstractmethod
    def write_table(self, table: pd.DataFrame) -> None:
        pass


class IRecordWriter(ABC):
    @abstractmethod
    def write_record(self, payload: dict) -> None:
        pass
