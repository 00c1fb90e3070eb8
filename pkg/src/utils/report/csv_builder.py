import numpy as np
import pandas as pd
import logging
from model.path import Ensemble

class CsvBuilder:
    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def build_paths(self, ensemble: Ensemble, limit: int) -> pd.DataFrame:
        """
        Long table of the first paths of an ensemble, t = 0 included.

        Args:
            ensemble (Ensemble): paths to export
            limit (int): maximum number of paths

        Returns:
            pd.DataFrame: columns path_index, t, value
        """
        head = ensemble.head(limit)
        times = np.concatenate(([0.0], head.grid.points))
        values = head.with_origin()
        return pd.DataFrame({
            'path_index': np.repeat(head.path_indices, times.size),
            't': np.tile(times, head.n_paths),
            'value': values.ravel()
        })

    def build_table(self, rows: list) -> pd.DataFrame:
        """
        DataFrame from dict rows, columns in order of first appearance.

        Rows may carry different keys (e.g. ratio rows next to slope rows); missing cells stay empty.
        """
        columns = []
        for row in rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
        return pd.DataFrame(rows, columns=columns)
