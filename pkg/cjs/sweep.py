import re
from typing import List, Optional, Sequence, Union

from cjs.adaptation.dataset.dataset import DomainDataset
from cjs.adaptation.pipeline.pipeline import SWEEP_PARAMS, SweepRow, sweep
from cjs.settings import PipelineConfig

SWEEP_CSV_HEADER = ["param", "value", "mean", "std", "baseline_mean"]


def parse_sweep_values(spec: Union[str, int, Sequence[int]]) -> List[int]:
    """Values from ``"5,10,20"`` or the inclusive range ``"10:40:10"``."""
    if isinstance(spec, int):
        return [spec]
    if not isinstance(spec, str):
        return [int(value) for value in spec]

    spec = spec.strip()
    match = re.match(r"^(\d+):(\d+):(\d+)$", spec)
    if match:
        start, stop, step = (int(group) for group in match.groups())
        if step < 1 or stop < start:
            raise ValueError(f"Invalid sweep range: {spec}")
        return list(range(start, stop + 1, step))

    if re.match(r"^\d+(\s*,\s*\d+)*$", spec):
        return [int(token) for token in spec.split(",")]

    raise ValueError(f"Invalid sweep values format: {spec}")


class SweepManager:
    def __init__(self, param: str, values: Union[str, Sequence[int]]):
        if param not in SWEEP_PARAMS:
            raise ValueError(f"Invalid sweep parameter: {param}")
        self.param = param
        self.values = parse_sweep_values(values)

    def run(
        self,
        config: PipelineConfig,
        source: Optional[DomainDataset] = None,
        target: Optional[DomainDataset] = None,
    ) -> List[SweepRow]:
        return sweep(config, self.param, self.values, source, target)

    @staticmethod
    def to_rows(rows: Sequence[SweepRow]) -> List[List[object]]:
        def cell(value):
            return "" if value is None else value

        return [
            [row.param, row.value, cell(row.mean), cell(row.std), cell(row.baseline_mean)]
            for row in rows
        ]
