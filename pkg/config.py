import os
from fractions import Fraction
from typing import Callable, Dict, Optional


class Config:
    """Searchlight toolkit configuration management"""

    DEFAULTS = {
        'turns_per_second': '1',
        'oracle_max_cells': '200',
        'ncl_max_edges': '24',
        'coverage_density': '50',
        'seed': '0',
        'witness_subdivision': '2',
    }

    def __init__(self, path: str = '.searchlight'):
        self.path = path
        file_values = self._read_file()
        self.turns_per_second = self._get('turns_per_second', file_values, _positive_fraction)
        self.oracle_max_cells = self._get('oracle_max_cells', file_values, _positive_int)
        self.ncl_max_edges = self._get('ncl_max_edges', file_values, _positive_int)
        self.coverage_density = self._get('coverage_density', file_values, _positive_int)
        self.seed = self._get('seed', file_values, int)
        self.witness_subdivision = self._get('witness_subdivision', file_values, _non_negative_int)

    def _read_file(self) -> Dict[str, str]:
        """Read optional key = value overrides"""
        values: Dict[str, str] = {}
        try:
            with open(self.path, 'r') as f:
                for raw in f:
                    line = raw.split('#', 1)[0].strip()
                    if not line:
                        continue
                    if '=' not in line:
                        raise ValueError(f"Malformed line in {self.path}: {raw.strip()}")
                    key, value = line.split('=', 1)
                    values[key.strip()] = value.strip()
        except FileNotFoundError:
            pass
        return values

    def _get(self, key: str, file_values: Dict[str, str], convert: Callable):
        """Environment first, then file, then default"""
        raw = os.getenv(f"SEARCHLIGHT_{key.upper()}")
        if raw is None:
            raw = file_values.get(key, self.DEFAULTS[key])
        try:
            return convert(raw)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"Invalid value for {key}: {raw!r}")

    def as_dict(self) -> Dict[str, object]:
        return {key: getattr(self, key) for key in self.DEFAULTS}


def _positive_int(raw: str) -> int:
    value = int(raw)
    if value <= 0:
        raise ValueError(raw)
    return value


def _non_negative_int(raw: str) -> int:
    value = int(raw)
    if value < 0:
        raise ValueError(raw)
    return value


def _positive_fraction(raw: str) -> Fraction:
    value = Fraction(raw)
    if value <= 0:
        raise ValueError(raw)
    return value


_default: Optional[Config] = None


def get_config() -> Config:
    """Process-wide configuration, read once"""
    global _default
    if _default is None:
        _default = Config()
    return _default
