import logging
import os
from dataclasses import dataclass, fields, replace

log = logging.getLogger(__name__)

SETTINGS_FILE = "settings.txt"


@dataclass(frozen=True)
class Settings:
    zero_tol: float = 1e-2
    rel_tol: float = 0.05
    slack: float = 0.10
    tail_fraction: float = 0.25
    min_slope: float = 0.1
    min_samples: int = 8
    flatten_tol: float = 0.05
    drop_threshold: float = 1e-10
    hermitian_tol: float = 1e-10
    berg_hermitian_tol: float = 1e-12
    max_window: int = 10_000_000
    workers: int = 1
    log_level: str = "WARNING"

    def policy(self):
        from norms import ClassifyPolicy

        return ClassifyPolicy(
            zero_tol=self.zero_tol,
            rel_tol=self.rel_tol,
            slack=self.slack,
            tail_fraction=self.tail_fraction,
            min_slope=self.min_slope,
            min_samples=self.min_samples,
            flatten_tol=self.flatten_tol,
        )


_TYPES = {f.name: f.type for f in fields(Settings)}


def _convert(name, raw):
    kind = _TYPES[name]
    if kind in ("int", int):
        return int(float(raw))
    if kind in ("float", float):
        return float(raw)
    return raw


def load_settings(path=SETTINGS_FILE):
    """Read `key = value` lines; anything missing keeps its default."""
    settings = Settings()
    if not os.path.exists(path):
        log.debug("no settings file at %s, using defaults", path)
        return settings
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if not sep or key not in _TYPES:
                log.warning("%s:%d: ignoring unrecognised line %r", path, number, line)
                continue
            try:
                values[key] = _convert(key, raw)
            except ValueError:
                log.warning("%s:%d: bad value for %s: %r", path, number, key, raw)
    return replace(settings, **values)
