"""
Run manifest written next to the figure CSVs.

Single responsibility: record what produced a set of outputs (config echo,
version, seed, timestamp) and checksums of every output file.

Public API:
- RunManifest
- build_manifest(settings, files) -> RunManifest
- MANIFEST_NAME
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

from noma_ca import __version__
from noma_ca.core.config import SimulationSettings
from noma_ca.utils.files import sha256_file, write_text_atomic

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


@dataclass(frozen=True)
class RunManifest:
    config: dict[str, Any]
    version: str
    timestamp: str
    base_seed: int
    checksums: dict[str, str] = field(default_factory=dict)

    def settings(self) -> SimulationSettings:
        """The echoed configuration, ready to re-run."""
        return SimulationSettings.model_validate(self.config)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + '\n'

    def write(self, out_dir: Path) -> Path:
        path = Path(out_dir) / MANIFEST_NAME
        write_text_atomic(path, self.to_json())
        logger.info('Wrote %s', path)
        return path

    @classmethod
    def load(cls, path: Path) -> 'RunManifest':
        data = json.loads(Path(path).read_text(encoding='utf-8'))
        return cls(**data)


def build_manifest(settings: SimulationSettings, files: Iterable[Path]) -> RunManifest:
    """Manifest for settings with the sha256 of each file, keyed by file name."""
    return RunManifest(
        config=settings.model_dump(mode='json'),
        version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(timespec='seconds'),
        base_seed=settings.experiment.base_seed,
        checksums={Path(f).name: sha256_file(Path(f)) for f in sorted(files)},
    )
