import logging
from model.experiment import RunManifest

class ManifestBuilder:
    """Renders a RunManifest as the plain-text manifest.txt."""
    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def build(self, manifest: RunManifest, canonical_config: str) -> str:
        """
        Plain-text manifest: provenance header, files, verdicts, errors and the canonical config.

        Args:
            manifest (RunManifest): finished manifest
            canonical_config (str): canonical serialization of the config

        Returns:
            str: manifest text
        """
        lines = [
            f"config_hash: {manifest.config_hash}",
            f"command: {manifest.command}",
            f"master_seed: {manifest.master_seed}",
            f"library_version: {manifest.library_version}",
            f"started_at: {manifest.started_at}",
            f"finished_at: {manifest.finished_at}",
            f"exit_code: {manifest.exit_code}",
            "",
            "[files]",
        ]
        lines.extend(f"{f['name']} rows={f['rows']} sha256={f['sha256']}" for f in manifest.files)

        lines.extend(["", "[verdicts]"])
        for verdict in manifest.verdicts:
            status = "PASS" if verdict.passed else "FAIL"
            lines.append(f"{status} {verdict.name} value={verdict.value} threshold={verdict.threshold}")

        if manifest.errors:
            lines.extend(["", "[errors]"])
            lines.extend(manifest.errors)

        lines.extend(["", "[config]", canonical_config.rstrip(), ""])
        return "\n".join(lines)
