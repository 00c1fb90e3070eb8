from datetime import datetime


class ExperimentConfig:
    """
    A validated experiment definition.

    Attributes:
        command (str): one of the runner commands
        sections (dict): normalized section -> {key: value string}, the canonical source
        kernel (KernelSpec): driving kernel
        drift (DriftSpec | None): drift, when the command needs one
        horizon (float): grid horizon T
        n_points (int): grid size
        n_paths (int): Monte Carlo size
        master_seed (int): mandatory run seed
        output_dir (str | None): where run directories are created
        threads (int | None): worker pool size
        params (dict): command-specific parameters (already typed)
        verdict (dict): verdict thresholds with defaults filled in
        config_hash (str): 12 hex digits of the canonical serialization's SHA-256
    """
    def __init__(
        self,
        command: str,
        sections: dict,
        kernel,
        drift,
        horizon: float,
        n_points: int,
        n_paths: int,
        master_seed: int,
        output_dir: str,
        threads: int,
        params: dict,
        verdict: dict,
        config_hash: str
    ):
        self.command = command
        self.sections = sections
        self.kernel = kernel
        self.drift = drift
        self.horizon = horizon
        self.n_points = n_points
        self.n_paths = n_paths
        self.master_seed = master_seed
        self.output_dir = output_dir
        self.threads = threads
        self.params = params
        self.verdict = verdict
        self.config_hash = config_hash

    def to_dict(self) -> dict:
        return {
            'command': self.command,
            'config_hash': self.config_hash,
            'kernel': self.kernel.to_dict() if self.kernel else None,
            'drift': self.drift.to_dict() if self.drift else None,
            'horizon': self.horizon,
            'n_points': self.n_points,
            'n_paths': self.n_paths,
            'master_seed': self.master_seed,
            'params': self.params,
            'verdict': self.verdict
        }


class Verdict:
    """
    Pass/fail outcome of one acceptance criterion.

    Attributes:
        name (str): criterion name
        passed (bool): outcome
        value (float | None): measured quantity
        threshold (str): human-readable threshold
    """
    def __init__(self, name: str, passed: bool, value=None, threshold: str = ""):
        self.name = name
        self.passed = bool(passed)
        self.value = value
        self.threshold = threshold

    def to_dict(self) -> dict:
        return {'criterion': self.name, 'passed': self.passed, 'value': self.value, 'threshold': self.threshold}


class RunManifest:
    """
    Provenance record written at the end of a run.

    Attributes:
        config_hash (str): run identifier
        master_seed (int): run seed
        library_version (str): version of this library
        command (str): executed command
        started_at (str): ISO timestamp
        finished_at (str | None): ISO timestamp
        files (list): dicts with name, sha256 and rows per emitted data file
        verdicts (list): Verdict objects
        errors (list): error messages recorded during the run
    """
    def __init__(self, config_hash: str, master_seed: int, library_version: str, command: str):
        self.config_hash = config_hash
        self.master_seed = master_seed
        self.library_version = library_version
        self.command = command
        self.started_at = datetime.now().isoformat()
        self.finished_at = None
        self.files = []
        self.verdicts = []
        self.errors = []

    def add_file(self, name: str, checksum: str, rows: int):
        self.files.append({'name': name, 'sha256': checksum, 'rows': rows})

    def finish(self):
        self.finished_at = datetime.now().isoformat()

    @property
    def exit_code(self) -> int:
        """0 when every criterion passed, 2 on any failed criterion, 1 on error."""
        if self.errors:
            return 1
        if any(not verdict.passed for verdict in self.verdicts):
            return 2
        return 0

    def to_dict(self) -> dict:
        return {
            'config_hash': self.config_hash,
            'master_seed': self.master_seed,
            'library_version': self.library_version,
            'command': self.command,
            'started_at': self.started_at,
            'finished_at': self.finished_at,
            'exit_code': self.exit_code,
            'files': self.files,
            'verdicts': [verdict.to_dict() for verdict in self.verdicts],
            'errors': self.errors
        }


class CommandOutcome:
    """
    Everything one command produced, before anything is written to disk.

    Attributes:
        command (str): executed command
        ensemble (Ensemble | None): paths to export (the first EXPORT_PATH_LIMIT rows go to paths.csv)
        report_rows (list): dict rows of report.csv
        trace_rows (list): dict rows of trace.csv, empty when the command has no trace
        verdicts (list): Verdict per acceptance criterion
        notes (list): free-text remarks for the markdown summary
    """
    def __init__(self, command: str, ensemble=None, report_rows: list = None, trace_rows: list = None):
        self.command = command
        self.ensemble = ensemble
        self.report_rows = list(report_rows or [])
        self.trace_rows = list(trace_rows or [])
        self.verdicts = []
        self.notes = []

    def check(self, name: str, passed: bool, value=None, threshold: str = "") -> Verdict:
        """Record a criterion and return it."""
        verdict = Verdict(name, passed, None if value is None else float(value), threshold)
        self.verdicts.append(verdict)
        return verdict

    @property
    def passed(self) -> bool:
        return all(verdict.passed for verdict in self.verdicts)

    def to_dict(self) -> dict:
        return {
            'command': self.command,
            'report_rows': len(self.report_rows),
            'trace_rows': len(self.trace_rows),
            'verdicts': [verdict.to_dict() for verdict in self.verdicts],
            'notes': self.notes
        }
