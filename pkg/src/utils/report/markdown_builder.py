import logging
from model.experiment import CommandOutcome, RunManifest

class MarkdownBuilder:
    def __init__(self):
        self.content = []
        self.logger = logging.getLogger(__name__)

    def generate_run_summary(self, manifest: RunManifest, outcome: CommandOutcome = None) -> str:
        """
        Generate the summary.md of a run - main orchestration method

        Args:
            manifest (RunManifest): finished manifest
            outcome (CommandOutcome): command outcome, None when the run failed before producing one

        Returns:
            str: Complete markdown summary
        """
        self.content = []
        status = {0: "all criteria passed", 1: "run failed", 2: "criteria failed"}[manifest.exit_code]

        self.h1(f"Run {manifest.config_hash} - {manifest.command}")
        self.text(self.italic(f"Started {manifest.started_at}, finished {manifest.finished_at}"))
        self.text(f"{self.bold('Outcome')}: {status} (exit code {manifest.exit_code})")
        self.hr()

        self._add_verdicts(manifest)
        self._add_files(manifest)
        if outcome is not None and outcome.notes:
            self.h2("Notes")
            for note in outcome.notes:
                self.text(f"- {note}")
        if manifest.errors:
            self.h2("Errors")
            for error in manifest.errors:
                self.text(f"- `{error}`")

        return self.build()

    #----------------------------
    # Helper Methods for Markdown Formatting
    #----------------------------
    def h1(self, text):
        self.content.append(f"# {text}\n")
        return self

    def h2(self, text):
        self.content.append(f"\n## {text}\n")
        return self

    def italic(self, text):
        return f"*{text}*"

    def bold(self, text):
        return f"**{text}**"

    def table(self, headers, rows):
        if not rows:
            return self
        lines = [f"| {' | '.join(headers)} |", f"| {' | '.join(['---'] * len(headers))} |"]
        for row in rows:
            lines.append(f"| {' | '.join(str(cell) for cell in row)} |")
        self.content.append("\n".join(lines) + "\n")
        return self

    def hr(self):
        self.content.append("\n---\n")
        return self

    def text(self, text):
        self.content.append(f"{text}\n")
        return self

    def build(self):
        return "\n".join(self.content)

    #----------------------------
    # Methods to Add Sections
    #----------------------------
    def _add_verdicts(self, manifest: RunManifest):
        self.h2("Verdicts")
        if not manifest.verdicts:
            self.text(self.italic("No criteria were evaluated"))
            return
        rows = [
            [
                self.bold("PASS") if verdict.passed else self.bold("FAIL"),
                verdict.name,
                "" if verdict.value is None else f"{verdict.value:.6g}",
                verdict.threshold
            ]
            for verdict in manifest.verdicts
        ]
        self.table(["Status", "Criterion", "Value", "Threshold"], rows)

    def _add_files(self, manifest: RunManifest):
        self.h2("Files")
        rows = [[f"`{f['name']}`", f['rows'], f"`{f['sha256'][:16]}`"] for f in manifest.files]
        self.table(["File", "Rows", "SHA-256 (prefix)"], rows)
