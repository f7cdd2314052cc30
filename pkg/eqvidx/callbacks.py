"""
Callback classes hooked into the stages of an index report (solve, reduce, spectrum,
partition, oracle, assemble).
"""

import time


class Callback:
    """
    Callback base class; every hook is a no-op.
    """
    def __init__(self):
        pass

    def begin_report(self, pipeline):
        pass

    def begin_stage(self, pipeline, stage):
        pass

    def end_stage(self, pipeline, stage, output):
        pass

    def stage_failed(self, pipeline, stage, error):
        pass

    def end_report(self, pipeline, report):
        pass


class LoggerCallback(Callback):
    """
    Forwards stage timings and scalar stage outputs to a logger.
    """
    def __init__(self, logger):
        super().__init__()
        self.logger = logger
        self.step = 0
        self._started = {}
        self._report_start = None

    def begin_report(self, pipeline):
        self._started.clear()
        self._report_start = time.time()

    def begin_stage(self, pipeline, stage):
        self._started[stage] = time.time()

    def end_stage(self, pipeline, stage, output):
        metrics = {f'{stage}_seconds': time.time() - self._started.pop(stage, time.time())}
        metrics.update({f'{stage}_{k}': v for k, v in (output or {}).items()})
        self.logger.log_metrics(metrics, self.step)
        self.step += 1

    def stage_failed(self, pipeline, stage, error):
        self.logger.log_metrics({f'{stage}_failed': 1.0}, self.step)
        self.step += 1

    def end_report(self, pipeline, report):
        if self._report_start is not None:
            self.logger.log_metrics({'report_seconds': time.time() - self._report_start}, self.step)
            self.step += 1
        self.logger.log_artifacts({pipeline.artifact_name: pipeline.serialize(report)})


class StageRecorder(Callback):
    """
    Keeps the ordered list of (stage, event) pairs seen during the latest report.
    """
    def __init__(self):
        super().__init__()
        self.events = []
        self.reports = 0

    def begin_report(self, pipeline):
        self.events = []
        self.reports += 1

    def begin_stage(self, pipeline, stage):
        self.events.append((stage, 'begin'))

    def end_stage(self, pipeline, stage, output):
        self.events.append((stage, 'end'))

    def stage_failed(self, pipeline, stage, error):
        self.events.append((stage, 'failed'))
