"""
Loggers for pipeline progress, metrics and report artifacts.
"""
import numbers
import os
import shutil
import sys
import time

import mlflow
import numpy as np
import torch


def _scalar(v):
    if isinstance(v, torch.Tensor) and torch.numel(v) == 1:
        return v.item()
    if isinstance(v, np.ndarray) and v.size == 1:
        return float(v.flatten()[0])
    if isinstance(v, numbers.Number) and not isinstance(v, bool):
        return float(v)
    return None


class BasicLogger:
    def __init__(self, args=None, savedir='eqvidx-runs', verbosity=1, stdout=None, stream=None):
        """
        :param args: (Namespace or dict) resolved configuration
        :param savedir: (str) Folder to write artifacts to.
        :param verbosity: (int) Print every verbosity steps
        :param stdout: (list of str) Metrics to print; None prints every scalar metric
        :param stream: text stream for progress lines; defaults to stderr so that reports
                       written to stdout stay parseable
        """
        os.makedirs(savedir, exist_ok=True)
        self.stdout = stdout
        self.savedir = savedir
        self.verbosity = max(int(verbosity), 1)
        self.stream = stream if stream is not None else sys.stderr
        self.start_time = time.time()
        self.step = 0
        self.args = args
        self.log_parameters()

    def _params(self):
        if self.args is None:
            return {}
        items = self.args.items() if isinstance(self.args, dict) else vars(self.args).items()
        return {k: v for k, v in items if v is not None}

    def log_parameters(self):
        """
        Print run parameters.
        """
        print(self._params(), file=self.stream)

    def log_metrics(self, output, step=None):
        """
        Print scalar metrics.

        :param output: (dict {str: number}) non-scalar entries are skipped
        :param step: (int) pipeline step
        """
        if step is None:
            step = self.step
        else:
            self.step = step
        if step % self.verbosity == 0:
            elapsed_time = time.time() - self.start_time
            entries = [f'step: {step}']
            for k, v in output.items():
                value = _scalar(v)
                if value is not None and (self.stdout is None or k in self.stdout):
                    entries.append(f'{k}: {value:.6g}')
            entries.append(f'eltime: {elapsed_time: .5f}')
            print('\t'.join(entries), file=self.stream)

    def log_artifacts(self, artifacts):
        """
        Stores text artifacts (JSON reports, CSV curves) under savedir.

        :param artifacts: (dict {str: str}) file name -> contents
        """
        for k, v in artifacts.items():
            with open(os.path.join(self.savedir, k), 'w', newline='') as f:
                f.write(v)

    def clean_up(self):
        pass


class MLFlowLogger(BasicLogger):
    def __init__(self, args=None, savedir='eqvidx-runs', verbosity=1, id=None, stdout=None,
                 logout=None, location='mlruns', exp='eqvidx', run='eqvidx', stream=None):
        """
        :param args: (Namespace or dict) resolved configuration, logged as run parameters
        :param savedir: Unique folder name to temporarily save artifacts
        :param verbosity: (int) Print every verbosity steps
        :param id: (str) Optional run id to resume
        :param stdout: (list of str) Metrics to print
        :param logout: (list of str) Substrings selecting the metrics logged via mlflow
        :param location: (str) mlflow tracking uri
        :param exp: (str) mlflow experiment name
        :param run: (str) mlflow run name
        """
        mlflow.set_tracking_uri(location)
        mlflow.set_experiment(exp)
        mlflow.start_run(run_name=run, run_id=id)
        super().__init__(args=args, savedir=savedir, verbosity=verbosity, stdout=stdout, stream=stream)
        self.logout = logout

    def log_parameters(self):
        """
        Log run parameters to mlflow.
        """
        mlflow.log_params({k: str(v) for k, v in self._params().items()})

    def log_metrics(self, output, step=0):
        """
        Record scalar metrics to mlflow.

        :param output: (dict {str: number})
        :param step: (int) pipeline step
        """
        super().log_metrics(output, step)
        keys = [k for k in output if self.logout is None or any(kp in k for kp in self.logout)]
        for k in keys:
            value = _scalar(output[k])
            if value is not None and np.isfinite(value):
                mlflow.log_metric(k, value, step=step)

    def log_artifacts(self, artifacts=dict()):
        """
        Stores artifacts to mlflow.

        :param artifacts: (dict {str: str})
        """
        super().log_artifacts(artifacts)
        mlflow.log_artifacts(self.savedir)

    def clean_up(self):
        """
        Remove temporary files from file system
        """
        shutil.rmtree(self.savedir, ignore_errors=True)
        mlflow.end_run()


def get_logger(args):
    """
    :param args: Namespace from the log() parser (logger, savedir, verbosity, location, exp, run)
    :return: BasicLogger, MLFlowLogger or None
    """
    kind = getattr(args, 'logger', 'stdout')
    if kind == 'none':
        return None
    common = dict(args=args, savedir=args.savedir, verbosity=args.verbosity)
    if kind == 'mlflow':
        return MLFlowLogger(location=args.location, exp=args.exp, run=args.run, **common)
    return BasicLogger(**common)
