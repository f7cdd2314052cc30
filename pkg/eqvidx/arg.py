"""
This module contains an extension of the argparse.ArgumentParser class and the parent
parsers shared by the eqvidx subcommands.
ArgumentParser is extended to take advantage of grouped arguments when passing
command line arguments to functions and to abbreviate argparse's verbose method names.

Numerical flags default to None so that an unset flag leaves the configuration file
or built-in default in place.
"""

import argparse
import sys
from argparse import ArgumentParser

from eqvidx.errors import EXIT_USAGE
from eqvidx.integrators import integrators


def add(self, argname, **kwargs):
    """
    Monkey patch for argument group objects.

    :param self: Refers to instantiated object of class being patched
    :param argname: (str) Command line argument
    :param kwargs: keyword args of add_argument
    :return: argparse.Action
    """
    if argname.startswith('--'):
        argname = argname[:2], argname[2:]
    elif argname.startswith('-'):
        argname = argname[:1], argname[1:]
    else:
        argname = '', argname
    return self.add_argument(f'{argname[0]}{self.prefix}{argname[1]}', **kwargs)


argparse.ArgumentParser.add = add
argparse._ArgumentGroup.add = add


class ArgParser(ArgumentParser):
    """
    Subclass argparser for abbreviated method calls, separate namespaces for argument groups, and optional command line
    prefix so that we can reuse parser definitions. Usage errors exit with code 4.
    """
    def __init__(self, prefix='', **kwargs):
        super().__init__(**kwargs)
        self.prefix = prefix

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f'{self.prog}: error: {message}\n')

    def check_for_group(self, group_name):
        """
        :param group_name: (str) Name of the argument group
        :return: (argparse._ArgumentGroup or None)
        """
        for gp in self._action_groups:
            if gp.title == group_name:
                return gp
        return None

    def group(self, group_name, prefix=None):
        """
        Abbreviates add_argument_group. If an argument group exists by the name group_name
        it is returned, otherwise a new argument group is created and returned.

        :param group_name: (str) Name of the argument group
        :return: argparse._ArgumentGroup
        """
        gp = self.check_for_group(group_name)
        if gp is None:
            gp = self.add_argument_group(group_name)
        gp.prefix = self.prefix if prefix is None else prefix
        return gp

    def parse_arg_groups(self, argv=None):
        """
        Groups of the chosen subcommand are included alongside this parser's own.

        :return: (Namespace, dict {group title: Namespace})
        """
        args = self.parse_args(argv)
        return args, self._collect_groups(args)

    def _collect_groups(self, args):
        arg_groups = {}
        for group in self._action_groups:
            group_dict = {a.dest: getattr(args, a.dest, None) for a in group._group_actions}
            arg_groups[group.title] = argparse.Namespace(**group_dict)
        for action in self._actions:
            if isinstance(action, argparse._SubParsersAction):
                chosen = action.choices.get(getattr(args, action.dest, None))
                if isinstance(chosen, ArgParser):
                    arg_groups.update(chosen._collect_groups(args))
        return arg_groups


def numerics(prefix=''):
    """
    Command line parser for solver tolerances and mesh sizes

    :param prefix: (str) Optional prefix for command line arguments to resolve naming conflicts when multiple parsers
    are bundled as parents.
    :return: (arg.ArgParser) A command line parser
    """
    parser = ArgParser(prefix=prefix, add_help=False)
    gp = parser.group("NUMERICS")

    gp.add("--tol", type=float, default=None,
           help="Integration tolerance of the profile solves (default 1e-10).")

    gp.add("--mesh", type=int, default=None,
           help="Number of base finite elements of the spectral solves (default 400).")

    gp.add("--target_tol", type=float, default=None,
           help="Eigenvalue error estimate at which mesh refinement stops (default 1e-7).")

    gp.add("--integrator", type=str, choices=list(integrators), default=None,
           help="scipy Runge-Kutta method stepping the profile equations.")

    gp.add("--config", type=str, default=None,
           help="Flat key=value file overriding built-in defaults; flags take precedence.")

    return parser


def io(prefix=''):
    """
    Command line parser for report and curve outputs

    :param prefix: (str) Optional prefix for command line arguments.
    :return: (arg.ArgParser) A command line parser
    """
    parser = ArgParser(prefix=prefix, add_help=False)
    gp = parser.group("OUTPUT")

    gp.add("--json", type=str, default=None,
           help="Write the JSON report to this path instead of stdout.")

    gp.add("--csv", type=str, default=None,
           help="Write the profile curve as t,u1,u2,tau1,tau2,kappa CSV.")

    gp.add("--no-cache", dest=f"{prefix}no_cache", action="store_true",
           help="Neither read nor write the curve cache.")

    gp.add("--cache_dir", type=str, default=None,
           help="Curve cache directory (default $EQVIDX_CACHE or ./.eqvidx-cache).")

    return parser


def log(prefix=''):
    """
    Command line parser for logging arguments

    :param prefix: (str) Optional prefix for command line arguments to resolve naming conflicts when multiple parsers
    are bundled as parents.
    :return: (arg.ArgParser) A command line parser
    """
    parser = ArgParser(prefix=prefix, add_help=False)
    gp = parser.group("LOGGING")

    gp.add("-savedir", type=str, default=None,
           help="Where report artifacts are written before upload (default eqvidx-runs)")

    gp.add("-verbosity", type=int, default=None,
           help="How many pipeline steps in between status updates (default 1)")

    gp.add("-exp", type=str, default="eqvidx",
           help="Will group all runs under this experiment name.")

    gp.add("-location", type=str, default="mlruns",
           help="Where to write mlflow experiment tracking stuff")

    gp.add("-run", type=str, default="eqvidx",
           help="Some name to tell what the run was about.")

    gp.add("-logger", type=str, choices=["mlflow", "stdout", "none"], default=None,
           help="Logging setup to use (default stdout)")

    return parser
