"""VLM hard-case detection harness: rank metrics, Monte Carlo baselines,
prompt assembly, response parsing, and training-subset selection."""

from hardcase._core import *  # noqa: F401,F403
from hardcase._core import __doc__  # noqa: F401
