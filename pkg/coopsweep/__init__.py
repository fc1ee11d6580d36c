# -*- encoding: utf-8 -*-
""" Entry point of CoopSweep, also contains shortcuts for all required
objects """
try:
    from .model import DdnStructure  # noqa
    from .model import FactorSpace  # noqa
    from .model import GroundTruthMmdp  # noqa
    from .model import PartialAssignment  # noqa
    from .agent import CpsAgent  # noqa
    from .agent import CpsConfig  # noqa
    from .baselines import ScqlAgent  # noqa
    from .baselines import flat_value_iteration  # noqa
    from .environments import Environment  # noqa
    from .environments import build_random_mmdp  # noqa
    from .environments import build_sysadmin  # noqa
except ImportError:  # pragma: no cover
    # Not installed or in install (not yet installed) so ignore
    pass

__version__ = '0.1.0'
