"""Riccati foliations with Fuchsian and quasifuchsian holonomy.

Submodules: ``moebius`` (Moebius maps on the sphere), ``groups``
(triangle and four-orbifold groups, deformations), ``limitset``,
``suspension`` (monodromy data and path lifting), ``riccati_ode``
(equations, monodromy, homogeneous fields), ``resolution`` (blow-ups),
``leviflat``, ``currents`` and ``verify``.
"""
__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
