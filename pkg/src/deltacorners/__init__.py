"""Spectra of -Laplace - alpha * delta_Gamma for curves with corners.

Modules
-------
geometry     curves with corners, kites, broken lines, samplings
model1d      1D point-interaction and edge-effective operators
bs_solver    boundary-element (Birman-Schwinger) bound states
fem_solver   P1 finite elements on kites and truncated boxes
sector       corner levels of the infinite broken line
asymptotics  large-coupling predictors and comparisons
cli          command-line front end (``python3 -m deltacorners``)
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .geometry import (Arc, CurveWithCorners, Kite, Polyline, broken_line,  # noqa: F401
                       build_curvilinear, build_polygon, circle, half_disk, sample)
