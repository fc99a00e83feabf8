"""Piecewise-constant refraction index reconstruction from far-field data,
with defect localization driving parameter selection and refinement."""

__version__ = "0.1.0"
