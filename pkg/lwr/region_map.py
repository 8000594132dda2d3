"""
Classification of Riemann data (rho_l, rho_r) over a grid of [0, R]^2.
"""
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

from .riemann import CLASSICAL_LABELS, NONCLASSICAL_LABELS, classify

logger = logging.getLogger('lwr')

# PGM gray levels
GRAY = 160
WHITE = 255
BLACK = 0


@dataclass(frozen=True)
class RegionMap:
    """``labels[i][j]`` classifies the data rho_l = densities[i], rho_r = densities[j]."""
    densities: np.ndarray
    labels: tuple

    @property
    def grid(self):
        return len(self.densities)

    def counts(self):
        return dict(sorted(Counter(label for row in self.labels for label in row).items()))

    def shade(self, label):
        if label in CLASSICAL_LABELS:
            return GRAY
        if label in NONCLASSICAL_LABELS:
            return WHITE
        return BLACK

    def rows(self):
        for i, rho_l in enumerate(self.densities):
            for j, rho_r in enumerate(self.densities):
                yield float(rho_l), float(rho_r), self.labels[i][j]

    def raster(self):
        """Gray levels with rho_l along columns and rho_r decreasing down the rows."""
        image = np.empty((self.grid, self.grid), dtype=np.uint8)
        for i in range(self.grid):
            for j in range(self.grid):
                image[self.grid - 1 - j, i] = self.shade(self.labels[i][j])
        return image


def _classify_row(args):
    flux, constraint, rho_l, densities = args
    return tuple(classify(flux, constraint, rho_l, float(rho_r)) for rho_r in densities)


def region_map(flux, constraint, grid, workers=1):
    """
    Label every grid point of [0, R]^2 with its Riemann case.

    Rows (fixed rho_l) are independent and go to a process pool when
    ``workers`` > 1.

    Raises:
        ValidationError: If grid < 2
    """
    if grid < 2:
        raise ValidationError('Region map grid must be at least 2', code='grid')
    densities = np.linspace(0.0, flux.R, grid)
    jobs = [(flux, constraint, float(rho_l), densities) for rho_l in densities]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            labels = tuple(pool.map(_classify_row, jobs, chunksize=max(1, grid // (4 * workers))))
    else:
        labels = tuple(_classify_row(job) for job in jobs)
    result = RegionMap(densities=densities, labels=labels)
    logger.info(f"Region map {grid}x{grid}: {result.counts()}")
    return result
