import shutil
import tempfile
from pathlib import Path

from django.conf import settings


def lab_settings(**changes):
    """A copy of settings.RMTLAB with ``changes`` applied, for override_settings(RMTLAB=...)."""
    return {**settings.RMTLAB, **changes}


# Monte Carlo classes use the LAPACK tridiagonal driver for speed; the QL
# backend is checked against it in test_numerics.
LAPACK = lab_settings(EIGEN_BACKEND='lapack')


class TempDirMixin:
    """Gives each test a fresh ``self.tmp`` directory, removed afterwards."""

    def setUp(self):
        super().setUp()
        self.tmp = Path(tempfile.mkdtemp(prefix='rmtlab-test-'))
        self.addCleanup(shutil.rmtree, self.tmp, ignore_errors=True)
