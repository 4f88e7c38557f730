# settings.py

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# The laboratory has no web surface; the key only satisfies Django's checks.
SECRET_KEY = os.environ.get('RMTLAB_SECRET_KEY', 'rmtlab-offline-key')

DEBUG = os.environ.get('RMTLAB_DEBUG', '0') == '1'

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    'laboratory.apps.LaboratoryConfig',
]

# No models: every artifact is a CSV/JSON file on disk.
DATABASES = {}

USE_TZ = True


def _env_path(name, default):
    value = os.environ.get(name)
    return Path(value).expanduser() if value else default


# Laboratory options
RMTLAB = {
    'VERSION': '1.2.0',
    'CACHE_DIR': _env_path('RMTLAB_CACHE', BASE_DIR / 'tw_cache'),
    'OUTPUT_DIR': _env_path('RMTLAB_OUTPUT', BASE_DIR / 'output'),
    'EIGEN_BACKEND': os.environ.get('RMTLAB_EIGEN_BACKEND', 'ql'),  # 'ql' or 'lapack'
    'PAINLEVE_TOL': float(os.environ.get('RMTLAB_PAINLEVE_TOL', '1e-12')),
    'GRID_STEP': 0.005,
    'X_START': 8.0,
    'X_END': -10.0,
    'CHUNK_SIZE': int(os.environ.get('RMTLAB_CHUNK_SIZE', '250')),
    # Fitted once over t in [3, 6] at n=50, beta=1; not a constant from the literature.
    'CONCENTRATION_C': 3.0,
}

LOG_DIR = _env_path('RMTLAB_LOG_DIR', BASE_DIR)

# Logging configuration

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'file': {
            'level': 'DEBUG',
            'class': 'logging.FileHandler',
            'filename': os.path.join(LOG_DIR, 'rmtlab.log'),
            'formatter': 'verbose',
            'delay': True,
        },
        'celery_file': {
            'level': 'DEBUG',
            'class': 'logging.FileHandler',
            'filename': os.path.join(LOG_DIR, 'celery.log'),  # Worker chunks log here
            'formatter': 'verbose',
            'delay': True,
        },
        'console': {
            'level': 'WARNING',
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'laboratory': {
            'handlers': ['file', 'console'],
            'level': 'DEBUG',
            'propagate': True,
        },
        'celery': {
            'handlers': ['celery_file'],
            'level': 'INFO',
            'propagate': True,
        },
        'laboratory.tasks': {
            'handlers': ['celery_file'],
            'level': 'DEBUG',
            'propagate': False,  # Prevent duplication of logs
        },
    }
}

# Celery Configuration Options
# Chunks run in-process unless a worker pool is explicitly requested.
CELERY_TASK_ALWAYS_EAGER = os.environ.get('RMTLAB_CELERY_EAGER', '1') == '1'
CELERY_TASK_EAGER_PROPAGATES = True
CELERY_BROKER_URL = os.environ.get('CELERY_BROKER_URL', 'redis://localhost:6379/0')
CELERY_RESULT_BACKEND = os.environ.get('CELERY_RESULT_BACKEND', 'redis://localhost:6379/0')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
