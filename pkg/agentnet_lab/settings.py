"""
Django settings for the agentnet_lab project.

The lab is driven from management commands only; there is no HTTP surface.
Every tunable below is read through python-decouple, so it can be set in the
environment or in a .env file next to manage.py.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='django-insecure-agentnet-lab-local-only')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'graph_agents',
]

MIDDLEWARE = []


# Database
# https://docs.djangoproject.com/en/4.2/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': config('SQLITE_PATH', default=str(BASE_DIR / 'db.sqlite3')),
    }
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Lab configuration

#default parallelism of seed/cell jobs; 1 keeps runs bit-reproducible
AGENTLAB_WORKERS = config('AGENTLAB_WORKERS', default=1, cast=int)
AGENTLAB_OUTPUT_DIR = config('AGENTLAB_OUTPUT_DIR', default=str(BASE_DIR / 'runs'))
AGENTLAB_DEFAULT_SEED = config('AGENTLAB_DEFAULT_SEED', default=0, cast=int)
AGENTLAB_DTYPE = config('AGENTLAB_DTYPE', default='float64')
AGENTLAB_TRAINING_STEPS = config('AGENTLAB_TRAINING_STEPS', default=10000, cast=int)
AGENTLAB_EARLY_STOP_PATIENCE = config('AGENTLAB_EARLY_STOP_PATIENCE', default=500, cast=int)
AGENTLAB_EVAL_ROLLOUTS = config('AGENTLAB_EVAL_ROLLOUTS', default=100, cast=int)
#mirror run summaries into the ExperimentRun/SeedResult/GridCell tables
AGENTLAB_PERSIST_RUNS = config('AGENTLAB_PERSIST_RUNS', default=True, cast=bool)

LOG_LEVEL = config('LOG_LEVEL', default='INFO')
LOG_DIR = Path(config('LOG_DIR', default=str(BASE_DIR / 'logs')))
LOG_DIR.mkdir(parents=True, exist_ok=True)

# Logging Configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'file': {
            'level': 'DEBUG',
            'class': 'logging.FileHandler',
            'filename': LOG_DIR / 'agentlab.log',
            'formatter': 'verbose',
        },
        'console': {
            'level': LOG_LEVEL,
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console', 'file'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console', 'file'],
            'level': 'WARNING',
            'propagate': False,
        },
        'graph_agents': {
            'handlers': ['console', 'file'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}
