"""
Django settings for excursion_regions project.

The project has no HTTP surface: apps are driven through management
commands (see cli/management/commands). Environment-dependent values are
read with python-decouple.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path
import os

from decouple import config
import dj_database_url

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-excursion-regions-local-key')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.auth',
    'django.contrib.contenttypes',

    # Third-party apps
    'rest_framework',

    # apps
    'core.apps.CoreConfig',
    'domain.apps.DomainConfig',
    'piecewise.apps.PiecewiseConfig',
    'randfield.apps.RandfieldConfig',
    'regions.apps.RegionsConfig',
    'experiments.apps.ExperimentsConfig',
    'cli.apps.CliConfig',
]

MIDDLEWARE = []


# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}
if 'DATABASE_URL' in os.environ:
    DATABASES = {
        'default': dj_database_url.config(
            conn_max_age=600,
            conn_health_checks=True,
        )
    }


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

# Default primary key field type
# https://docs.djangoproject.com/en/5.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Run defaults
EXCURSION_OUTPUT_DIR = config('EXCURSION_OUTPUT_DIR', default=str(BASE_DIR / 'runs'))
EXCURSION_WORKERS = config('EXCURSION_WORKERS', default=1, cast=int)
EXCURSION_BOOTSTRAP_B = config('EXCURSION_BOOTSTRAP_B', default=1000, cast=int)
EXCURSION_ETA_C = config('EXCURSION_ETA_C', default=1.0, cast=float)
EXCURSION_LOG_LEVEL = config('EXCURSION_LOG_LEVEL', default='INFO')


# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': EXCURSION_LOG_LEVEL,
            'propagate': False,
        }
        for app in ('core', 'domain', 'piecewise', 'randfield', 'regions', 'experiments', 'cli')
    },
}
