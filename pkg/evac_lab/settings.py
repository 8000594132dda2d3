"""
Django settings for the evac_lab project.

The project has no web surface: it hosts the ``lwr`` app, whose management
commands run the conservation-law laboratory and persist run records.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/6.0/ref/settings/
"""

from pathlib import Path
import os

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('SECRET_KEY', 'django-insecure-3k1v_lwr-lab-local-only-key')

DEBUG = os.environ.get('DEBUG', 'True') == 'True'

ALLOWED_HOSTS = []

# Root directory for run outputs (fronts.csv, xi.csv, reports.json, ...)
OUTPUT_ROOT = os.environ.get('NLOC_LWR_OUT', os.path.join(BASE_DIR, 'out'))

# Guardrails for the engines
NLOC_LWR_MAX_STEPS = int(os.environ.get('NLOC_LWR_MAX_STEPS', 10_000_000))
NLOC_LWR_MAX_EVENTS = int(os.environ.get('NLOC_LWR_MAX_EVENTS', 5_000_000))

# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'lwr',
]

MIDDLEWARE = []


# Database
# https://docs.djangoproject.com/en/6.0/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization
# https://docs.djangoproject.com/en/6.0/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging Configuration
LOG_DIR = os.path.join(BASE_DIR, 'logs')
os.makedirs(LOG_DIR, exist_ok=True)

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
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
        'file': {
            'class': 'logging.FileHandler',
            'filename': os.path.join(LOG_DIR, 'lwr.log'),
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console', 'file'],
        'level': 'WARNING',
    },
    'loggers': {
        'lwr': {
            'handlers': ['console', 'file'],
            'level': os.environ.get('NLOC_LWR_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'
