from pathlib import Path
import environ, os

BASE_DIR = Path(__file__).resolve().parents[2]
env = environ.Env(
    DEBUG=(bool, False),
)
environ.Env.read_env(os.path.join(BASE_DIR, ".env.example"))

SECRET_KEY = env("SECRET_KEY", default="lab-secret")
DEBUG = env.bool("DEBUG", default=True)
ALLOWED_HOSTS = []

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "huey.contrib.djhuey",
    "config",
    "experiments",
]

DATABASES = {
    "default": env.db("DATABASE_URL", default=f"sqlite:///{BASE_DIR / 'var' / 'lab.sqlite3'}")
}

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"
USE_TZ = True

# Run-level overrides; everything else comes from the run configuration file.
LAB_DEFAULT_OUTPUT_DIR = BASE_DIR / "var" / "runs"
LAB_OUTPUT_DIR = env("LAB_OUTPUT_DIR", default=None)
LAB_THREADS = env.int("LAB_THREADS", default=1)
LAB_LOG_LEVEL = env("LAB_LOG_LEVEL", default="INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(asctime)s %(levelname)s %(name)s %(message)s"},
    },
    "handlers": {
        "stderr": {
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
            "formatter": "plain",
        },
    },
    "loggers": {
        name: {"handlers": ["stderr"], "level": LAB_LOG_LEVEL, "propagate": False}
        for name in (
            "config",
            "constructions",
            "estimates",
            "experiments",
            "fields",
            "geometry",
            "material",
            "solver",
        )
    },
}
