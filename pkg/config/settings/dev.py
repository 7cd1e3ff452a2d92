from .base import *

HUEY = {
    "huey_class": "huey.MemoryHuey",
    "name": "lab",
    "immediate": env.bool("LAB_HUEY_IMMEDIATE", default=False),
    "consumer": {"workers": LAB_THREADS, "worker_type": "thread"},
}
