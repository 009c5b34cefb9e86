from django.apps import AppConfig


class RandfieldConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'randfield'
    verbose_name = 'Random fields and bootstrap'
