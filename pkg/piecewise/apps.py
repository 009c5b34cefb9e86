from django.apps import AppConfig


class PiecewiseConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'piecewise'
    verbose_name = 'Piecewise fields and restraint checks'
