from django.apps import AppConfig


class LwrConfig(AppConfig):
    name = 'lwr'
    verbose_name = 'Constrained LWR laboratory'
