from django.apps import AppConfig


class QSeriesConfig(AppConfig):
    name = "qseries"
    verbose_name = "q-Borel summation of basic hypergeometric series"
