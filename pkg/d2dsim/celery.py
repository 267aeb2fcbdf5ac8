import os
from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'd2dsim.settings')

app = Celery('d2dsim')
app.config_from_object('django.conf:settings', namespace='CELERY')
app.autodiscover_tasks()
