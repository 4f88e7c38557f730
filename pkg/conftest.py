import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'rmtlab.settings')
django.setup()
