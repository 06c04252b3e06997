import importlib
import os
from unittest import mock

from django.test import SimpleTestCase


class ProductionSettingsTests(SimpleTestCase):
    def load(self, **environ):
        with mock.patch.dict(os.environ, environ):
            return importlib.reload(importlib.import_module('agentnet_lab.production'))

    def test_postgres_connections_are_not_reused(self):
        production = self.load(DB_ENGINE='postgresql', DB_NAME='ledger')
        default = production.DATABASES['default']
        self.assertEqual(default['ENGINE'], 'django.db.backends.postgresql')
        self.assertEqual(default['NAME'], 'ledger')
        self.assertEqual(default['CONN_MAX_AGE'], 0)
        self.assertFalse(hasattr(production, 'CONN_MAX_AGE'))

    def test_debug_is_off(self):
        self.assertFalse(self.load(DB_ENGINE='sqlite').DEBUG)
