import json
import logging

from django.core.management.base import BaseCommand, CommandError

from laboratory.exceptions import RmtLabError
from laboratory.storage import LabJSONEncoder

logger = logging.getLogger(__name__)


class LabCommand(BaseCommand):
    """
    Base for the laboratory commands: subclasses implement ``run`` and
    laboratory errors leave the process with their exit code
    (2 usage, 3 input/parse/parameter/domain, 4 numeric).
    """

    def handle(self, *args, **options):
        try:
            return self.run(*args, **options)
        except RmtLabError as e:
            logger.error(f"{self.__module__.rsplit('.', 1)[-1]} failed: {e}")
            raise CommandError(str(e), returncode=e.exit_code)
        except Exception:
            logger.exception(f"Unexpected failure in {self.__module__}")
            raise

    def run(self, *args, **options):
        raise NotImplementedError

    def write_json(self, payload):
        self.stdout.write(json.dumps(payload, cls=LabJSONEncoder, indent=2, sort_keys=True))
