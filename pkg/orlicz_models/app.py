import os
import logging.config

from flask import Config

#########
# INITS #
#########

config = Config(root_path=os.path.dirname(os.path.abspath(__file__)))
config.from_pyfile('orlicz_models.conf')
config.from_envvar('ORLICZ_MODELS_SETTINGS', silent=True)


def configure_logging(level=None):
    """ Logging config shared by the library and the CLI. Logs go to stderr (and optionally a rotating file) so that
    reports written to stdout stay byte-for-byte reproducible.

    Parameters
    ----------
    level: str - optional override of LOG_LEVEL
    """
    handlers = {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'default'
        }
    }
    log_file = config.get('LOG_FILE')
    if log_file:
        handlers['file'] = {
            'class': 'logging.handlers.RotatingFileHandler',
            'formatter': 'default',
            'filename': log_file,
            'maxBytes': 10485760,
            'backupCount': 50
        }

    logging.config.dictConfig({
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {'default': {
            'format': '[%(asctime)s] %(levelname)s in %(module)s thread%(thread)d: %(message)s',
        }},
        'handlers': handlers,
        'root': {
            'level': level or config.get('LOG_LEVEL', 'WARNING'),
            'handlers': list(handlers)
        }
    })


configure_logging()
