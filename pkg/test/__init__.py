# pylint: skip-file
