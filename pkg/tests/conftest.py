"""Pytest wiring for absltest-based tests."""

from absl import flags


def pytest_configure(config):
  del config  # Unused.
  # absltest.main() normally parses flags; under pytest nothing does, so
  # parse defaults to let TestCase.create_tempdir() read --test_tmpdir.
  if not flags.FLAGS.is_parsed():
    flags.FLAGS.mark_as_parsed()
