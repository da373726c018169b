def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: statistical checks over many seeds. Deselect with -m "not slow".')
