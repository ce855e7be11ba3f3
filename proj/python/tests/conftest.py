import lobsurv


def pytest_report_header(config):
    return f"lobsurv module: {lobsurv.__file__}"
