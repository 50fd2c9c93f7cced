# criterion number -> (passed, detail); shared by test_acceptance and conftest
RESULTS: dict[int, tuple[bool, str]] = {}
