"""
Runner
------
Command line, verification suites, corpus and report writing.
"""
