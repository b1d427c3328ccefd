from pysturm.cli import run

run()
