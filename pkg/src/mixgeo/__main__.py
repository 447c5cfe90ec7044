from mixgeo.cli import main

main()
