"""
``region-map``: the ``region_map`` command under its hyphenated name.
"""
from lwr.management.commands.region_map import Command as RegionMapCommand


class Command(RegionMapCommand):
    help = RegionMapCommand.help + ' (alias of region_map)'
