__author__ = "latticewalk developers"
__copyright__ = "Copyright, latticewalk developers"
__credits__ = ["latticewalk developers"]
__license__ = "MIT"
__maintainer__ = "latticewalk developers"
__email__ = ""
__status__ = "BETA"
__version__ = "0.1.0"
