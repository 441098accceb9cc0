__title__ = 'sdn_planner'
__description__ = 'Layered functional/security configuration optimizer for software-defined networks'
__url__ = 'https://github.com/dskrypa/sdn_planner'
__version__ = '2024.06.14'
__author__ = 'Doug Skrypa'
__author_email__ = 'dskrypa@gmail.com'
__copyright__ = 'Copyright 2024 Doug Skrypa'
