"""Protocol implementations on top of :mod:`barebones.engine`."""
