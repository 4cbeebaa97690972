"""Dimer models, domino tilings and related lattice models.

Modules:

* ``graphs``: regions, planar bipartite graphs, tori, Temperleyan graphs, duals.
* ``kasteleyn`` and ``exact``: Kasteleyn matrices, exact and spectral matching counts, torus partition functions.
* ``localstats``: inverse Kasteleyn matrices, edge probabilities, exact sampling, plane and coupling functions.
* ``heights``, ``entropy`` and ``limitshape``: height functions, the local entropy function, limit shapes.
* ``ust``: Temperleyan tilings through uniform spanning trees, height covariance estimates.
* ``fk``: random-cluster partition functions, planar duality, Y-Delta moves, critical weights.
* ``isoradial``: rhombic embeddings, critical Kasteleyn weights, explicit inverse, free energy per site.
* ``render`` and ``cli``: SVG/JSON/CSV output and the ``dimerlab`` command.
"""
