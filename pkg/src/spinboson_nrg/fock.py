"""Fermionic site conventions shared by the chain solver and the ED oracle.

A single chain site has four Fock states ordered (empty, up, down, double).
In the global Jordan-Wigner ordering, orbitals are sorted by site index and,
within a site, up precedes down; the impurity spin carries no fermion number
and sits outside the fermion string.
"""

import numpy as np

EMPTY, UP, DN, DOUBLE = 0, 1, 2, 3
LOCAL_STATES = (EMPTY, UP, DN, DOUBLE)

# per local state: electron count, charge relative to half filling, 2*Sz
N_EL = (0, 1, 1, 2)
DQ = (-1, 0, 0, 1)
DTSZ = (0, 1, -1, 0)

# f^dag_up / f^dag_dn on the 4-state site basis.  The -1 entry accounts for
# the up orbital of the same site preceding the down orbital.
FDAG_UP = np.zeros((4, 4))
FDAG_UP[UP, EMPTY] = 1.0
FDAG_UP[DOUBLE, DN] = 1.0

FDAG_DN = np.zeros((4, 4))
FDAG_DN[DN, EMPTY] = 1.0
FDAG_DN[DOUBLE, UP] = -1.0

FDAG_UP.flags.writeable = False
FDAG_DN.flags.writeable = False

# sector displacement (delta q, delta 2Sz) caused by f^dag_sigma
DELTA_UP = (1, 1)
DELTA_DN = (1, -1)

# impurity 2*Sz values
IMP_UP, IMP_DN = 1, -1
