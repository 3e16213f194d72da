# Polymatrix expected-utility and correlated-equilibrium toolkit package
