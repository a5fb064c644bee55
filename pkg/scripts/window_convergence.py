"""Twisted cylinder solve against the windowed strip oracle for growing windows."""
import numpy as np

from lew.hitting import twisted_hitting_matrix, windowed_strip_matrix
from lew.lattice import build_strip


def main():
    s = build_strip(6, 3)
    a, b = [(3, 0), (0, 0)], [(3, 3), (0, 3)]
    for zeta in (1, -1):
        T = twisted_hitting_matrix(s, a, b, zeta).entries
        print(f"zeta = {zeta:+d}")
        for W in range(1, 11):
            err = np.abs(T - windowed_strip_matrix(s, a, b, W, zeta).entries).max()
            print(f"  W={W:2d}  max entry error {err:.3e}")


if __name__ == "__main__":
    main()
