"""Dissimilarity-based sparse subset selection.

Given an M x N matrix of dissimilarities between source and target elements,
pick a few sources that encode all targets well, by solving a row-sparsity
regularized assignment program with ADMM.
"""

from ds3.admm import (NormP, Solution, SolverError, SolverSettings,
                      SolverState, objective, solve, step)
from ds3.matrix import (DissimilarityMatrix, MatrixFormatError, load_matrix,
                        normalize, save_matrix)
from ds3.outliers import (OutlierConfig, OutlierSolution, outlier_weights,
                          solve_with_outliers)
from ds3.regpath import (PartitionSpec, check_joint_partition, lambda_g,
                         lambda_max, lambda_min, medoid, sweep)
from ds3.selection import (clustering_error, extract_representatives,
                           hard_assign, soft_assign)

__version__ = "0.1.0"
