#ifndef FSHT_ORACLE_HPP
#define FSHT_ORACLE_HPP

#include <complex>
#include <vector>

#include "fsht/partition.hpp"

namespace fsht {

//
// Naive references. Nothing here samples or compresses.
//

constexpr int dense_alt_max_N = 8192;
constexpr int dense_sht_max_N = 128;

struct DenseAltMatrix
{
    AltMatrixSpec  spec;
    Matrix         data;          // N x num_cols
    double         seconds = 0.0; // materialization wall time
};

// Throws std::length_error above dense_alt_max_N unless allow_large is set.
DenseAltMatrix dense_alt_build(const AltMatrixSpec & spec, bool allow_large = false);

// Plain loops, row by row, no BLAS.
Vector dense_matvec(const Matrix & A, const Vector & v);
Vector dense_matvec_transpose(const Matrix & A, const Vector & v);

// Full 2N x (2N - m) ALT matrix, one recurrence per node, rows by ascending node.
Matrix dense_alt_full(int N, int m, bool allow_large = false);

using ComplexMatrix = Eigen::MatrixXcd;

// Coefficients are indexed coeffs[m + 2N - 1][k - |m|]; grid rows are nodes in
// ascending order, columns phi_j = 2 pi (j + 1/2) / (4N - 1).
using CoeffTable = std::vector<Eigen::VectorXcd>;

ComplexMatrix dense_sht_forward(int N, const CoeffTable & coeffs);
CoeffTable    dense_sht_inverse(int N, const ComplexMatrix & values);

} // namespace fsht

#endif // FSHT_ORACLE_HPP
