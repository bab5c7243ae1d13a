#ifndef FSHT_BUTTERFLY_HPP
#define FSHT_BUTTERFLY_HPP

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsht/lowrank.hpp"

namespace fsht {

// Half-open index range [begin, end).
struct Interval
{
    Index  begin = 0;
    Index  end   = 0;

    Index size() const { return end - begin; }
    bool  empty() const { return end <= begin; }

    friend bool operator==(const Interval &, const Interval &) = default;
};

//
// Bisection tree over an interval. levels[l] holds the 2^l nodes of level l in
// order; node i of level l has children 2i and 2i+1 at level l+1.
//
struct DyadicTree
{
    int                                 depth = 0;
    std::vector<std::vector<Interval>>  levels;

    const Interval & node(int level, Index i) const { return levels[level][i]; }
};

struct TreePair
{
    DyadicTree  rows;
    DyadicTree  cols;
};

// Depth floor(log2(min(rows, cols) / leaf_max)), at least 0, shared by both trees.
TreePair build_trees(Interval rows, Interval cols, Index leaf_max);

// Dense tile of a block-sparse factor, placed at (row_offset, col_offset).
struct DenseBlock
{
    Index   row_offset = 0;
    Index   col_offset = 0;
    Matrix  values;
};

struct Triplet
{
    Index   row;
    Index   col;
    double  value;
};

//
// Sparse factor stored as non-overlapping dense tiles.
//
class SparseFactor
{
public:
    SparseFactor() = default;
    SparseFactor(Index rows, Index cols) : rows_(rows), cols_(cols) {}

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }

    void add_block(Index row_offset, Index col_offset, Matrix values);

    const std::vector<DenseBlock> & blocks() const { return blocks_; }

    Index                nnz() const;
    std::vector<Triplet> triplets() const;
    Matrix               dense() const;

    Matrix apply(const Eigen::Ref<const Matrix> & x) const;
    Matrix apply_transpose(const Eigen::Ref<const Matrix> & y) const;

private:
    Index                    rows_ = 0;
    Index                    cols_ = 0;
    std::vector<DenseBlock>  blocks_;
};

//
// K ~ U(0) U(1) ... U(L-h) S V(h) ... V(1) V(0), where U(0) acts on the row
// leaves and V(0) on the column leaves. factors holds the chain left to right.
//
struct ButterflyFactorization
{
    Index                      rows = 0;
    Index                      cols = 0;
    int                        levels = 0;    // L
    int                        half   = 0;    // h
    Index                      adaptive_rank = 0;
    double                     tolerance = 0.0;
    Index                      max_rank = 0;
    std::vector<SparseFactor>  factors;

    Index  nnz() const;
    Matrix dense() const;
};

// Raised when an ID in the construction still hits its rank cap after all retries.
class RankOverflowError : public std::runtime_error
{
public:
    RankOverflowError(int level, Index row_node, Index col_node);

    int    level;
    Index  row_node;
    Index  col_node;
};

ButterflyFactorization idbf_factor(const EntryOracle & K, const SamplingConfig & cfg, Index leaf_max, Rng & rng);

// X holds one input per column; a vector is a one-column matrix.
Matrix idbf_apply(const ButterflyFactorization & fac, const Eigen::Ref<const Matrix> & X);
Matrix idbf_apply_transpose(const ButterflyFactorization & fac, const Eigen::Ref<const Matrix> & Y);

// Little-endian binary container; see README for the layout.
void write_butterfly(std::ostream & os, const ButterflyFactorization & fac);
ButterflyFactorization read_butterfly(std::istream & is);

namespace io {

void   write_u32(std::ostream & os, std::uint32_t v);
void   write_i64(std::ostream & os, std::int64_t v);
void   write_f64(std::ostream & os, double v);
void   write_matrix(std::ostream & os, const Matrix & m);

std::uint32_t read_u32(std::istream & is);
std::int64_t  read_i64(std::istream & is);
double        read_f64(std::istream & is);
Matrix        read_matrix(std::istream & is);

} // namespace io

} // namespace fsht

#endif // FSHT_BUTTERFLY_HPP
