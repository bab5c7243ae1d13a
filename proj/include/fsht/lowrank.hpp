#ifndef FSHT_LOWRANK_HPP
#define FSHT_LOWRANK_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fsht {

using Index     = Eigen::Index;
using Matrix    = Eigen::MatrixXd;
using Vector    = Eigen::VectorXd;
using IndexList = std::vector<Index>;

IndexList iota_indices(Index begin, Index end);

//
// Random number source. Every random choice in a build flows from one seed;
// derive() gives statistically independent child streams so that distinct
// decompositions can run in any order (or in parallel) with identical output.
//
class Rng
{
public:
    explicit Rng(std::uint64_t seed = 0);

    Rng derive(std::uint64_t stream) const;

    std::mt19937_64 & engine() { return engine_; }
    std::uint64_t     seed() const { return seed_; }

private:
    std::uint64_t    seed_;
    std::mt19937_64  engine_;
};

//
// Matrix accessed entry by entry. Implementations override submatrix() when a
// batched evaluation is cheaper than repeated entry() calls.
//
class EntryOracle
{
public:
    virtual ~EntryOracle() = default;

    virtual Index  rows() const = 0;
    virtual Index  cols() const = 0;
    virtual double entry(Index i, Index j) const = 0;

    // out(a, b) = entry(rows[a], cols[b])
    virtual Matrix submatrix(std::span<const Index> rows, std::span<const Index> cols) const;

    Matrix dense() const;
};

class MatrixOracle final : public EntryOracle
{
public:
    explicit MatrixOracle(Matrix m) : m_(std::move(m)) {}

    Index  rows() const override { return m_.rows(); }
    Index  cols() const override { return m_.cols(); }
    double entry(Index i, Index j) const override { return m_(i, j); }
    Matrix submatrix(std::span<const Index> rows, std::span<const Index> cols) const override;

    const Matrix & matrix() const { return m_; }

private:
    Matrix  m_;
};

class FunctionOracle final : public EntryOracle
{
public:
    using entry_fn = std::function<double(Index, Index)>;

    FunctionOracle(Index rows, Index cols, entry_fn fn)
        : rows_(rows), cols_(cols), fn_(std::move(fn)) {}

    Index  rows() const override { return rows_; }
    Index  cols() const override { return cols_; }
    double entry(Index i, Index j) const override { return fn_(i, j); }

private:
    Index     rows_;
    Index     cols_;
    entry_fn  fn_;
};

// Restriction of a parent oracle to given row and column index lists.
class SubOracle final : public EntryOracle
{
public:
    SubOracle(const EntryOracle & parent, IndexList rows, IndexList cols);

    Index  rows() const override { return static_cast<Index>(rows_.size()); }
    Index  cols() const override { return static_cast<Index>(cols_.size()); }
    double entry(Index i, Index j) const override;
    Matrix submatrix(std::span<const Index> rows, std::span<const Index> cols) const override;

private:
    const EntryOracle &  parent_;
    IndexList            rows_;
    IndexList            cols_;
};

class TransposedOracle final : public EntryOracle
{
public:
    explicit TransposedOracle(const EntryOracle & parent) : parent_(parent) {}

    Index  rows() const override { return parent_.cols(); }
    Index  cols() const override { return parent_.rows(); }
    double entry(Index i, Index j) const override { return parent_.entry(j, i); }
    Matrix submatrix(std::span<const Index> rows, std::span<const Index> cols) const override;

private:
    const EntryOracle &  parent_;
};

enum class SamplingMode
{
    mock_chebyshev,
    random
};

struct SamplingConfig
{
    SamplingMode   mode              = SamplingMode::mock_chebyshev;
    Index          adaptive_rank     = 150;     // r_k
    Index          oversampling      = 2;       // t
    double         tolerance         = 1e-10;   // eps
    Index          rsvd_rank         = 30;      // r
    Index          rsvd_oversampling = 2;       // q
    std::uint64_t  rng_seed          = 0;

    void validate() const;
};

enum class IdSide
{
    column,
    row
};

//
// Column side: A ~ A(:, skeleton) * interp, interp is k x n.
// Row side:    A ~ interp * A(skeleton, :), interp is m x k.
//
struct InterpDecomp
{
    IdSide     side = IdSide::column;
    IndexList  skeleton;
    Matrix     interp;
    bool       converged = true;   // false if the rank cap was hit after all retries

    Index rank() const { return static_cast<Index>(skeleton.size()); }
};

// A ~ U diag(sigma) V^T
struct LowRankFactor
{
    Matrix  U;
    Vector  sigma;
    Matrix  V;

    Index rank() const { return sigma.size(); }

    // out += A x and out += A^T y, for blocks of column vectors
    void apply_add(const Eigen::Ref<const Matrix> & x, Eigen::Ref<Matrix> out) const;
    void apply_transpose_add(const Eigen::Ref<const Matrix> & y, Eigen::Ref<Matrix> out) const;
};

struct PivotedQR
{
    IndexList  perm;          // M(:, perm) ~ Q R
    Matrix     Q;             // m x rank, empty unless requested
    Matrix     R;             // rank x n, upper trapezoidal
    Index      rank = 0;
    double     residual_ratio = 0.0;   // largest remaining column norm over |R(0,0)|
};

struct QrOptions
{
    Index   max_rank = -1;     // < 0: min(m, n)
    double  rel_tol  = 0.0;    // stop once |R(k,k)| <= rel_tol |R(0,0)|; 0 disables
    bool    want_q   = true;
};

// Householder QR with column pivoting.
PivotedQR pivoted_qr(Matrix M, const QrOptions & opts = {});

IndexList sample_indices(Index count, Index total, SamplingMode mode, Rng & rng);

InterpDecomp cid(const EntryOracle & A, const SamplingConfig & cfg, Rng & rng);
InterpDecomp rid(const EntryOracle & A, const SamplingConfig & cfg, Rng & rng);

Matrix pseudo_inverse(const Matrix & M, double rel_cutoff = 1e-13);

// Randomized sampling SVD of rank r from row samples R and column samples C.
LowRankFactor rsvd(const EntryOracle &       A,
                   std::span<const Index>    row_samples,
                   std::span<const Index>    col_samples,
                   Index                     rank,
                   Rng &                     rng);

// Same, drawing r*q uniform row and column samples from rng.
LowRankFactor rsvd(const EntryOracle & A, const SamplingConfig & cfg, Rng & rng);

} // namespace fsht

#endif // FSHT_LOWRANK_HPP
