#include "fsht/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fsht {

IndexList iota_indices(Index begin, Index end)
{
    IndexList  out(static_cast<std::size_t>(std::max<Index>(end - begin, 0)));

    std::iota(out.begin(), out.end(), begin);

    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;

    return x ^ (x >> 31);
}

} // namespace

Rng::Rng(std::uint64_t seed)
    : seed_(seed), engine_(splitmix64(seed))
{
}

Rng Rng::derive(std::uint64_t stream) const
{
    return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

//
// Oracles
//

Matrix EntryOracle::submatrix(std::span<const Index> rows, std::span<const Index> cols) const
{
    Matrix  out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));

    for ( Index b = 0; b < out.cols(); ++b )
        for ( Index a = 0; a < out.rows(); ++a )
            out(a, b) = entry(rows[a], cols[b]);

    return out;
}

Matrix EntryOracle::dense() const
{
    const auto  r = iota_indices(0, rows());
    const auto  c = iota_indices(0, cols());

    return submatrix(r, c);
}

Matrix MatrixOracle::submatrix(std::span<const Index> rows, std::span<const Index> cols) const
{
    Matrix  out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));

    for ( Index b = 0; b < out.cols(); ++b )
        for ( Index a = 0; a < out.rows(); ++a )
            out(a, b) = m_(rows[a], cols[b]);

    return out;
}

SubOracle::SubOracle(const EntryOracle & parent, IndexList rows, IndexList cols)
    : parent_(parent), rows_(std::move(rows)), cols_(std::move(cols))
{
}

double SubOracle::entry(Index i, Index j) const
{
    return parent_.entry(rows_[i], cols_[j]);
}

Matrix SubOracle::submatrix(std::span<const Index> rows, std::span<const Index> cols) const
{
    IndexList  r(rows.size());
    IndexList  c(cols.size());

    for ( std::size_t a = 0; a < rows.size(); ++a )
        r[a] = rows_[rows[a]];
    for ( std::size_t b = 0; b < cols.size(); ++b )
        c[b] = cols_[cols[b]];

    return parent_.submatrix(r, c);
}

Matrix TransposedOracle::submatrix(std::span<const Index> rows, std::span<const Index> cols) const
{
    return parent_.submatrix(cols, rows).transpose();
}

//
// Sampling
//

void SamplingConfig::validate() const
{
    if ( adaptive_rank < 1 )
        throw std::invalid_argument("sampling: adaptive rank must be at least 1");
    if ( oversampling < 1 )
        throw std::invalid_argument("sampling: oversampling t must be at least 1");
    if ( !(tolerance > 0.0) )
        throw std::invalid_argument("sampling: tolerance must be positive");
    if ( rsvd_rank < 1 )
        throw std::invalid_argument("sampling: rsvd rank must be at least 1");
    if ( rsvd_oversampling < 2 )
        throw std::invalid_argument("sampling: rsvd oversampling q must be at least 2");
}

IndexList sample_indices(Index count, Index total, SamplingMode mode, Rng & rng)
{
    if ( count < 1 || total < 0 )
        throw std::invalid_argument("sample_indices: count must be at least 1");

    if ( count >= total )
        return iota_indices(0, total);

    IndexList  out;

    out.reserve(static_cast<std::size_t>(count));

    if ( mode == SamplingMode::random )
    {
        const auto  all = iota_indices(0, total);

        std::sample(all.begin(), all.end(), std::back_inserter(out), count, rng.engine());

        return out;
    }

    // Chebyshev points of the first kind mapped onto [0, total-1]; a collision
    // moves to the nearest unused index, lower side first.
    std::vector<char>  used(static_cast<std::size_t>(total), 0);
    const double       n    = static_cast<double>(count);
    const double       half = 0.5 * static_cast<double>(total - 1);

    for ( Index i = 1; i <= count; ++i )
    {
        // cos((2i-1) pi / 2n) written as a sine so the middle point is exactly 0
        const double  c   = std::sin(static_cast<double>(count - 2 * i + 1) * std::numbers::pi / (2.0 * n));
        Index         pos = static_cast<Index>(std::lround(half * (1.0 - c)));

        pos = std::clamp<Index>(pos, 0, total - 1);

        if ( used[pos] )
        {
            for ( Index d = 1; d < total; ++d )
            {
                if ( pos - d >= 0 && !used[pos - d] )
                {
                    pos -= d;
                    break;
                }
                if ( pos + d < total && !used[pos + d] )
                {
                    pos += d;
                    break;
                }
            }
        }

        used[pos] = 1;
        out.push_back(pos);
    }

    std::sort(out.begin(), out.end());

    return out;
}

//
// Pivoted QR
//

PivotedQR pivoted_qr(Matrix A, const QrOptions & opts)
{
    const Index  m    = A.rows();
    const Index  n    = A.cols();
    Index        kmax = std::min(m, n);

    if ( opts.max_rank >= 0 )
        kmax = std::min(kmax, opts.max_rank);

    PivotedQR  out;

    out.perm = iota_indices(0, n);

    Vector  norms(n);
    Vector  ref(n);
    Vector  tau = Vector::Zero(kmax);

    for ( Index j = 0; j < n; ++j )
        norms(j) = A.col(j).squaredNorm();
    ref = norms;

    double  r00  = 0.0;
    Index   rank = 0;

    for ( Index i = 0; i < kmax; ++i )
    {
        Index  p = i;

        for ( Index j = i + 1; j < n; ++j )
            if ( norms(j) > norms(p) )
                p = j;

        const double  rmax = A.col(p).tail(m - i).norm();

        if ( i == 0 )
            r00 = rmax;

        if ( opts.rel_tol > 0.0 && rmax <= opts.rel_tol * r00 )
            break;

        if ( p != i )
        {
            A.col(i).swap(A.col(p));
            std::swap(norms(i), norms(p));
            std::swap(ref(i), ref(p));
            std::swap(out.perm[i], out.perm[p]);
        }

        auto          x     = A.col(i).tail(m - i);
        const double  alpha = x(0);
        const double  xnorm = x.norm();

        if ( xnorm == 0.0 )
        {
            tau(i) = 0.0;
        }
        else
        {
            const double  beta = alpha >= 0.0 ? -xnorm : xnorm;

            tau(i) = (beta - alpha) / beta;
            x.tail(m - i - 1) /= (alpha - beta);
            x(0) = 1.0;

            if ( i + 1 < n )
            {
                auto    trailing = A.block(i, i + 1, m - i, n - i - 1);
                Vector  w        = trailing.transpose() * x;

                trailing.noalias() -= tau(i) * x * w.transpose();
            }

            x(0) = beta;
        }

        for ( Index j = i + 1; j < n; ++j )
        {
            norms(j) -= A(i, j) * A(i, j);

            if ( norms(j) <= 1e-4 * ref(j) )
            {
                norms(j) = A.col(j).tail(m - i - 1).squaredNorm();
                ref(j)   = norms(j);
            }
        }

        rank = i + 1;
    }

    out.rank = rank;

    double  remaining = 0.0;

    for ( Index j = rank; j < n; ++j )
        remaining = std::max(remaining, norms(j));

    if ( rank < std::min(m, n) && r00 > 0.0 )
        out.residual_ratio = std::sqrt(std::max(remaining, 0.0)) / r00;

    out.R = A.topRows(rank).triangularView<Eigen::Upper>();

    if ( opts.want_q )
    {
        Matrix  Q = Matrix::Identity(m, rank);

        for ( Index i = rank - 1; i >= 0; --i )
        {
            if ( tau(i) == 0.0 )
                continue;

            Vector  v(m - i);

            v(0)            = 1.0;
            v.tail(m - i - 1) = A.col(i).tail(m - i - 1);

            auto    blk = Q.bottomRows(m - i);
            Vector  w   = blk.transpose() * v;

            blk.noalias() -= tau(i) * v * w.transpose();
        }

        out.Q = std::move(Q);
    }

    return out;
}

//
// Interpolative decompositions
//

namespace {

InterpDecomp id_from_qr(const PivotedQR & qr, Index n)
{
    const Index   k = qr.rank;
    InterpDecomp  out;

    out.skeleton.assign(qr.perm.begin(), qr.perm.begin() + k);
    out.interp = Matrix::Zero(k, n);

    if ( k == 0 )
        return out;

    Matrix        R1    = qr.R.leftCols(k);
    const double  delta = 1e-15 * std::abs(R1(0, 0));

    for ( Index i = 0; i < k; ++i )
        if ( std::abs(R1(i, i)) < delta )
            R1(i, i) = R1(i, i) < 0.0 ? -delta : delta;

    const Matrix  T = R1.triangularView<Eigen::Upper>().solve(qr.R.rightCols(n - k));

    for ( Index i = 0; i < k; ++i )
        out.interp(i, qr.perm[i]) = 1.0;
    for ( Index j = k; j < n; ++j )
        out.interp.col(qr.perm[j]) = T.col(j - k);

    return out;
}

} // namespace

InterpDecomp cid(const EntryOracle & A, const SamplingConfig & cfg, Rng & rng)
{
    cfg.validate();

    const Index  m = A.rows();
    const Index  n = A.cols();

    if ( m == 0 || n == 0 )
        throw std::invalid_argument("cid: empty matrix");

    const auto  all_cols = iota_indices(0, n);
    Index       rk       = cfg.adaptive_rank;

    for ( int attempt = 0;; ++attempt )
    {
        const Index  cap  = cfg.oversampling * rk;
        const auto   rows = sample_indices(std::min(cap, m), m, cfg.mode, rng);
        const Index  ks   = std::min({ cap, static_cast<Index>(rows.size()), n });

        QrOptions  opts;

        opts.max_rank = ks;
        opts.rel_tol  = cfg.tolerance;
        opts.want_q   = false;

        const auto  qr = pivoted_qr(A.submatrix(rows, all_cols), opts);

        // certified when exact by construction (every row sampled or every
        // column kept), or when the rank stays within r_k and below the
        // sample size, so the sample oversamples it
        const bool  exact  = static_cast<Index>(rows.size()) == m || qr.rank == n;
        const bool  capped = !exact && (qr.rank > rk || qr.rank == ks);

        if ( !capped || attempt == 4 )
        {
            auto  out = id_from_qr(qr, n);

            out.side      = IdSide::column;
            out.converged = !capped;

            return out;
        }

        rk *= 2;
    }
}

InterpDecomp rid(const EntryOracle & A, const SamplingConfig & cfg, Rng & rng)
{
    const TransposedOracle  At(A);
    auto                    out = cid(At, cfg, rng);

    out.side   = IdSide::row;
    out.interp.transposeInPlace();

    return out;
}

//
// Randomized sampling SVD
//

Matrix pseudo_inverse(const Matrix & M, double rel_cutoff)
{
    if ( M.size() == 0 )
        return Matrix::Zero(M.cols(), M.rows());

    Eigen::JacobiSVD<Matrix>  svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector &            s      = svd.singularValues();
    const double              cutoff = rel_cutoff * (s.size() ? s(0) : 0.0);
    Vector                    inv    = Vector::Zero(s.size());

    for ( Index i = 0; i < s.size(); ++i )
        if ( s(i) > cutoff && s(i) > 0.0 )
            inv(i) = 1.0 / s(i);

    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

void LowRankFactor::apply_add(const Eigen::Ref<const Matrix> & x, Eigen::Ref<Matrix> out) const
{
    const Matrix  t = sigma.asDiagonal() * (V.transpose() * x);

    out.noalias() += U * t;
}

void LowRankFactor::apply_transpose_add(const Eigen::Ref<const Matrix> & y, Eigen::Ref<Matrix> out) const
{
    const Matrix  t = sigma.asDiagonal() * (U.transpose() * y);

    out.noalias() += V * t;
}

LowRankFactor rsvd(const EntryOracle &       A,
                   std::span<const Index>    row_samples,
                   std::span<const Index>    col_samples,
                   Index                     rank,
                   Rng &                     rng)
{
    const Index  m = A.rows();
    const Index  n = A.cols();

    if ( rank < 1 || rank > m || rank > n )
        throw std::invalid_argument("rsvd: rank " + std::to_string(rank) + " does not fit a "
                                    + std::to_string(m) + " x " + std::to_string(n) + " matrix");
    if ( static_cast<Index>(row_samples.size()) < rank || static_cast<Index>(col_samples.size()) < rank )
        throw std::invalid_argument("rsvd: fewer samples than the target rank");

    const auto  all_rows = iota_indices(0, m);
    const auto  all_cols = iota_indices(0, n);

    QrOptions  opts;

    opts.max_rank = rank;
    opts.want_q   = false;

    // column pivots from the sampled rows, row pivots from the sampled columns
    const auto  qr_r = pivoted_qr(A.submatrix(row_samples, all_cols), opts);
    const auto  qr_c = pivoted_qr(A.submatrix(all_rows, col_samples).transpose(), opts);

    const IndexList  pi_col(qr_r.perm.begin(), qr_r.perm.begin() + rank);
    const IndexList  pi_row(qr_c.perm.begin(), qr_c.perm.begin() + rank);

    opts.want_q = true;

    const auto  q_col = pivoted_qr(A.submatrix(all_rows, pi_col), opts).Q;
    const auto  q_row = pivoted_qr(A.submatrix(pi_row, all_cols).transpose(), opts).Q;

    const IndexList  s_row = sample_indices(rank, m, SamplingMode::random, rng);
    const IndexList  s_col = sample_indices(rank, n, SamplingMode::random, rng);

    IndexList  I(pi_row);
    IndexList  J(pi_col);

    I.insert(I.end(), s_row.begin(), s_row.end());
    J.insert(J.end(), s_col.begin(), s_col.end());

    Matrix  qc_I(static_cast<Index>(I.size()), q_col.cols());
    Matrix  qr_J(static_cast<Index>(J.size()), q_row.cols());

    for ( std::size_t a = 0; a < I.size(); ++a )
        qc_I.row(static_cast<Index>(a)) = q_col.row(I[a]);
    for ( std::size_t b = 0; b < J.size(); ++b )
        qr_J.row(static_cast<Index>(b)) = q_row.row(J[b]);

    const Matrix  A_IJ = A.submatrix(I, J);
    const Matrix  M    = pseudo_inverse(qc_I) * A_IJ * pseudo_inverse(qr_J.transpose());

    Eigen::JacobiSVD<Matrix>  svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);

    LowRankFactor  out;

    out.U     = q_col * svd.matrixU();
    out.sigma = svd.singularValues();
    out.V     = q_row * svd.matrixV();

    return out;
}

LowRankFactor rsvd(const EntryOracle & A, const SamplingConfig & cfg, Rng & rng)
{
    cfg.validate();

    const Index  m = A.rows();
    const Index  n = A.cols();
    const Index  r = std::min({ cfg.rsvd_rank, m, n });

    if ( r < 1 )
        throw std::invalid_argument("rsvd: empty matrix");

    const Index  count = r * cfg.rsvd_oversampling;
    const auto   R     = sample_indices(std::min(count, m), m, SamplingMode::random, rng);
    const auto   C     = sample_indices(std::min(count, n), n, SamplingMode::random, rng);

    return rsvd(A, R, C, r, rng);
}

} // namespace fsht
