#include "fsht/butterfly.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace fsht {

TreePair build_trees(Interval rows, Interval cols, Index leaf_max)
{
    if ( rows.empty() || cols.empty() )
        throw std::invalid_argument("build_trees: empty interval");
    if ( leaf_max < 1 )
        throw std::invalid_argument("build_trees: leaf_max must be at least 1");

    const Index  min_dim = std::min(rows.size(), cols.size());
    int          depth   = 0;

    while ( (leaf_max << (depth + 1)) <= min_dim )
        ++depth;

    auto  bisect = [depth](Interval root) {
        DyadicTree  t;

        t.depth = depth;
        t.levels.resize(static_cast<std::size_t>(depth) + 1);
        t.levels[0].push_back(root);

        for ( int l = 0; l < depth; ++l )
        {
            for ( const auto & iv : t.levels[l] )
            {
                const Index  mid = iv.begin + iv.size() / 2;

                t.levels[l + 1].push_back({ iv.begin, mid });
                t.levels[l + 1].push_back({ mid, iv.end });
            }
        }

        return t;
    };

    return { bisect(rows), bisect(cols) };
}

//
// SparseFactor
//

void SparseFactor::add_block(Index row_offset, Index col_offset, Matrix values)
{
    if ( row_offset < 0 || col_offset < 0 || row_offset + values.rows() > rows_ || col_offset + values.cols() > cols_ )
        throw std::invalid_argument("SparseFactor: block out of range");

    blocks_.push_back({ row_offset, col_offset, std::move(values) });
}

Index SparseFactor::nnz() const
{
    Index  n = 0;

    for ( const auto & b : blocks_ )
        n += b.values.size();

    return n;
}

std::vector<Triplet> SparseFactor::triplets() const
{
    std::vector<Triplet>  out;

    out.reserve(static_cast<std::size_t>(nnz()));

    for ( const auto & b : blocks_ )
        for ( Index j = 0; j < b.values.cols(); ++j )
            for ( Index i = 0; i < b.values.rows(); ++i )
                out.push_back({ b.row_offset + i, b.col_offset + j, b.values(i, j) });

    return out;
}

Matrix SparseFactor::dense() const
{
    Matrix  out = Matrix::Zero(rows_, cols_);

    for ( const auto & b : blocks_ )
        out.block(b.row_offset, b.col_offset, b.values.rows(), b.values.cols()) += b.values;

    return out;
}

Matrix SparseFactor::apply(const Eigen::Ref<const Matrix> & x) const
{
    if ( x.rows() != cols_ )
        throw std::invalid_argument("SparseFactor::apply: dimension mismatch");

    Matrix  y = Matrix::Zero(rows_, x.cols());

    for ( const auto & b : blocks_ )
        y.middleRows(b.row_offset, b.values.rows()).noalias() += b.values * x.middleRows(b.col_offset, b.values.cols());

    return y;
}

Matrix SparseFactor::apply_transpose(const Eigen::Ref<const Matrix> & y) const
{
    if ( y.rows() != rows_ )
        throw std::invalid_argument("SparseFactor::apply_transpose: dimension mismatch");

    Matrix  x = Matrix::Zero(cols_, y.cols());

    for ( const auto & b : blocks_ )
        x.middleRows(b.col_offset, b.values.cols()).noalias()
            += b.values.transpose() * y.middleRows(b.row_offset, b.values.rows());

    return x;
}

//
// Factorization
//

Index ButterflyFactorization::nnz() const
{
    Index  n = 0;

    for ( const auto & f : factors )
        n += f.nnz();

    return n;
}

Matrix ButterflyFactorization::dense() const
{
    const Matrix  I = Matrix::Identity(cols, cols);

    return idbf_apply(*this, I);
}

RankOverflowError::RankOverflowError(int level_, Index row_node_, Index col_node_)
    : std::runtime_error("butterfly: rank cap exceeded at level " + std::to_string(level_) + ", row node "
                         + std::to_string(row_node_) + ", column node " + std::to_string(col_node_)),
      level(level_), row_node(row_node_), col_node(col_node_)
{
}

namespace {

IndexList interval_indices(const Interval & iv)
{
    return iota_indices(iv.begin, iv.end);
}

std::vector<Index> prefix_offsets(const std::vector<IndexList> & skel)
{
    std::vector<Index>  off(skel.size() + 1, 0);

    for ( std::size_t i = 0; i < skel.size(); ++i )
        off[i + 1] = off[i] + static_cast<Index>(skel[i].size());

    return off;
}

IndexList concat(const IndexList & a, const IndexList & b)
{
    IndexList  out(a);

    out.insert(out.end(), b.begin(), b.end());

    return out;
}

} // namespace

ButterflyFactorization idbf_factor(const EntryOracle & K, const SamplingConfig & cfg, Index leaf_max, Rng & rng)
{
    cfg.validate();

    const Index  m = K.rows();
    const Index  n = K.cols();

    if ( m == 0 || n == 0 )
        throw std::invalid_argument("idbf_factor: empty matrix");

    const auto  trees = build_trees({ 0, m }, { 0, n }, leaf_max);
    const int   L     = trees.rows.depth;

    ButterflyFactorization  fac;

    fac.rows          = m;
    fac.cols          = n;
    fac.levels        = L;
    fac.adaptive_rank = cfg.adaptive_rank;
    fac.tolerance     = cfg.tolerance;

    if ( L == 0 )
    {
        SparseFactor  S(m, n);

        S.add_block(0, 0, K.dense());
        fac.half = 0;
        fac.factors.push_back(std::move(S));

        return fac;
    }

    const int      h      = (L + 1) / 2;
    std::uint64_t  stream = 0;

    // column sweep: stage s pairs row level s with column level L-s, a-major
    std::vector<SparseFactor>  v_factors;
    std::vector<IndexList>     col_skel;

    for ( int s = 0; s <= h; ++s )
    {
        const Index  na = Index(1) << s;
        const Index  nb = Index(1) << (L - s);

        std::vector<IndexList>     skel(static_cast<std::size_t>(na * nb));
        std::vector<DenseBlock>    pending;
        const std::vector<Index>   prev_off = prefix_offsets(col_skel);

        for ( Index a = 0; a < na; ++a )
        {
            const IndexList  rows = interval_indices(trees.rows.node(s, a));

            for ( Index b = 0; b < nb; ++b )
            {
                IndexList  cand;
                Index      cand_off;

                if ( s == 0 )
                {
                    cand     = interval_indices(trees.cols.node(L, b));
                    cand_off = trees.cols.node(L, b).begin;
                }
                else
                {
                    const Index  p = (a / 2) * (2 * nb) + 2 * b;

                    cand     = concat(col_skel[p], col_skel[p + 1]);
                    cand_off = prev_off[p];
                }

                Rng  r = rng.derive(stream++);

                if ( cand.empty() )
                {
                    pending.push_back({ 0, cand_off, Matrix() });
                    continue;
                }

                const SubOracle     sub(K, rows, cand);
                const InterpDecomp  id = cid(sub, cfg, r);

                if ( !id.converged )
                    throw RankOverflowError(s, a, b);

                auto &  q = skel[a * nb + b];

                for ( Index i : id.skeleton )
                    q.push_back(cand[i]);

                fac.max_rank = std::max(fac.max_rank, id.rank());
                pending.push_back({ 0, cand_off, id.interp });
            }
        }

        const std::vector<Index>  off = prefix_offsets(skel);
        SparseFactor              V(off.back(), s == 0 ? n : prev_off.back());

        for ( std::size_t i = 0; i < pending.size(); ++i )
            if ( pending[i].values.size() > 0 )
                V.add_block(off[i], pending[i].col_offset, std::move(pending[i].values));

        v_factors.push_back(std::move(V));
        col_skel = std::move(skel);
    }

    // row sweep: stage s pairs row level L-s with column level s, b-major
    std::vector<SparseFactor>  u_factors;
    std::vector<IndexList>     row_skel;

    for ( int s = 0; s <= L - h; ++s )
    {
        const Index  na = Index(1) << (L - s);
        const Index  nb = Index(1) << s;

        std::vector<IndexList>     skel(static_cast<std::size_t>(na * nb));
        std::vector<DenseBlock>    pending;
        const std::vector<Index>   prev_off = prefix_offsets(row_skel);

        for ( Index b = 0; b < nb; ++b )
        {
            const IndexList  cols = interval_indices(trees.cols.node(s, b));

            for ( Index a = 0; a < na; ++a )
            {
                IndexList  cand;
                Index      cand_off;

                if ( s == 0 )
                {
                    cand     = interval_indices(trees.rows.node(L, a));
                    cand_off = trees.rows.node(L, a).begin;
                }
                else
                {
                    const Index  p = (b / 2) * (2 * na) + 2 * a;

                    cand     = concat(row_skel[p], row_skel[p + 1]);
                    cand_off = prev_off[p];
                }

                Rng  r = rng.derive(stream++);

                if ( cand.empty() )
                {
                    pending.push_back({ cand_off, 0, Matrix() });
                    continue;
                }

                const SubOracle     sub(K, cand, cols);
                const InterpDecomp  id = rid(sub, cfg, r);

                if ( !id.converged )
                    throw RankOverflowError(L - s, a, b);

                auto &  p = skel[b * na + a];

                for ( Index i : id.skeleton )
                    p.push_back(cand[i]);

                fac.max_rank = std::max(fac.max_rank, id.rank());
                pending.push_back({ cand_off, 0, id.interp });
            }
        }

        const std::vector<Index>  off = prefix_offsets(skel);
        SparseFactor              U(s == 0 ? m : prev_off.back(), off.back());

        for ( std::size_t i = 0; i < pending.size(); ++i )
            if ( pending[i].values.size() > 0 )
                U.add_block(pending[i].row_offset, off[i], std::move(pending[i].values));

        u_factors.push_back(std::move(U));
        row_skel = std::move(skel);
    }

    // middle level: row level h, column level L-h
    {
        const Index               na      = Index(1) << h;
        const Index               nb      = Index(1) << (L - h);
        const std::vector<Index>  row_off = prefix_offsets(row_skel);
        const std::vector<Index>  col_off = prefix_offsets(col_skel);
        SparseFactor              S(row_off.back(), col_off.back());

        for ( Index a = 0; a < na; ++a )
        {
            for ( Index b = 0; b < nb; ++b )
            {
                const auto &  p = row_skel[b * na + a];
                const auto &  q = col_skel[a * nb + b];

                if ( p.empty() || q.empty() )
                    continue;

                S.add_block(row_off[b * na + a], col_off[a * nb + b], K.submatrix(p, q));
            }
        }

        fac.half = h;

        for ( auto & U : u_factors )
            fac.factors.push_back(std::move(U));

        fac.factors.push_back(std::move(S));

        for ( auto it = v_factors.rbegin(); it != v_factors.rend(); ++it )
            fac.factors.push_back(std::move(*it));
    }

    return fac;
}

Matrix idbf_apply(const ButterflyFactorization & fac, const Eigen::Ref<const Matrix> & X)
{
    if ( X.rows() != fac.cols )
        throw std::invalid_argument("idbf_apply: dimension mismatch");

    Matrix  y = X;

    for ( auto it = fac.factors.rbegin(); it != fac.factors.rend(); ++it )
        y = it->apply(y);

    return y;
}

Matrix idbf_apply_transpose(const ButterflyFactorization & fac, const Eigen::Ref<const Matrix> & Y)
{
    if ( Y.rows() != fac.rows )
        throw std::invalid_argument("idbf_apply_transpose: dimension mismatch");

    Matrix  x = Y;

    for ( const auto & f : fac.factors )
        x = f.apply_transpose(x);

    return x;
}

//
// Binary IO
//

namespace io {

namespace {

template <typename T>
void write_le(std::ostream & os, T v)
{
    unsigned char  buf[sizeof(T)];

    for ( std::size_t i = 0; i < sizeof(T); ++i )
        buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);

    os.write(reinterpret_cast<const char *>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream & is)
{
    unsigned char  buf[sizeof(T)];

    if ( !is.read(reinterpret_cast<char *>(buf), sizeof(T)) )
        throw std::runtime_error("unexpected end of stream");

    T  v = 0;

    for ( std::size_t i = 0; i < sizeof(T); ++i )
        v |= static_cast<T>(buf[i]) << (8 * i);

    return v;
}

} // namespace

void write_u32(std::ostream & os, std::uint32_t v) { write_le(os, v); }
void write_i64(std::ostream & os, std::int64_t v) { write_le(os, static_cast<std::uint64_t>(v)); }
void write_f64(std::ostream & os, double v) { write_le(os, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t read_u32(std::istream & is) { return read_le<std::uint32_t>(is); }
std::int64_t  read_i64(std::istream & is) { return static_cast<std::int64_t>(read_le<std::uint64_t>(is)); }
double        read_f64(std::istream & is) { return std::bit_cast<double>(read_le<std::uint64_t>(is)); }

void write_matrix(std::ostream & os, const Matrix & m)
{
    write_i64(os, m.rows());
    write_i64(os, m.cols());

    for ( Index j = 0; j < m.cols(); ++j )
        for ( Index i = 0; i < m.rows(); ++i )
            write_f64(os, m(i, j));
}

Matrix read_matrix(std::istream & is)
{
    const auto  r = read_i64(is);
    const auto  c = read_i64(is);

    if ( r < 0 || c < 0 || (r > 0 && c > (std::int64_t(1) << 40) / r) )
        throw std::runtime_error("matrix header out of range");

    Matrix  m(r, c);

    for ( Index j = 0; j < c; ++j )
        for ( Index i = 0; i < r; ++i )
            m(i, j) = read_f64(is);

    return m;
}

} // namespace io

namespace {

constexpr char           butterfly_magic[8] = { 'F', 'S', 'H', 'T', 'B', 'F', 'L', 'Y' };
constexpr std::uint32_t  butterfly_version  = 1;

} // namespace

void write_butterfly(std::ostream & os, const ButterflyFactorization & fac)
{
    os.write(butterfly_magic, sizeof(butterfly_magic));
    io::write_u32(os, butterfly_version);
    io::write_i64(os, fac.rows);
    io::write_i64(os, fac.cols);
    io::write_u32(os, static_cast<std::uint32_t>(fac.levels));
    io::write_u32(os, static_cast<std::uint32_t>(fac.half));
    io::write_i64(os, fac.adaptive_rank);
    io::write_f64(os, fac.tolerance);
    io::write_i64(os, fac.max_rank);
    io::write_u32(os, static_cast<std::uint32_t>(fac.factors.size()));

    for ( const auto & f : fac.factors )
    {
        io::write_i64(os, f.rows());
        io::write_i64(os, f.cols());
        io::write_u32(os, static_cast<std::uint32_t>(f.blocks().size()));

        for ( const auto & b : f.blocks() )
        {
            io::write_i64(os, b.row_offset);
            io::write_i64(os, b.col_offset);
            io::write_matrix(os, b.values);
        }
    }
}

ButterflyFactorization read_butterfly(std::istream & is)
{
    char  magic[8];

    if ( !is.read(magic, sizeof(magic)) || std::memcmp(magic, butterfly_magic, sizeof(magic)) != 0 )
        throw std::runtime_error("read_butterfly: bad magic");
    if ( io::read_u32(is) != butterfly_version )
        throw std::runtime_error("read_butterfly: unsupported version");

    ButterflyFactorization  fac;

    fac.rows          = io::read_i64(is);
    fac.cols          = io::read_i64(is);
    fac.levels        = static_cast<int>(io::read_u32(is));
    fac.half          = static_cast<int>(io::read_u32(is));
    fac.adaptive_rank = io::read_i64(is);
    fac.tolerance     = io::read_f64(is);
    fac.max_rank      = io::read_i64(is);

    const auto  nf = io::read_u32(is);

    for ( std::uint32_t i = 0; i < nf; ++i )
    {
        const auto    r  = io::read_i64(is);
        const auto    c  = io::read_i64(is);
        const auto    nb = io::read_u32(is);
        SparseFactor  f(r, c);

        for ( std::uint32_t k = 0; k < nb; ++k )
        {
            const auto  ro = io::read_i64(is);
            const auto  co = io::read_i64(is);

            f.add_block(ro, co, io::read_matrix(is));
        }

        fac.factors.push_back(std::move(f));
    }

    return fac;
}

} // namespace fsht
