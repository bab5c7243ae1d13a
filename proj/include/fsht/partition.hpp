#ifndef FSHT_PARTITION_HPP
#define FSHT_PARTITION_HPP

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fsht/butterfly.hpp"
#include "fsht/lowrank.hpp"
#include "fsht/special_functions.hpp"

namespace fsht {

enum class Parity
{
    odd,
    even
};

const char * to_string(Parity p);

//
// One half of the ALT matrix for order m. Row i is the positive node
// x = nodes[N + i] (theta descending in i), column j is degree m + 2j + 1 (odd)
// or m + 2j (even), for degrees up to 2N - 1.
//
struct AltMatrixSpec
{
    int                                     N = 0;
    int                                     m = 0;
    Parity                                  parity = Parity::odd;
    Index                                   num_cols = 0;
    std::shared_ptr<const QuadratureRule>   quadrature;   // order 2N

    int    degree(Index j) const { return m + 2 * static_cast<int>(j) + (parity == Parity::odd ? 1 : 0); }
    double x(Index i) const { return quadrature->nodes[static_cast<std::size_t>(N + i)]; }
    double weight(Index i) const { return quadrature->weights[static_cast<std::size_t>(N + i)]; }
};

AltMatrixSpec make_alt_spec(int N, int m, Parity parity);
AltMatrixSpec make_alt_spec(int N, int m, Parity parity, std::shared_ptr<const QuadratureRule> quadrature);

//
// Upward recurrence states for one order m at the N positive nodes, kept every
// checkpoint_stride degrees. Any entry is then reached in fewer than
// checkpoint_stride steps along the exact path of the full recurrence.
//
class LegendreTable
{
public:
    static constexpr int checkpoint_stride = 32;

    LegendreTable(int N, int m, std::shared_ptr<const QuadratureRule> quadrature);

    int N() const { return N_; }
    int m() const { return m_; }
    int max_degree() const { return 2 * N_ - 1; }

    double value(Index row, int degree) const;

    // out[a] = P_{degrees[a]}(x_row), degrees ascending
    void values(Index row, std::span<const int> degrees, double * out, Index stride) const;

private:
    int                                    N_;
    int                                    m_;
    int                                    per_row_;
    std::shared_ptr<const QuadratureRule>  quadrature_;
    std::vector<detail::RecurrenceCoeffs>  coeffs_;      // index k - m
    std::vector<detail::ScaledPair>        checkpoints_; // row-major
};

class AltEntryOracle final : public EntryOracle
{
public:
    AltEntryOracle(AltMatrixSpec spec, std::shared_ptr<const LegendreTable> table);

    Index  rows() const override { return spec_.N; }
    Index  cols() const override { return spec_.num_cols; }
    double entry(Index i, Index j) const override;
    Matrix submatrix(std::span<const Index> rows, std::span<const Index> cols) const override;

    const AltMatrixSpec & spec() const { return spec_; }

private:
    AltMatrixSpec                          spec_;
    std::shared_ptr<const LegendreTable>   table_;
};

std::unique_ptr<AltEntryOracle> entry_oracle(const AltMatrixSpec & spec);

// Fractional column where the turning-point curve crosses row i; m >= 1.
double curve_column(const AltMatrixSpec & spec, Index row);

enum class BlockClass
{
    oscillatory,
    non_oscillatory,
    turning
};

const char * to_string(BlockClass c);

struct Rect
{
    Interval  rows;
    Interval  cols;

    bool  empty() const { return rows.empty() || cols.empty(); }
    Index area() const { return empty() ? 0 : rows.size() * cols.size(); }

    friend bool operator==(const Rect &, const Rect &) = default;
};

using BlockPayload = std::variant<std::monostate, ButterflyFactorization, LowRankFactor, Matrix>;

struct Block
{
    Rect                 range;
    BlockClass           cls   = BlockClass::oscillatory;
    int                  level = 0;
    std::optional<Rect>  trim;
    BlockPayload         payload;

    // retained rectangle: the trim when set, the whole block otherwise
    Rect active() const { return trim ? *trim : range; }
};

struct BlockTreeResult
{
    AltMatrixSpec       spec;
    Index               n0 = 0;
    std::vector<Block>  blocks;
    int                 levels_used = 0;
    Index               initial_band_rows = 1;           // b

    std::vector<Index>  intersecting_per_level;          // blocks meeting the curve, by level
    std::vector<Index>  turning_per_level;
};

// Initial band count round(N / num_cols), at least 1.
Index initial_bands(const AltMatrixSpec & spec);

BlockTreeResult partition(const AltMatrixSpec & spec, Index n0);

inline constexpr double default_trim_threshold = 1e-290;

//
// Shrinks a non-oscillatory or turning block to the bounding box of its entries
// with magnitude >= tau, assuming magnitudes grow toward the top-right corner
// (toward the curve). Oscillatory blocks keep the full rectangle.
//
Block trim_block(const EntryOracle & oracle, Block block, double tau = default_trim_threshold);

std::string blocks_to_json(const BlockTreeResult & result);

} // namespace fsht

#endif // FSHT_PARTITION_HPP
