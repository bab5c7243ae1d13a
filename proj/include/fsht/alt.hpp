#ifndef FSHT_ALT_HPP
#define FSHT_ALT_HPP

#include <complex>
#include <iosfwd>
#include <memory>
#include <vector>

#include "fsht/partition.hpp"

namespace fsht {

using Complex        = std::complex<double>;
using ComplexVector  = Eigen::VectorXcd;

enum class PlanMode
{
    compressed,   // butterfly / low-rank / dense by block class
    dense         // one dense block per half, no partitioning (reference rig)
};

struct AltParams
{
    SamplingConfig  sampling;
    Index           n0        = 512;
    Index           leaf_max  = 0;        // 0: adaptive_rank / 2
    double          trim_tau  = default_trim_threshold;
    bool            parallel  = false;
    PlanMode        mode      = PlanMode::compressed;

    Index effective_leaf_max() const;
    void  validate() const;
};

// 512 from N >= 1024 upward, max(32, N/8) below so small sizes still partition.
Index default_n0(int N);

struct BlockStats
{
    Rect        range;
    Rect        active;
    BlockClass  cls = BlockClass::oscillatory;
    Index       rank = 0;
    Index       nnz  = 0;
    double      seconds = 0.0;
};

struct AltHalf
{
    AltMatrixSpec            spec;
    std::vector<Block>       blocks;        // retained blocks with payloads
    std::vector<BlockStats>  stats;         // one per partition block, dropped ones included
    Index                    dropped = 0;
    Index                    partition_blocks = 0;
    double                   seconds = 0.0;         // wall time to partition, trim and compress
};

struct AltPlan
{
    int        N = 0;
    int        m = 0;
    AltParams  params;
    AltHalf    odd;
    AltHalf    even;
    double     build_seconds = 0.0;
    double     table_seconds = 0.0;   // shared recurrence checkpoints

    std::shared_ptr<const QuadratureRule> quadrature;

    Index coeff_length() const { return 2 * N - m; }
};

AltPlan plan_alt(int N, int m, const AltParams & params, std::shared_ptr<const QuadratureRule> quadrature = nullptr);

// Real batches: coefficients (2N - m) x c to grid values 2N x c and back.
Matrix alt_forward(const AltPlan & plan, const Eigen::Ref<const Matrix> & coeffs);
Matrix alt_inverse(const AltPlan & plan, const Eigen::Ref<const Matrix> & values);

// Transposed forward map without quadrature weights, A^T v.
Matrix alt_adjoint(const AltPlan & plan, const Eigen::Ref<const Matrix> & values);

ComplexVector alt_forward_complex(const AltPlan & plan, const ComplexVector & coeffs);
ComplexVector alt_inverse_complex(const AltPlan & plan, const ComplexVector & values);

// One half applied to a block of columns: y = A_half x and x = A_half^T y.
Matrix apply_half(const AltHalf & half, const Eigen::Ref<const Matrix> & x);
Matrix apply_half_transpose(const AltHalf & half, const Eigen::Ref<const Matrix> & y);

struct AltDiagnostics
{
    Index   max_rank = 0;
    Index   total_nnz = 0;
    Index   block_count = 0;            // partition blocks, both halves
    Index   oscillatory = 0;
    Index   non_oscillatory = 0;
    Index   turning = 0;
    Index   dropped = 0;
    double  build_seconds = 0.0;
};

AltDiagnostics plan_diagnostics(const AltPlan & plan);

// Median wall time of reps forward applications on a random vector.
double time_alt_forward(const AltPlan & plan, int reps, std::uint64_t seed);

// Versioned little-endian container; reload reproduces applies bitwise.
void    write_alt_plan(std::ostream & os, const AltPlan & plan);
AltPlan read_alt_plan(std::istream & is);

} // namespace fsht

#endif // FSHT_ALT_HPP
