#ifndef FSHT_BENCH_HPP
#define FSHT_BENCH_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fsht/alt.hpp"
#include "fsht/oracle.hpp"

namespace fsht {

struct MetricResult
{
    double  value = 0.0;
    bool    degenerate = false;   // every sampled reference row was zero
};

// Relative l2 error of the fast half against the dense half on min(sample_size,
// rows) random rows with a nonzero reference, averaged over trials.
// Forward: rows of A c. Inverse: rows of A^T W v, i.e. coefficient rows.
MetricResult metric_eps_fwd(const AltHalf & half, const DenseAltMatrix & dense, int trials, Index sample_size, Rng & rng);
MetricResult metric_eps_inv(const AltHalf & half, const DenseAltMatrix & dense, int trials, Index sample_size, Rng & rng);

enum class MRule { zero, half, one, three_halves };

MRule       parse_m_rule(const std::string & s);
std::string to_string(MRule r);
int         m_for(MRule r, int N);   // clipped to 2N - 1

struct BenchConfig
{
    std::vector<int>     sizes{ 256, 512, 1024 };
    MRule                rule = MRule::one;
    std::vector<Parity>  parities{ Parity::odd, Parity::even };
    AltParams            params;
    bool                 auto_n0 = true;     // default_n0(N) per size instead of params.n0
    int                  dense_max_N = 4096;
    int                  trials = 1;
    Index                sample_size = 256;
    int                  app_reps = 3;
};

struct BenchRecord
{
    int     N = 0;
    int     m = 0;
    Parity  parity = Parity::odd;
    double  T_fac = 0.0;
    double  T_app = 0.0;
    std::optional<double>  T_mat;
    std::optional<double>  T_dir;
    std::optional<double>  eps_fwd;
    std::optional<double>  eps_inv;
    Index   block_count = 0;
    Index   max_rank = 0;
    Index   total_nnz = 0;
    Index   n0 = 0;
};

// Time and error measurements never share a timed region.
std::vector<BenchRecord> run_bench(const BenchConfig & cfg);

inline constexpr const char * bench_csv_header =
    "N,m,parity,T_fac,T_app,T_mat,T_dir,eps_fwd,eps_inv,block_count,max_rank,total_nnz";

void write_bench_csv(std::ostream & os, const std::vector<BenchRecord> & records);
void write_bench_json(std::ostream & os, const std::vector<BenchRecord> & records, const BenchConfig & cfg);

// Least squares slope of log y against log x.
double loglog_slope(const std::vector<double> & x, const std::vector<double> & y);

} // namespace fsht

#endif // FSHT_BENCH_HPP
