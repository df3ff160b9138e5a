#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "snicpath/errors.hpp"

namespace snicpath {

struct KvWorkloadSpec {
    int n_clients = 8;
    double zipf_theta = 0.99;
    std::uint32_t key_bytes = 8;
    std::uint32_t value_bytes = 64;
    double get_fraction = 1.0;  // YCSB C
    std::uint64_t keyspace_size = 100'000'000;
    std::uint64_t soc_cache_bytes = 16ull * 1024 * 1024 * 1024;
};

struct ReplicationWorkloadSpec {
    std::uint64_t file_bytes = 2ull * 1024 * 1024 * 1024;
    std::uint64_t io_bytes = 16 * 1024;
    int n_clients = 8;
    double compression_ratio = 1.0;
    std::uint64_t chunk_bytes = 256 * 1024;
};

// Index-entry share added to every cached key/value pair.
inline constexpr std::uint64_t kCacheEntryOverheadBytes = 32;

void validate_kv_spec(const KvWorkloadSpec& spec);
void validate_replication_spec(const ReplicationWorkloadSpec& spec);

// Zipf(theta) over ranks [0, n): P(k) proportional to (k+1)^-theta.
// Rejection-inversion sampling, O(1) per draw on any keyspace size.
class ZipfGenerator {
public:
    ZipfGenerator(std::uint64_t n, double theta, std::uint64_t seed);

    std::uint64_t operator()();

    // Exact probability of rank k, for small keyspaces (test oracle support).
    static std::vector<double> exact_pmf(std::uint64_t n, double theta);

private:
    double h_integral(double x) const;
    double h(double x) const;
    double h_integral_inverse(double x) const;

    std::uint64_t n_;
    double theta_;
    double h_x1_;
    double h_n_;
    double s_;
    std::mt19937_64 rng_;
};

struct KvRequest {
    std::uint64_t key_index;
    bool is_get;
};

// Deterministic request stream: Zipf(theta) keys, op mix per get_fraction.
std::vector<KvRequest> gen_kv_requests(const KvWorkloadSpec& spec, std::uint64_t seed,
                                       std::uint64_t count);

// Sum(k^-theta) for k in [1, m]; exact below ~2M terms, Euler-Maclaurin
// above. Used for Zipf tail masses.
double generalized_harmonic(std::uint64_t m, double theta);

// Probability that a request misses the SoC value cache holding the K
// hottest entries, K = soc_cache_bytes / (entry + overhead).
double cache_fit_miss_rate(const KvWorkloadSpec& spec);

struct ReplicationWrite {
    int client;
    std::vector<std::uint64_t> chunk_bytes;  // io split at chunk granularity
};

// Per-client sequential writes of io_bytes covering file_bytes, each
// segmented at chunk_bytes. The stream is seed-independent.
std::vector<ReplicationWrite> gen_replication_stream(const ReplicationWorkloadSpec& spec,
                                                     std::uint64_t seed);

}  // namespace snicpath
