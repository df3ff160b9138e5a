#include "snicpath/workloads.hpp"

#include <algorithm>
#include <cmath>

#include "snicpath/analytic.hpp"

namespace snicpath {

void validate_kv_spec(const KvWorkloadSpec& spec) {
    if (spec.n_clients < 1) fail(ErrorCode::ValidationError, "n_clients must be >= 1");
    if (spec.zipf_theta < 0) fail(ErrorCode::ValidationError, "zipf_theta must be >= 0");
    if (spec.get_fraction < 0 || spec.get_fraction > 1) {
        fail(ErrorCode::ValidationError, "get_fraction must be in [0, 1]");
    }
    if (spec.key_bytes == 0 || spec.value_bytes == 0 || spec.keyspace_size == 0) {
        fail(ErrorCode::ValidationError, "key/value/keyspace sizes must be positive");
    }
}

void validate_replication_spec(const ReplicationWorkloadSpec& spec) {
    if (spec.io_bytes == 0 || spec.file_bytes == 0 || spec.chunk_bytes == 0) {
        fail(ErrorCode::ValidationError, "file/io/chunk sizes must be positive");
    }
    if (spec.io_bytes > spec.file_bytes) {
        fail(ErrorCode::ValidationError, "io_bytes must not exceed file_bytes");
    }
    if (spec.compression_ratio < 0) {
        fail(ErrorCode::ValidationError, "compression_ratio must be >= 0");
    }
    if (spec.n_clients < 1) fail(ErrorCode::ValidationError, "n_clients must be >= 1");
}

// ---------------------------------------------------------------------------
// Rejection-inversion Zipf sampling (Hormann & Derflinger).
// ---------------------------------------------------------------------------

namespace {

// log1p(x)/x, continuous at 0.
double helper1(double x) { return std::abs(x) > 1e-8 ? std::log1p(x) / x : 1.0 - x / 2.0; }

// expm1(x)/x, continuous at 0.
double helper2(double x) { return std::abs(x) > 1e-8 ? std::expm1(x) / x : 1.0 + x / 2.0; }

// Uniform double in [0, 1); explicit bit conversion keeps the stream
// identical across standard-library implementations.
double unit_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

ZipfGenerator::ZipfGenerator(std::uint64_t n, double theta, std::uint64_t seed)
    : n_(n), theta_(theta), rng_(seed) {
    if (n == 0) fail(ErrorCode::ValidationError, "keyspace must be nonempty");
    if (theta < 0) fail(ErrorCode::ValidationError, "theta must be >= 0");
    h_x1_ = h_integral(1.5) - 1.0;
    h_n_ = h_integral(static_cast<double>(n) + 0.5);
    s_ = 2.0 - h_integral_inverse(h_integral(2.5) - h(2.0));
}

double ZipfGenerator::h_integral(double x) const {
    const double log_x = std::log(x);
    return helper2((1.0 - theta_) * log_x) * log_x;
}

double ZipfGenerator::h(double x) const { return std::exp(-theta_ * std::log(x)); }

double ZipfGenerator::h_integral_inverse(double x) const {
    double t = x * (1.0 - theta_);
    if (t < -1.0) t = -1.0;
    return std::exp(helper1(t) * x);
}

std::uint64_t ZipfGenerator::operator()() {
    while (true) {
        const double u = h_n_ + unit_double(rng_) * (h_x1_ - h_n_);
        const double x = h_integral_inverse(u);
        std::uint64_t k = static_cast<std::uint64_t>(x + 0.5);
        if (k < 1) {
            k = 1;
        } else if (k > n_) {
            k = n_;
        }
        const double kd = static_cast<double>(k);
        if (kd - x <= s_ || u >= h_integral(kd + 0.5) - h(kd)) {
            return k - 1;  // 0-based rank
        }
    }
}

std::vector<double> ZipfGenerator::exact_pmf(std::uint64_t n, double theta) {
    std::vector<double> pmf(n);
    double norm = 0.0;
    for (std::uint64_t k = 0; k < n; ++k) {
        pmf[k] = std::pow(static_cast<double>(k + 1), -theta);
        norm += pmf[k];
    }
    for (double& p : pmf) p /= norm;
    return pmf;
}

std::vector<KvRequest> gen_kv_requests(const KvWorkloadSpec& spec, std::uint64_t seed,
                                       std::uint64_t count) {
    validate_kv_spec(spec);
    if (count < 1) fail(ErrorCode::ValidationError, "count must be >= 1");
    ZipfGenerator keys(spec.keyspace_size, spec.zipf_theta, seed);
    std::mt19937_64 op_rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<KvRequest> requests;
    requests.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t key = keys();
        const bool is_get =
            spec.get_fraction >= 1.0 || unit_double(op_rng) < spec.get_fraction;
        requests.push_back({key, is_get});
    }
    return requests;
}

double generalized_harmonic(std::uint64_t m, double theta) {
    if (m == 0) return 0.0;
    constexpr std::uint64_t kExactTerms = 1ull << 21;
    const std::uint64_t exact_until = std::min(m, kExactTerms);
    // Kahan summation over the head, where the terms are largest.
    double sum = 0.0;
    double carry = 0.0;
    for (std::uint64_t k = 1; k <= exact_until; ++k) {
        const double term = std::pow(static_cast<double>(k), -theta) - carry;
        const double next = sum + term;
        carry = (next - sum) - term;
        sum = next;
    }
    if (m <= kExactTerms) return sum;
    // Euler-Maclaurin for the tail [a, m], a = exact_until + 1:
    // integral + boundary halves + first derivative correction.
    const double a = static_cast<double>(exact_until + 1);
    const double b = static_cast<double>(m);
    const double fa = std::pow(a, -theta);
    const double fb = std::pow(b, -theta);
    double integral;
    if (std::abs(theta - 1.0) < 1e-12) {
        integral = std::log(b / a);
    } else {
        integral = (std::pow(b, 1.0 - theta) - std::pow(a, 1.0 - theta)) / (1.0 - theta);
    }
    const double derivative_term =
        theta * (std::pow(a, -theta - 1.0) - std::pow(b, -theta - 1.0)) / 12.0;
    return sum + integral + (fa + fb) / 2.0 + derivative_term;
}

double cache_fit_miss_rate(const KvWorkloadSpec& spec) {
    validate_kv_spec(spec);
    const std::uint64_t entry_bytes =
        spec.key_bytes + spec.value_bytes + kCacheEntryOverheadBytes;
    const std::uint64_t cached_keys = spec.soc_cache_bytes / entry_bytes;
    if (cached_keys == 0) return 1.0;
    if (cached_keys >= spec.keyspace_size) return 0.0;
    const double hot = generalized_harmonic(cached_keys, spec.zipf_theta);
    const double total = generalized_harmonic(spec.keyspace_size, spec.zipf_theta);
    return 1.0 - hot / total;
}

std::vector<ReplicationWrite> gen_replication_stream(const ReplicationWorkloadSpec& spec,
                                                     std::uint64_t /*seed*/) {
    validate_replication_spec(spec);
    const std::uint64_t full_writes = spec.file_bytes / spec.io_bytes;
    const std::uint64_t tail = spec.file_bytes % spec.io_bytes;
    std::vector<ReplicationWrite> stream;
    stream.reserve((full_writes + (tail ? 1 : 0)) * spec.n_clients);
    for (int client = 0; client < spec.n_clients; ++client) {
        for (std::uint64_t w = 0; w < full_writes; ++w) {
            stream.push_back({client, segment_transfer(spec.io_bytes, spec.chunk_bytes)});
        }
        if (tail > 0) {
            stream.push_back({client, segment_transfer(tail, spec.chunk_bytes)});
        }
    }
    return stream;
}

}  // namespace snicpath
