#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "snicpath/workloads.hpp"

using namespace snicpath;

namespace {

// One-sample chi-square p-value via the Wilson-Hilferty normal approximation.
double chi_square_p_value(double statistic, double dof) {
    const double t = std::cbrt(statistic / dof);
    const double mu = 1.0 - 2.0 / (9.0 * dof);
    const double sigma = std::sqrt(2.0 / (9.0 * dof));
    const double z = (t - mu) / sigma;
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

double zipf_chi_square_p(std::uint64_t keyspace, double theta, std::uint64_t draws,
                         std::uint64_t seed) {
    ZipfGenerator gen(keyspace, theta, seed);
    std::vector<std::uint64_t> counts(keyspace, 0);
    for (std::uint64_t i = 0; i < draws; ++i) counts[gen()]++;
    const std::vector<double> pmf = ZipfGenerator::exact_pmf(keyspace, theta);
    double statistic = 0.0;
    for (std::uint64_t k = 0; k < keyspace; ++k) {
        const double expected = pmf[k] * static_cast<double>(draws);
        const double diff = static_cast<double>(counts[k]) - expected;
        statistic += diff * diff / expected;
    }
    return chi_square_p_value(statistic, static_cast<double>(keyspace - 1));
}

}  // namespace

TEST_CASE("zipf(0) is uniform within binomial noise") {
    const std::uint64_t keyspace = 100;
    const std::uint64_t draws = 1'000'000;
    ZipfGenerator gen(keyspace, 0.0, 99);
    std::vector<std::uint64_t> counts(keyspace, 0);
    for (std::uint64_t i = 0; i < draws; ++i) counts[gen()]++;
    const double expected = static_cast<double>(draws) / keyspace;
    const double sigma = std::sqrt(expected * (1.0 - 1.0 / keyspace));
    for (std::uint64_t k = 0; k < keyspace; ++k) {
        CHECK(std::abs(static_cast<double>(counts[k]) - expected) <= 5.0 * sigma);
    }
}

TEST_CASE("zipf rank-1 beats rank-2 at theta 0.99") {
    KvWorkloadSpec spec;
    spec.keyspace_size = 1'000'000;
    const auto requests = gen_kv_requests(spec, 7, 1'000'000);
    std::uint64_t rank1 = 0, rank2 = 0;
    for (const KvRequest& req : requests) {
        if (req.key_index == 0) ++rank1;
        if (req.key_index == 1) ++rank2;
        CHECK(req.is_get);
    }
    CHECK(rank1 > rank2);
}

TEST_CASE("request streams are deterministic in (spec, seed)") {
    KvWorkloadSpec spec;
    spec.keyspace_size = 10'000;
    spec.get_fraction = 0.7;
    const auto a = gen_kv_requests(spec, 1234, 20'000);
    const auto b = gen_kv_requests(spec, 1234, 20'000);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].key_index == b[i].key_index);
        CHECK(a[i].is_get == b[i].is_get);
    }
    const auto c = gen_kv_requests(spec, 1235, 20'000);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        any_diff |= a[i].key_index != c[i].key_index;
    }
    CHECK(any_diff);
}

TEST_CASE("zipf sampler matches the exact distribution (chi-square)") {
    // The spec-scale case plus a few smaller ones.
    CHECK(zipf_chi_square_p(10'000, 0.99, 1'000'000, 42) > 0.01);
    CHECK(zipf_chi_square_p(1'000, 0.5, 200'000, 43) > 0.01);
    CHECK(zipf_chi_square_p(500, 1.0, 200'000, 44) > 0.01);
    CHECK(zipf_chi_square_p(200, 1.2, 200'000, 45) > 0.01);
}

TEST_CASE("generalized harmonic: Euler-Maclaurin tail agrees with direct summation") {
    // 5M terms sits above the exact-summation threshold.
    const std::uint64_t m = 5'000'000;
    for (double theta : {0.5, 0.99, 1.0, 1.3}) {
        double direct = 0.0;
        for (std::uint64_t k = 1; k <= m; ++k) {
            direct += std::pow(static_cast<double>(k), -theta);
        }
        CHECK(generalized_harmonic(m, theta) ==
              doctest::Approx(direct).epsilon(1e-9));
    }
}

TEST_CASE("cache-fit miss rates") {
    KvWorkloadSpec spec;
    spec.keyspace_size = 100'000;
    spec.soc_cache_bytes = spec.keyspace_size *
                           (spec.key_bytes + spec.value_bytes + kCacheEntryOverheadBytes);
    CHECK(cache_fit_miss_rate(spec) == 0.0);

    spec.soc_cache_bytes = 0;
    CHECK(cache_fit_miss_rate(spec) == 1.0);

    // Direct tail-summation oracle at a keyspace small enough to sum.
    spec.keyspace_size = 1'000'000;
    spec.soc_cache_bytes = 10'000'000;  // 96153 entries at 104 B each
    const std::uint64_t cached =
        spec.soc_cache_bytes / (spec.key_bytes + spec.value_bytes + kCacheEntryOverheadBytes);
    double hot = 0.0, total = 0.0;
    for (std::uint64_t k = 1; k <= spec.keyspace_size; ++k) {
        const double mass = std::pow(static_cast<double>(k), -spec.zipf_theta);
        total += mass;
        if (k <= cached) hot += mass;
    }
    CHECK(cache_fit_miss_rate(spec) == doctest::Approx(1.0 - hot / total).epsilon(1e-9));
}

TEST_CASE("cache-miss rate is monotone in cache and keyspace") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> theta_dist(0.0, 1.3);
    std::uniform_int_distribution<std::uint64_t> keyspace_dist(1'000, 50'000);
    std::uniform_int_distribution<std::uint64_t> cache_dist(0, 4'000'000);
    for (int i = 0; i < 100; ++i) {
        KvWorkloadSpec spec;
        spec.zipf_theta = theta_dist(rng);
        spec.keyspace_size = keyspace_dist(rng);
        spec.soc_cache_bytes = cache_dist(rng);

        KvWorkloadSpec bigger_cache = spec;
        bigger_cache.soc_cache_bytes += cache_dist(rng);
        CHECK(cache_fit_miss_rate(bigger_cache) <= cache_fit_miss_rate(spec) + 1e-12);

        KvWorkloadSpec bigger_keyspace = spec;
        bigger_keyspace.keyspace_size += keyspace_dist(rng);
        CHECK(cache_fit_miss_rate(bigger_keyspace) >= cache_fit_miss_rate(spec) - 1e-12);
    }
}

TEST_CASE("replication stream shape") {
    ReplicationWorkloadSpec spec;
    spec.n_clients = 2;
    const auto stream = gen_replication_stream(spec, 1);
    // 2 GiB of 16 KiB writes per client.
    CHECK(stream.size() == 2 * 131072);
    for (const ReplicationWrite& write : stream) {
        REQUIRE(write.chunk_bytes.size() == 1);  // io < chunk
        CHECK(write.chunk_bytes[0] == 16 * 1024);
    }
    const auto other_seed = gen_replication_stream(spec, 999);
    CHECK(other_seed.size() == stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) {
        CHECK(stream[i].client == other_seed[i].client);
        CHECK(stream[i].chunk_bytes == other_seed[i].chunk_bytes);
    }
}

TEST_CASE("replication spec validation") {
    ReplicationWorkloadSpec spec;
    spec.io_bytes = spec.file_bytes + 1;
    try {
        validate_replication_spec(spec);
        FAIL("expected ValidationError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ValidationError);
    }
}
