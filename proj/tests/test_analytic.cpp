#include "doctest.h"

#include <limits>
#include <random>

#include "snicpath/analytic.hpp"

using namespace snicpath;

namespace {

FlowSpec make_flow(const Path& path, Verb verb, std::uint64_t payload = 4096,
                   double demand = FlowSpec::kUnboundedDemand) {
    FlowSpec flow;
    flow.path = path;
    flow.verb = verb;
    flow.payload_bytes = payload;
    flow.demand_gbps = demand;
    return flow;
}

// Random RDMA flow over the non-anomalous payload range.
FlowSpec random_flow(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> path_dist(0, 3);
    std::uniform_int_distribution<int> verb_dist(0, 2);
    std::uniform_int_distribution<std::uint64_t> payload_dist(64, 128 * 1024);
    std::uniform_real_distribution<double> demand_dist(0.0, 1.0);
    Path path;
    switch (path_dist(rng)) {
        case 0: path = Path::client_to_host(); break;
        case 1: path = Path::client_to_soc(); break;
        case 2: path = Path::host_soc_rdma(HostSocDirection::S2H); break;
        default: path = Path::host_soc_rdma(HostSocDirection::H2S); break;
    }
    Verb verb = static_cast<Verb>(verb_dist(rng));
    FlowSpec flow = make_flow(path, verb, payload_dist(rng));
    if (demand_dist(rng) < 0.3) {
        flow.demand_gbps = demand_dist(rng) * 250.0;
    }
    return flow;
}

}  // namespace

TEST_CASE("effective path caps") {
    const HardwareConfig cfg = bluefield2_defaults();
    CHECK(effective_path_cap(cfg, Path::client_to_soc(), Verb::Read, 4096) == 200.0);
    // Large SoC reads collapse past the cliff.
    CHECK(effective_path_cap(cfg, Path::client_to_soc(), Verb::Read, 16 << 20) ==
          cfg.anomaly.cliff_bw_gbps);
    // DMA writes are engine-capped below the PCIe limit.
    const double dma_write = effective_path_cap(
        cfg, Path::host_soc_dma(HostSocDirection::S2H), Verb::Write, 64 * 1024);
    CHECK(dma_write == cfg.dma_engine.write_bw_cap_gbps);
    CHECK(dma_write < cfg.pcie1_bw_per_dir_gbps);
    // A lone intra-machine RDMA flow never exceeds one PCIe1 direction.
    CHECK(effective_path_cap(cfg, Path::host_soc_rdma(HostSocDirection::S2H), Verb::Read,
                             4096) <= cfg.pcie1_bw_per_dir_gbps);
}

TEST_CASE("opposite directions double the wire, same direction does not") {
    const HardwareConfig cfg = bluefield2_defaults();
    const auto report = allocate_bandwidth(
        cfg, {make_flow(Path::client_to_host(), Verb::Read),
              make_flow(Path::client_to_host(), Verb::Write)});
    CHECK(report.total_goodput_gbps == doctest::Approx(400.0).epsilon(1e-9));
    CHECK(report.bottleneck.find(to_string(DirectedLink::NicToWire)) != std::string::npos);
    CHECK(report.bottleneck.find(to_string(DirectedLink::WireToNic)) != std::string::npos);

    const auto same = allocate_bandwidth(
        cfg, {make_flow(Path::client_to_host(), Verb::Read),
              make_flow(Path::client_to_host(), Verb::Read)});
    CHECK(same.total_goodput_gbps == doctest::Approx(200.0).epsilon(1e-9));
}

TEST_CASE("456 Gbps with a 56 Gbps host-SoC stream fills PCIe1 exactly") {
    const HardwareConfig cfg = bluefield2_defaults();
    const auto report = allocate_bandwidth(
        cfg, {make_flow(Path::client_to_host(), Verb::Read),
              make_flow(Path::client_to_host(), Verb::Write),
              make_flow(Path::host_soc_rdma(HostSocDirection::S2H), Verb::Read, 4096, 56.0)});
    CHECK(report.total_goodput_gbps == doctest::Approx(456.0).epsilon(1e-9));
    CHECK(report.per_link_utilization[static_cast<int>(DirectedLink::SwitchToNic)] ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.per_link_utilization[static_cast<int>(DirectedLink::NicToSwitch)] ==
          doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("bulk host-SoC RDMA is packet-budget bound at 204 Gbps") {
    const HardwareConfig cfg = bluefield2_defaults();
    const auto report = allocate_bandwidth(
        cfg, {make_flow(Path::host_soc_rdma(HostSocDirection::S2H), Verb::Read, 256 * 1024)});
    CHECK(report.total_goodput_gbps == doctest::Approx(204.0).epsilon(0.001));
    CHECK(report.bottleneck == "nic-packet-budget");
}

TEST_CASE("zero-demand flows get zero; demand caps respected") {
    const HardwareConfig cfg = bluefield2_defaults();
    const auto report = allocate_bandwidth(
        cfg, {make_flow(Path::client_to_host(), Verb::Read, 4096, 0.0),
              make_flow(Path::client_to_host(), Verb::Read, 4096, 42.0)});
    CHECK(report.per_flow_rate_gbps[0] == 0.0);
    CHECK(report.per_flow_rate_gbps[1] == doctest::Approx(42.0));
}

TEST_CASE("allocation feasibility and max-min certificate on random scenarios") {
    const HardwareConfig cfg = bluefield2_defaults();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> count_dist(1, 6);
    for (int iter = 0; iter < 150; ++iter) {
        std::vector<FlowSpec> flows;
        const int n = count_dist(rng);
        for (int i = 0; i < n; ++i) flows.push_back(random_flow(rng));
        const auto report = allocate_bandwidth(cfg, flows);

        for (DirectedLink link : all_directed_links()) {
            CHECK(report.per_link_utilization[static_cast<int>(link)] <= 1.0 + 1e-9);
        }
        for (std::size_t f = 0; f < flows.size(); ++f) {
            if (!flows[f].unbounded()) {
                CHECK(report.per_flow_rate_gbps[f] <= flows[f].demand_gbps + 1e-9);
            }
            CHECK(report.per_flow_rate_gbps[f] <=
                  effective_path_cap(cfg, flows[f].path, flows[f].verb,
                                     flows[f].payload_bytes) +
                      1e-9);
        }

        // Max-min certificate: a flow below its ceiling was frozen by some
        // saturated resource where it is among the largest users.
        for (std::size_t f = 0; f < flows.size(); ++f) {
            const double ceiling =
                flows[f].unbounded()
                    ? effective_path_cap(cfg, flows[f].path, flows[f].verb,
                                         flows[f].payload_bytes)
                    : std::min(flows[f].demand_gbps,
                               effective_path_cap(cfg, flows[f].path, flows[f].verb,
                                                  flows[f].payload_bytes));
            if (report.per_flow_rate_gbps[f] >= ceiling - 1e-6) continue;
            const auto bound_link = directed_link_from_string(report.per_flow_bottleneck[f]);
            if (!bound_link) continue;  // budget/engine constraints checked elsewhere
            CHECK(report.per_link_utilization[static_cast<int>(*bound_link)] >= 1.0 - 1e-6);
            const LinkLoad mine = link_loads(flows[f].path, flows[f].verb);
            CHECK(mine[*bound_link] > 0.0);
            // Progressive-filling certificate: nobody sharing my saturated
            // bottleneck ended up with a larger rate.
            for (std::size_t g = 0; g < flows.size(); ++g) {
                const LinkLoad other = link_loads(flows[g].path, flows[g].verb);
                if (other[*bound_link] > 0.0) {
                    CHECK(report.per_flow_rate_gbps[g] <=
                          report.per_flow_rate_gbps[f] + 1e-6);
                }
            }
        }
    }
}

// Per-flow monotonicity holds on client-facing paths with the packet budget
// out of the picture; in the general weighted-resource case max-min is not
// monotone (freezing one competitor can hand its budget share to another),
// so there we check the weaker guarantee that the minimum rate cannot rise.
TEST_CASE("adding a client-path flow never raises an existing allocation") {
    HardwareConfig cfg = bluefield2_defaults();
    cfg.nic_pkt_rate_cap_mpps = 1e9;
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> count_dist(1, 5);
    auto client_flow = [&rng]() {
        FlowSpec flow = random_flow(rng);
        flow.path = (rng() & 1) ? Path::client_to_host() : Path::client_to_soc();
        return flow;
    };
    for (int iter = 0; iter < 120; ++iter) {
        std::vector<FlowSpec> flows;
        const int n = count_dist(rng);
        for (int i = 0; i < n; ++i) flows.push_back(client_flow());
        const auto before = allocate_bandwidth(cfg, flows);
        flows.push_back(client_flow());
        const auto after = allocate_bandwidth(cfg, flows);
        for (int i = 0; i < n; ++i) {
            CHECK(after.per_flow_rate_gbps[i] <= before.per_flow_rate_gbps[i] + 1e-9);
        }
    }
}

TEST_CASE("adding any flow never raises the minimum allocation") {
    const HardwareConfig cfg = bluefield2_defaults();
    std::mt19937_64 rng(78);
    std::uniform_int_distribution<int> count_dist(1, 5);
    auto min_rate = [](const AllocationReport& report) {
        double lowest = std::numeric_limits<double>::infinity();
        for (double rate : report.per_flow_rate_gbps) {
            if (rate > 0) lowest = std::min(lowest, rate);
        }
        return lowest;
    };
    for (int iter = 0; iter < 120; ++iter) {
        std::vector<FlowSpec> flows;
        const int n = count_dist(rng);
        for (int i = 0; i < n; ++i) flows.push_back(random_flow(rng));
        const auto before = allocate_bandwidth(cfg, flows);
        flows.push_back(random_flow(rng));
        const auto after = allocate_bandwidth(cfg, flows);
        CHECK(min_rate(after) <= min_rate(before) + 1e-9);
    }
}

TEST_CASE("direction theorem for client-facing paths (no packet budget)") {
    HardwareConfig cfg = bluefield2_defaults();
    cfg.nic_pkt_rate_cap_mpps = 1e9;  // the theorem is a pure link statement
    for (const Path& path : {Path::client_to_host(), Path::client_to_soc()}) {
        const auto opposite = allocate_bandwidth(
            cfg, {make_flow(path, Verb::Read), make_flow(path, Verb::Write)});
        const auto same = allocate_bandwidth(
            cfg, {make_flow(path, Verb::Read), make_flow(path, Verb::Read)});
        CHECK(opposite.total_goodput_gbps ==
              doctest::Approx(2.0 * same.total_goodput_gbps).epsilon(1e-9));
    }
}

TEST_CASE("any intra-machine RDMA mix stays within one PCIe1 direction") {
    const HardwareConfig cfg = bluefield2_defaults();
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> verb_dist(0, 1);
    std::uniform_int_distribution<int> dir_dist(0, 1);
    std::uniform_int_distribution<int> count_dist(1, 4);
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<FlowSpec> flows;
        const int n = count_dist(rng);
        for (int i = 0; i < n; ++i) {
            const auto dir = dir_dist(rng) ? HostSocDirection::S2H : HostSocDirection::H2S;
            flows.push_back(make_flow(Path::host_soc_rdma(dir),
                                      verb_dist(rng) ? Verb::Write : Verb::Read, 4096));
        }
        const auto report = allocate_bandwidth(cfg, flows);
        CHECK(report.total_goodput_gbps <= cfg.pcie1_bw_per_dir_gbps + 1e-9);
        for (const FlowSpec& flow : flows) {
            const LinkLoad load = link_loads(flow.path, flow.verb);
            CHECK(load[DirectedLink::SwitchToNic] == 1.0);
            CHECK(load[DirectedLink::NicToSwitch] == 1.0);
        }
    }
}

TEST_CASE("latency composition hits the pinned values") {
    const HardwareConfig cfg = bluefield2_defaults();
    const HardwareConfig rnic = rnic_variant(cfg);

    const double snic_read = path_latency(cfg, Path::client_to_host(), Verb::Read, 8, 1);
    const double rnic_read = path_latency(rnic, Path::client_to_host(), Verb::Read, 8, 1);
    CHECK(snic_read == doctest::Approx(2.6).epsilon(1e-9));
    CHECK(rnic_read == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(snic_read - rnic_read ==
          doctest::Approx(2.0 * cfg.latencies.switch_cross_ns / 1000.0).epsilon(1e-9));

    const double snic_write = path_latency(cfg, Path::client_to_host(), Verb::Write, 8, 1);
    const double rnic_write = path_latency(rnic, Path::client_to_host(), Verb::Write, 8, 1);
    CHECK(snic_write - rnic_write ==
          doctest::Approx(cfg.latencies.switch_cross_ns / 1000.0).epsilon(1e-9));

    CHECK(path_latency(cfg, Path::host_soc_dma(HostSocDirection::S2H), Verb::Read, 64, 1) ==
          doctest::Approx(1.9).epsilon(1e-9));
    CHECK(path_latency(cfg, Path::host_soc_rdma(HostSocDirection::S2H), Verb::Read, 64, 1) ==
          doctest::Approx(2.6).epsilon(1e-6));
}

TEST_CASE("smartnic latency dominates the rnic baseline everywhere") {
    const HardwareConfig cfg = bluefield2_defaults();
    const HardwareConfig rnic = rnic_variant(cfg);
    for (Verb verb : {Verb::Read, Verb::Write, Verb::SendRecv}) {
        for (std::uint64_t payload : {8ull, 64ull, 512ull, 4096ull, 65536ull}) {
            CHECK(path_latency(cfg, Path::client_to_host(), verb, payload, 1) >=
                  path_latency(rnic, Path::client_to_host(), verb, payload, 1));
        }
    }
}

TEST_CASE("serialization term applies above 1 KB") {
    const HardwareConfig cfg = bluefield2_defaults();
    const double small = path_latency(cfg, Path::client_to_host(), Verb::Read, 1024, 1);
    const double large = path_latency(cfg, Path::client_to_host(), Verb::Read, 4096, 1);
    CHECK(large - small == doctest::Approx(4096 * 8.0 / (200.0 * 1000.0)).epsilon(1e-6));
}

TEST_CASE("skew interpolation matches the table and a frozen midpoint") {
    const HardwareConfig cfg = bluefield2_defaults();
    CHECK(skew_throughput(cfg, SkewTarget::Soc, Verb::Write, 48 * 1024) ==
          doctest::Approx(77.9));
    CHECK(skew_throughput(cfg, SkewTarget::Soc, Verb::Write, 1536) == doctest::Approx(22.7));
    // Frozen from the straight line between (1536, 22.7) and (49152, 77.9).
    CHECK(skew_throughput(cfg, SkewTarget::Soc, Verb::Write, 24 * 1024) ==
          doctest::Approx(49.4096774193548).epsilon(1e-9));
    // Clamps at the endpoints.
    CHECK(skew_throughput(cfg, SkewTarget::Soc, Verb::Write, 64) == doctest::Approx(22.7));
    CHECK(skew_throughput(cfg, SkewTarget::Soc, Verb::Write, 1 << 20) ==
          doctest::Approx(77.9));
}

TEST_CASE("skew throughput is nondecreasing in range for the SoC target") {
    const HardwareConfig cfg = bluefield2_defaults();
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::uint64_t> dist(64, 1 << 20);
    for (int i = 0; i < 100; ++i) {
        const std::uint64_t a = dist(rng);
        const std::uint64_t b = a + dist(rng);
        for (Verb verb : {Verb::Read, Verb::Write}) {
            CHECK(skew_throughput(cfg, SkewTarget::Soc, verb, a) <=
                  skew_throughput(cfg, SkewTarget::Soc, verb, b) + 1e-12);
        }
    }
}

TEST_CASE("doorbell multipliers") {
    const HardwareConfig cfg = bluefield2_defaults();
    CHECK(doorbell_multiplier(cfg, DoorbellSide::Soc, 1) == 1.0);
    CHECK(doorbell_multiplier(cfg, DoorbellSide::Host, 1) == 1.0);
    CHECK(doorbell_multiplier(cfg, DoorbellSide::Client, 1) == 1.0);
    CHECK(doorbell_multiplier(cfg, DoorbellSide::Soc, 16) == doctest::Approx(2.7));
    CHECK(doorbell_multiplier(cfg, DoorbellSide::Soc, 80) == doctest::Approx(4.6));
    CHECK(doorbell_multiplier(cfg, DoorbellSide::Soc, 200) == doctest::Approx(4.6));
    CHECK(doorbell_multiplier(cfg, DoorbellSide::Host, 16) == doctest::Approx(0.91));
    CHECK(doorbell_multiplier(cfg, DoorbellSide::Host, 32) == doctest::Approx(0.93));
    CHECK(doorbell_multiplier(cfg, DoorbellSide::Host, 48) == doctest::Approx(0.94));
    CHECK(doorbell_multiplier(cfg, DoorbellSide::Host, 49) == 1.0);
    CHECK(doorbell_multiplier(cfg, DoorbellSide::Client, 80) == doctest::Approx(1.30));
}

TEST_CASE("segment_transfer") {
    const auto exact = segment_transfer(16ull << 20, 256 * 1024);
    CHECK(exact.size() == 64);
    for (std::uint64_t chunk : exact) CHECK(chunk == 256 * 1024);

    const auto remainder = segment_transfer((1ull << 20) + 1, 1ull << 20);
    CHECK(remainder.size() == 2);
    CHECK(remainder[0] == 1ull << 20);
    CHECK(remainder[1] == 1);

    const auto undersized = segment_transfer(100 * 1024, 256 * 1024);
    CHECK(undersized.size() == 1);
    CHECK(undersized[0] == 100 * 1024);
}
