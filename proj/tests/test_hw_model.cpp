#include "doctest.h"

#include <fstream>
#include <random>
#include <sstream>

#include "snicpath/hw_model.hpp"

using namespace snicpath;

namespace {

double total_entering_nic(const LinkLoad& load) {
    return load[DirectedLink::SwitchToNic] + load[DirectedLink::WireToNic];
}

double total_leaving_nic(const LinkLoad& load) {
    return load[DirectedLink::NicToSwitch] + load[DirectedLink::NicToWire];
}

}  // namespace

TEST_CASE("default profile matches the modeled testbed") {
    const HardwareConfig cfg = validate_config(bluefield2_defaults());
    CHECK(cfg.net_bw_per_dir_gbps == 200.0);
    CHECK(cfg.pcie1_bw_per_dir_gbps == 256.0);
    CHECK(cfg.host_pcie_mtu == 512);
    CHECK(cfg.soc_pcie_mtu == 128);
    CHECK(cfg.latencies.switch_cross_ns == 300.0);
    CHECK(cfg.soc_link_bw_per_dir_gbps == cfg.pcie1_bw_per_dir_gbps);
}

TEST_CASE("validate_config rejects degenerate inputs") {
    HardwareConfig cfg = bluefield2_defaults();
    cfg.net_bw_per_dir_gbps = 0.0;
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("net_bw"), Error);
    try {
        validate_config(cfg);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonPositiveCapacity);
    }

    cfg = bluefield2_defaults();
    cfg.host_pcie_mtu = 500;
    try {
        validate_config(cfg);
        FAIL("expected BadMtu");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BadMtu);
    }

    cfg = bluefield2_defaults();
    cfg.skew_table_soc.samples.clear();
    try {
        validate_config(cfg);
        FAIL("expected EmptySkewTable");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptySkewTable);
    }
}

TEST_CASE("link loads follow the data direction") {
    // Inbound READ serves host memory out to the wire.
    const LinkLoad read1 = link_loads(Path::client_to_host(), Verb::Read);
    CHECK(read1[DirectedLink::HostToSwitch] == 1.0);
    CHECK(read1[DirectedLink::SwitchToNic] == 1.0);
    CHECK(read1[DirectedLink::NicToWire] == 1.0);
    CHECK(read1[DirectedLink::WireToNic] == 0.0);
    CHECK(read1[DirectedLink::SwitchToSoc] == 0.0);

    // SoC-issued READ against host memory: both PCIe1 directions carry it.
    const LinkLoad read3 = link_loads(Path::host_soc_rdma(HostSocDirection::S2H), Verb::Read);
    CHECK(read3[DirectedLink::HostToSwitch] == 1.0);
    CHECK(read3[DirectedLink::SwitchToNic] == 1.0);
    CHECK(read3[DirectedLink::NicToSwitch] == 1.0);
    CHECK(read3[DirectedLink::SwitchToSoc] == 1.0);

    // The DMA variant bypasses PCIe1 entirely.
    const LinkLoad dma = link_loads(Path::host_soc_dma(HostSocDirection::S2H), Verb::Read);
    CHECK(dma[DirectedLink::HostToSwitch] == 1.0);
    CHECK(dma[DirectedLink::SwitchToSoc] == 1.0);
    CHECK(dma[DirectedLink::SwitchToNic] == 0.0);
    CHECK(dma[DirectedLink::NicToSwitch] == 0.0);
}

TEST_CASE("link loads: sendrecv payload flows like write") {
    for (const Path& path : {Path::client_to_host(), Path::client_to_soc(),
                             Path::host_soc_rdma(HostSocDirection::H2S)}) {
        const LinkLoad write = link_loads(path, Verb::Write);
        const LinkLoad sendrecv = link_loads(path, Verb::SendRecv);
        for (DirectedLink link : all_directed_links()) {
            CHECK(write[link] == sendrecv[link]);
        }
    }
}

TEST_CASE("link loads: dma rejects sendrecv") {
    try {
        link_loads(Path::host_soc_dma(HostSocDirection::S2H), Verb::SendRecv);
        FAIL("expected UnsupportedVerbForPath");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedVerbForPath);
    }
}

TEST_CASE("flow conservation at the NIC cores and unit multipliers") {
    for (const Path& path :
         {Path::client_to_host(), Path::client_to_soc(),
          Path::host_soc_rdma(HostSocDirection::S2H),
          Path::host_soc_rdma(HostSocDirection::H2S),
          Path::host_soc_dma(HostSocDirection::S2H),
          Path::host_soc_dma(HostSocDirection::H2S)}) {
        for (Verb verb : {Verb::Read, Verb::Write, Verb::SendRecv}) {
            if (path.kind == PathKind::HostSocDma && verb == Verb::SendRecv) continue;
            const LinkLoad load = link_loads(path, verb);
            CHECK(total_entering_nic(load) == total_leaving_nic(load));
            for (DirectedLink link : all_directed_links()) {
                const bool unit = load[link] == 0.0 || load[link] == 1.0;
                CHECK(unit);
            }
        }
    }
}

TEST_CASE("pcie packet counts reproduce the table formulas") {
    const HardwareConfig cfg = bluefield2_defaults();
    const auto c1 = pcie_packet_counts(Path::client_to_host(), 1024, cfg);
    CHECK(c1.pcie1 == 2);
    CHECK(c1.pcie0 == 2);
    const auto c3 = pcie_packet_counts(Path::host_soc_rdma(HostSocDirection::S2H), 1024, cfg);
    CHECK(c3.pcie1 == 10);
    CHECK(c3.pcie0 == 2);

    // Independent ceiling oracle over randomized sizes.
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::uint64_t> dist(1, 1 << 22);
    auto ceil_div = [](std::uint64_t n, std::uint64_t d) { return (n + d - 1) / d; };
    for (int i = 0; i < 200; ++i) {
        const std::uint64_t bytes = dist(rng);
        const auto h = ceil_div(bytes, cfg.host_pcie_mtu);
        const auto s = ceil_div(bytes, cfg.soc_pcie_mtu);
        CHECK(pcie_packet_counts(Path::client_to_host(), bytes, cfg).pcie1 == h);
        CHECK(pcie_packet_counts(Path::client_to_soc(), bytes, cfg).pcie1 == s);
        CHECK(pcie_packet_counts(Path::client_to_soc(), bytes, cfg).pcie0 == 0);
        const auto p3 = pcie_packet_counts(Path::host_soc_rdma(HostSocDirection::H2S), bytes, cfg);
        CHECK(p3.pcie1 == h + s);
        CHECK(p3.pcie0 == h);
        const auto pd = pcie_packet_counts(Path::host_soc_dma(HostSocDirection::S2H), bytes, cfg);
        CHECK(pd.pcie1 == 0);
        CHECK(pd.pcie0 == h);
    }
}

TEST_CASE("packet counts are monotone and path 3 sums paths 1 and 2 on PCIe1") {
    const HardwareConfig cfg = bluefield2_defaults();
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::uint64_t> dist(1, 1 << 20);
    for (int i = 0; i < 200; ++i) {
        const std::uint64_t a = dist(rng);
        const std::uint64_t b = a + dist(rng);
        for (const Path& path : {Path::client_to_host(), Path::client_to_soc(),
                                 Path::host_soc_rdma(HostSocDirection::S2H)}) {
            CHECK(pcie_packet_counts(path, a, cfg).total() <=
                  pcie_packet_counts(path, b, cfg).total());
        }
        CHECK(pcie_packet_counts(Path::host_soc_rdma(HostSocDirection::S2H), a, cfg).pcie1 ==
              pcie_packet_counts(Path::client_to_host(), a, cfg).pcie1 +
                  pcie_packet_counts(Path::client_to_soc(), a, cfg).pcie1);
    }
}

TEST_CASE("a 200 Gbps SoC-to-host stream needs about 293 Mpps") {
    const HardwareConfig cfg = bluefield2_defaults();
    const double mpps = pcie_packet_rate_mpps(Path::host_soc_rdma(HostSocDirection::S2H),
                                              200.0, 256 * 1024, cfg);
    CHECK(mpps == doctest::Approx(293.0).epsilon(0.01));
    CHECK(mpps >= 293.0 * 0.99);
}

TEST_CASE("profile round trip preserves the configuration") {
    const HardwareConfig cfg = validate_config(bluefield2_defaults());
    std::ostringstream out;
    write_profile(out, cfg);
    std::istringstream in(out.str());
    const HardwareConfig loaded = load_profile(in);
    CHECK(loaded.net_bw_per_dir_gbps == cfg.net_bw_per_dir_gbps);
    CHECK(loaded.nic_pkt_rate_cap_mpps == cfg.nic_pkt_rate_cap_mpps);
    CHECK(loaded.latencies.mmio_soc_cycles == cfg.latencies.mmio_soc_cycles);
    CHECK(loaded.skew_table_soc.samples.at(Verb::Write) ==
          cfg.skew_table_soc.samples.at(Verb::Write));
}

TEST_CASE("bundled profile equals the built-in defaults") {
    const HardwareConfig bundled =
        load_profile_file(std::string(SNICPATH_SOURCE_DIR) + "/profiles/bluefield2.profile");
    const HardwareConfig defaults = bluefield2_defaults();
    CHECK(bundled.net_bw_per_dir_gbps == defaults.net_bw_per_dir_gbps);
    CHECK(bundled.pcie1_bw_per_dir_gbps == defaults.pcie1_bw_per_dir_gbps);
    CHECK(bundled.nic_pkt_rate_cap_mpps == defaults.nic_pkt_rate_cap_mpps);
    CHECK(bundled.latencies.net_oneway_us == defaults.latencies.net_oneway_us);
    CHECK(bundled.latencies.mmio_soc_cycles == defaults.latencies.mmio_soc_cycles);
    CHECK(bundled.dma_engine.write_bw_cap_gbps == defaults.dma_engine.write_bw_cap_gbps);
    CHECK(bundled.anomaly.soc_read_cliff_bytes == defaults.anomaly.soc_read_cliff_bytes);
    CHECK(bundled.skew_table_soc.samples == defaults.skew_table_soc.samples);
    CHECK(bundled.skew_table_host_ddio.samples == defaults.skew_table_host_ddio.samples);
}
