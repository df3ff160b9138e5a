#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "snicpath/errors.hpp"

namespace snicpath {

// ---------------------------------------------------------------------------
// Topology: client --wire-- [NIC cores] --PCIe1-- [switch] --PCIe0-- host
//                                                    |
//                                                 soc-link
//                                                    |
//                                                  [SoC]
//
// Every link is bi-directional; capacities and loads are tracked per
// direction. Directions are named by their endpoints so all modules agree.
// ---------------------------------------------------------------------------

enum class DirectedLink : int {
    HostToSwitch = 0,  // PCIe0
    SwitchToHost,      // PCIe0
    SwitchToNic,       // PCIe1
    NicToSwitch,       // PCIe1
    SwitchToSoc,       // SoC internal link
    SocToSwitch,       // SoC internal link
    NicToWire,         // network egress
    WireToNic,         // network ingress
};

inline constexpr int kNumDirectedLinks = 8;

inline constexpr std::array<DirectedLink, kNumDirectedLinks> all_directed_links() {
    return {DirectedLink::HostToSwitch, DirectedLink::SwitchToHost,
            DirectedLink::SwitchToNic,  DirectedLink::NicToSwitch,
            DirectedLink::SwitchToSoc,  DirectedLink::SocToSwitch,
            DirectedLink::NicToWire,    DirectedLink::WireToNic};
}

const char* to_string(DirectedLink link);
std::optional<DirectedLink> directed_link_from_string(const std::string& name);

enum class Verb { Read, Write, SendRecv };

const char* to_string(Verb verb);
std::optional<Verb> verb_from_string(const std::string& name);

// Communication paths. HostSoc paths carry the requester->responder
// direction: S2H means the SoC issues requests against host memory.
enum class PathKind {
    ClientToHost,  // (1)
    ClientToSoc,   // (2)
    HostSocRdma,   // (3)
    HostSocDma,    // (3*), READ/WRITE only
};

enum class HostSocDirection { H2S, S2H };

struct Path {
    PathKind kind = PathKind::ClientToHost;
    HostSocDirection direction = HostSocDirection::S2H;  // used by HostSoc* only

    static Path client_to_host() { return {PathKind::ClientToHost, HostSocDirection::S2H}; }
    static Path client_to_soc() { return {PathKind::ClientToSoc, HostSocDirection::S2H}; }
    static Path host_soc_rdma(HostSocDirection d) { return {PathKind::HostSocRdma, d}; }
    static Path host_soc_dma(HostSocDirection d) { return {PathKind::HostSocDma, d}; }

    bool intra_machine() const {
        return kind == PathKind::HostSocRdma || kind == PathKind::HostSocDma;
    }
    bool operator==(const Path& other) const {
        if (kind != other.kind) return false;
        if (!intra_machine()) return true;
        return direction == other.direction;
    }
};

std::string to_string(const Path& path);
std::optional<Path> path_from_string(const std::string& name, const std::string& direction);

struct DmaEngineCaps {
    double small_req_factor = 0.53;  // throughput fraction of the RDMA path for small requests
    double write_bw_cap_gbps = 158.0;
    double read_bw_cap_gbps = 204.0;
};

struct LatencyParams {
    double switch_cross_ns = 300.0;
    double net_oneway_us = 0.3975;
    double host_dram_ns = 85.0;
    double soc_dram_ns = 95.0;
    double mmio_host_cycles = 399.0;      // posting via the SmartNIC from the host
    double mmio_soc_cycles = 749.375;     // posting from the SoC (calibrated, fractional)
    double base_read_us = 2.0;            // RNIC end-to-end baselines, 8 B, batch 1
    double base_write_us = 1.03;
    double base_sendrecv_us = 2.10;
};

struct CoreCounts {
    int host_cores = 24;
    int soc_cores = 8;
    int nic_cores_shared = 16;
    int nic_cores_reserved_per_endpoint = 0;  // endpoint reserve, off by default
};

struct AnomalyThresholds {
    std::uint64_t soc_read_cliff_bytes = 9ull * 1024 * 1024;  // (2) READ collapse
    std::uint64_t hostsoc_cliff_bytes = 1ull * 1024 * 1024;   // (3) READ/WRITE collapse
    std::uint64_t dma_cliff_bytes = 1ull * 1024 * 1024;       // (3*) collapse
    double cliff_bw_gbps = 100.0;
};

enum class SkewTarget { HostDdio, Soc };

const char* to_string(SkewTarget target);

// Peak request rate (M reqs/s) vs. accessed address range, per verb.
// Samples must be sorted by range and nonempty for every verb queried.
struct SkewTable {
    std::map<Verb, std::vector<std::pair<std::uint64_t, double>>> samples;
};

struct HardwareConfig {
    double net_bw_per_dir_gbps = 200.0;       // N
    double pcie1_bw_per_dir_gbps = 256.0;     // P (a.k.a. P1)
    double pcie0_bw_per_dir_gbps = 256.0;     // P0
    double soc_link_bw_per_dir_gbps = 256.0;  // internal link, defaults to PCIe1
    std::uint32_t host_pcie_mtu = 512;        // H_MTU
    std::uint32_t soc_pcie_mtu = 128;         // S_MTU
    double nic_pkt_rate_cap_mpps = 298.83;    // NIC packet-processing budget
    DmaEngineCaps dma_engine;
    LatencyParams latencies;
    CoreCounts core_counts;
    double soc_sendrecv_peak_mrps = 21.6;
    double host_sendrecv_peak_mrps = 33.75;
    AnomalyThresholds anomaly;
    SkewTable skew_table_host_ddio;
    SkewTable skew_table_soc;
};

// The modeled testbed: Bluefield-2 behind a PCIe 4.0 x16 host slot.
HardwareConfig bluefield2_defaults();

// Same platform with the PCIe switch removed, for SmartNIC-vs-RNIC deltas.
HardwareConfig rnic_variant(const HardwareConfig& cfg);

// Checks every invariant and returns the config unchanged, or throws an
// Error naming the first violation (NonPositiveCapacity, BadMtu,
// EmptySkewTable).
HardwareConfig validate_config(const HardwareConfig& raw);

// Profile file I/O: "[section]" + "key = value" text format. See
// profiles/bluefield2.profile for the full key set.
HardwareConfig load_profile(std::istream& in);
HardwareConfig load_profile_file(const std::string& path);
void write_profile(std::ostream& out, const HardwareConfig& cfg);

struct FlowSpec {
    Path path;
    Verb verb = Verb::Read;
    std::uint64_t payload_bytes = 4096;
    double demand_gbps = kUnboundedDemand;  // offered load; kUnboundedDemand = greedy
    int doorbell_batch = 1;                 // B
    std::uint64_t address_range_bytes = kUniformLargeRange;

    static constexpr double kUnboundedDemand = -1.0;
    static constexpr std::uint64_t kUniformLargeRange = 0;  // "uniform-large"

    bool unbounded() const { return demand_gbps < 0; }
};

// Bytes carried on each directed link per payload byte of the flow.
// Multipliers are 0 or 1; path (3) loads both PCIe1 directions.
class LinkLoad {
public:
    LinkLoad() { multipliers_.fill(0.0); }

    double operator[](DirectedLink link) const {
        return multipliers_[static_cast<int>(link)];
    }
    void set(DirectedLink link, double value) {
        multipliers_[static_cast<int>(link)] = value;
    }

private:
    std::array<double, kNumDirectedLinks> multipliers_;
};

// Directed multipliers describing where each payload byte travels. Data
// direction for READ is responder->requester, for WRITE/SENDRECV it is
// requester->responder. Throws UnsupportedVerbForPath for (3*) SENDRECV.
LinkLoad link_loads(const Path& path, Verb verb);

struct PciePacketCounts {
    std::uint64_t pcie1 = 0;
    std::uint64_t pcie0 = 0;

    std::uint64_t total() const { return pcie1 + pcie0; }
};

// PCIe packets required to move `bytes` of payload over each PCIe link,
// per the ceil(N/MTU) model. Control-path packets are excluded.
PciePacketCounts pcie_packet_counts(const Path& path, std::uint64_t bytes,
                                    const HardwareConfig& cfg);

// PCIe packets generated per payload byte at a given request size.
double pcie_packets_per_byte(const Path& path, std::uint64_t payload_bytes,
                             const HardwareConfig& cfg);

// Aggregate PCIe packet rate (M packets/s) of a stream moving `gbps` of
// payload with `payload_bytes` requests.
double pcie_packet_rate_mpps(const Path& path, double gbps,
                             std::uint64_t payload_bytes, const HardwareConfig& cfg);

}  // namespace snicpath
