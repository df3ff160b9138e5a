#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "snicpath/hw_model.hpp"

namespace snicpath {

// Multiplicative throughput factor per directed link, fitted by the
// calibration module against measured fixtures. Identity by default.
class EfficiencyMap {
public:
    EfficiencyMap() { factors_.fill(1.0); }

    double operator[](DirectedLink link) const {
        return factors_[static_cast<int>(link)];
    }
    void set(DirectedLink link, double factor) {
        factors_[static_cast<int>(link)] = factor;
    }
    bool is_identity() const;

private:
    std::array<double, kNumDirectedLinks> factors_;
};

struct AllocationReport {
    std::vector<double> per_flow_rate_gbps;       // one entry per input flow
    std::array<double, kNumDirectedLinks> per_link_utilization{};
    std::vector<std::string> per_flow_bottleneck;  // constraint that froze the flow
    std::string bottleneck;                        // binding constraints, "+"-joined
    double total_goodput_gbps = 0.0;
};

// Bandwidth ceiling of one flow before link sharing: the minimum capacity
// along its loaded links, collapsed to anomaly.cliff_bw_gbps past the
// path's large-payload threshold, and clamped by the DMA engine for (3*).
double effective_path_cap(const HardwareConfig& cfg, const Path& path, Verb verb,
                          std::uint64_t payload_bytes);

// Progressive-filling max-min fair allocation over directed links, the NIC
// packet budget, the DMA engine, and responder CPU for SENDRECV. Each flow
// is individually capped by effective_path_cap and its demand.
AllocationReport allocate_bandwidth(const HardwareConfig& cfg,
                                    const std::vector<FlowSpec>& flows,
                                    const EfficiencyMap& efficiency = EfficiencyMap());

// End-to-end request latency in microseconds: RNIC verb baseline plus
// switch crossings on the data path, requester-posting delta (amortized by
// the doorbell batch), intra-machine network savings, responder-DRAM delta,
// and a serialization term for payloads above 1 KB.
double path_latency(const HardwareConfig& cfg, const Path& path, Verb verb,
                    std::uint64_t payload_bytes, int doorbell_batch);

// Peak request rate (M reqs/s) when one-sided accesses fall into
// `address_range_bytes`, by piecewise-linear interpolation over the
// configured skew table. Clamps at the table endpoints.
double skew_throughput(const HardwareConfig& cfg, SkewTarget target, Verb verb,
                       std::uint64_t address_range_bytes);

enum class DoorbellSide { Soc, Host, Client };

// Throughput multiplier of doorbell batching with batch size B; 1.0 at B=1.
double doorbell_multiplier(const HardwareConfig& cfg, DoorbellSide side, int batch);

// Splits a transfer into ceil(total/chunk) chunks; the last chunk carries
// the remainder.
std::vector<std::uint64_t> segment_transfer(std::uint64_t total_bytes,
                                            std::uint64_t chunk_bytes);

// CSV rows: flow_id,path,verb,rate_gbps. JSON summary: bottleneck + totals.
void write_allocation_csv(std::ostream& out, const std::vector<FlowSpec>& flows,
                          const AllocationReport& report);
std::string allocation_json_summary(const AllocationReport& report);

}  // namespace snicpath
