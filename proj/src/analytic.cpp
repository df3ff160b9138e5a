#include "snicpath/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace snicpath {

namespace {

constexpr double kHostGhz = 3.6;
constexpr double kSocGhz = 2.75;
constexpr double kRnicMmioCycles = 279.0;
constexpr std::uint64_t kDmaSmallReqBytes = 4096;       // below this the engine lags RDMA
constexpr std::uint64_t kSerializationFloorBytes = 1024;

double link_capacity_gbps(const HardwareConfig& cfg, DirectedLink link) {
    switch (link) {
        case DirectedLink::HostToSwitch:
        case DirectedLink::SwitchToHost:
            return cfg.pcie0_bw_per_dir_gbps;
        case DirectedLink::SwitchToNic:
        case DirectedLink::NicToSwitch:
            return cfg.pcie1_bw_per_dir_gbps;
        case DirectedLink::SwitchToSoc:
        case DirectedLink::SocToSwitch:
            return cfg.soc_link_bw_per_dir_gbps;
        case DirectedLink::NicToWire:
        case DirectedLink::WireToNic:
            return cfg.net_bw_per_dir_gbps;
    }
    return 0.0;
}

double min_loaded_link_cap(const HardwareConfig& cfg, const Path& path, Verb verb) {
    const LinkLoad load = link_loads(path, verb);
    double cap = std::numeric_limits<double>::infinity();
    for (DirectedLink link : all_directed_links()) {
        if (load[link] > 0.0) {
            cap = std::min(cap, link_capacity_gbps(cfg, link) / load[link]);
        }
    }
    return cap;
}

}  // namespace

bool EfficiencyMap::is_identity() const {
    for (double f : factors_) {
        if (f != 1.0) return false;
    }
    return true;
}

double effective_path_cap(const HardwareConfig& cfg, const Path& path, Verb verb,
                          std::uint64_t payload_bytes) {
    if (payload_bytes == 0) {
        fail(ErrorCode::ValidationError, "payload must be >= 1");
    }
    double cap = min_loaded_link_cap(cfg, path, verb);  // throws for (3*) SENDRECV

    switch (path.kind) {
        case PathKind::ClientToSoc:
            if (verb == Verb::Read && payload_bytes >= cfg.anomaly.soc_read_cliff_bytes) {
                cap = std::min(cap, cfg.anomaly.cliff_bw_gbps);
            }
            break;
        case PathKind::HostSocRdma:
            if (verb != Verb::SendRecv && payload_bytes >= cfg.anomaly.hostsoc_cliff_bytes) {
                cap = std::min(cap, cfg.anomaly.cliff_bw_gbps);
            }
            break;
        case PathKind::HostSocDma: {
            const double engine_cap = verb == Verb::Read
                                          ? cfg.dma_engine.read_bw_cap_gbps
                                          : cfg.dma_engine.write_bw_cap_gbps;
            cap = std::min(cap, engine_cap);
            if (payload_bytes < kDmaSmallReqBytes) {
                const Path rdma = Path::host_soc_rdma(path.direction);
                cap = std::min(cap, cfg.dma_engine.small_req_factor *
                                        min_loaded_link_cap(cfg, rdma, verb));
            }
            if (payload_bytes >= cfg.anomaly.dma_cliff_bytes) {
                cap = std::min(cap, cfg.anomaly.cliff_bw_gbps);
            }
            break;
        }
        case PathKind::ClientToHost:
            break;
    }
    return cap;
}

// ---------------------------------------------------------------------------
// Progressive filling
// ---------------------------------------------------------------------------

namespace {

// Generalized resource: capacity plus one usage coefficient per flow
// (consumption per Gbps of flow rate).
struct Resource {
    std::string name;
    double capacity = 0.0;
    std::vector<double> coeff;
    int link_index = -1;  // >= 0 when the resource is a directed link
};

SkewTarget responder_memory(const Path& path) {
    switch (path.kind) {
        case PathKind::ClientToHost:
            return SkewTarget::HostDdio;
        case PathKind::ClientToSoc:
            return SkewTarget::Soc;
        case PathKind::HostSocRdma:
        case PathKind::HostSocDma:
            return path.direction == HostSocDirection::S2H ? SkewTarget::HostDdio
                                                           : SkewTarget::Soc;
    }
    return SkewTarget::HostDdio;
}

}  // namespace

AllocationReport allocate_bandwidth(const HardwareConfig& cfg,
                                    const std::vector<FlowSpec>& flows,
                                    const EfficiencyMap& efficiency) {
    if (flows.empty()) {
        fail(ErrorCode::ValidationError, "allocate_bandwidth needs at least one flow");
    }
    const std::size_t n = flows.size();

    std::vector<LinkLoad> loads;
    loads.reserve(n);
    for (const FlowSpec& flow : flows) {
        loads.push_back(link_loads(flow.path, flow.verb));
    }

    std::vector<Resource> resources;
    for (DirectedLink link : all_directed_links()) {
        Resource res;
        res.name = to_string(link);
        res.capacity = link_capacity_gbps(cfg, link) * efficiency[link];
        res.link_index = static_cast<int>(link);
        res.coeff.resize(n, 0.0);
        bool touched = false;
        for (std::size_t f = 0; f < n; ++f) {
            res.coeff[f] = loads[f][link];
            touched |= res.coeff[f] > 0.0;
        }
        if (touched) resources.push_back(std::move(res));
    }

    // NIC packet budget: every RDMA path consumes NIC-core packet
    // processing; (3*) bypasses the NIC entirely.
    {
        Resource res;
        res.name = "nic-packet-budget";
        res.capacity = cfg.nic_pkt_rate_cap_mpps;
        res.coeff.resize(n, 0.0);
        bool touched = false;
        for (std::size_t f = 0; f < n; ++f) {
            if (flows[f].path.kind == PathKind::HostSocDma) continue;
            // Mpps per Gbps: 1 Gbps = 125e6 B/s.
            res.coeff[f] = 125.0 * pcie_packets_per_byte(flows[f].path,
                                                         flows[f].payload_bytes, cfg);
            touched = true;
        }
        if (touched) resources.push_back(std::move(res));
    }

    // DMA engine: (3*) flows share the engine; a flow at its verb's cap
    // uses the whole engine, so utilizations add up to at most 1.
    {
        Resource res;
        res.name = "engine:dma";
        res.capacity = 1.0;
        res.coeff.resize(n, 0.0);
        bool touched = false;
        for (std::size_t f = 0; f < n; ++f) {
            if (flows[f].path.kind != PathKind::HostSocDma) continue;
            const double verb_cap = flows[f].verb == Verb::Read
                                        ? cfg.dma_engine.read_bw_cap_gbps
                                        : cfg.dma_engine.write_bw_cap_gbps;
            res.coeff[f] = 1.0 / verb_cap;
            touched = true;
        }
        if (touched) resources.push_back(std::move(res));
    }

    // Responder CPU for SENDRECV, in M reqs/s.
    for (SkewTarget target : {SkewTarget::HostDdio, SkewTarget::Soc}) {
        Resource res;
        res.name = target == SkewTarget::Soc ? "engine:soc-cpu" : "engine:host-cpu";
        res.capacity = target == SkewTarget::Soc ? cfg.soc_sendrecv_peak_mrps
                                                 : cfg.host_sendrecv_peak_mrps;
        res.coeff.resize(n, 0.0);
        bool touched = false;
        for (std::size_t f = 0; f < n; ++f) {
            if (flows[f].verb != Verb::SendRecv) continue;
            if (responder_memory(flows[f].path) != target) continue;
            res.coeff[f] = 125.0 / static_cast<double>(flows[f].payload_bytes);
            touched = true;
        }
        if (touched) resources.push_back(std::move(res));
    }

    std::vector<double> ceiling(n);
    for (std::size_t f = 0; f < n; ++f) {
        ceiling[f] = effective_path_cap(cfg, flows[f].path, flows[f].verb,
                                        flows[f].payload_bytes);
        if (!flows[f].unbounded()) {
            ceiling[f] = std::min(ceiling[f], flows[f].demand_gbps);
        }
    }

    AllocationReport report;
    report.per_flow_rate_gbps.assign(n, 0.0);
    report.per_flow_bottleneck.assign(n, "");

    std::vector<bool> active(n, true);
    for (std::size_t f = 0; f < n; ++f) {
        if (ceiling[f] <= 0.0) {
            active[f] = false;
            report.per_flow_bottleneck[f] = "demand";
        }
    }

    const double eps = 1e-9;
    std::set<std::string> binding;
    while (std::count(active.begin(), active.end(), true) > 0) {
        double step = std::numeric_limits<double>::infinity();
        for (const Resource& res : resources) {
            double used = 0.0;
            double slope = 0.0;
            for (std::size_t f = 0; f < n; ++f) {
                used += res.coeff[f] * report.per_flow_rate_gbps[f];
                if (active[f]) slope += res.coeff[f];
            }
            if (slope > 0.0) {
                step = std::min(step, std::max(0.0, res.capacity - used) / slope);
            }
        }
        for (std::size_t f = 0; f < n; ++f) {
            if (active[f]) {
                step = std::min(step, ceiling[f] - report.per_flow_rate_gbps[f]);
            }
        }
        for (std::size_t f = 0; f < n; ++f) {
            if (active[f]) report.per_flow_rate_gbps[f] += step;
        }
        // Freeze flows that hit their ceiling or a saturated resource.
        for (std::size_t f = 0; f < n; ++f) {
            if (active[f] && ceiling[f] - report.per_flow_rate_gbps[f] <= eps) {
                active[f] = false;
                report.per_flow_bottleneck[f] =
                    !flows[f].unbounded() &&
                            std::abs(ceiling[f] - flows[f].demand_gbps) < eps
                        ? "demand"
                        : "path-cap";
            }
        }
        for (const Resource& res : resources) {
            double used = 0.0;
            for (std::size_t f = 0; f < n; ++f) {
                used += res.coeff[f] * report.per_flow_rate_gbps[f];
            }
            if (res.capacity - used <= eps * std::max(1.0, res.capacity)) {
                bool froze = false;
                for (std::size_t f = 0; f < n; ++f) {
                    if (active[f] && res.coeff[f] > 0.0) {
                        active[f] = false;
                        report.per_flow_bottleneck[f] = res.name;
                        froze = true;
                    }
                }
                if (froze) binding.insert(res.name);
            }
        }
    }

    // Final accounting. A flow frozen at its own path cap usually means a
    // loaded resource reached full utilization at the same instant; name
    // that resource rather than the generic ceiling.
    std::vector<double> usage(resources.size(), 0.0);
    for (std::size_t r = 0; r < resources.size(); ++r) {
        for (std::size_t f = 0; f < n; ++f) {
            usage[r] += resources[r].coeff[f] * report.per_flow_rate_gbps[f];
        }
        const Resource& res = resources[r];
        if (res.link_index >= 0) {
            report.per_link_utilization[res.link_index] =
                res.capacity > 0.0 ? usage[r] / res.capacity : 0.0;
        }
        if (res.capacity - usage[r] <= eps * std::max(1.0, res.capacity)) {
            for (std::size_t f = 0; f < n; ++f) {
                if (res.coeff[f] > 0.0) {
                    binding.insert(res.name);
                    if (report.per_flow_bottleneck[f] == "path-cap") {
                        report.per_flow_bottleneck[f] = res.name;
                    }
                }
            }
        }
    }
    for (double rate : report.per_flow_rate_gbps) {
        report.total_goodput_gbps += rate;
    }
    std::string joined;
    for (const std::string& name : binding) {
        if (!joined.empty()) joined += "+";
        joined += name;
    }
    report.bottleneck = joined;
    return report;
}

// ---------------------------------------------------------------------------
// Latency
// ---------------------------------------------------------------------------

namespace {

int switch_crossings(const Path& path, Verb verb) {
    switch (path.kind) {
        case PathKind::ClientToHost:
            // READ pays for the request and completion PCIe packets; WRITE
            // posts without waiting for the completion.
            return verb == Verb::Write ? 1 : 2;
        case PathKind::ClientToSoc:
            // Data returns over the internal link, so READ crosses once.
            return verb == Verb::SendRecv ? 2 : 1;
        case PathKind::HostSocRdma:
            switch (verb) {
                case Verb::Read: return 4;  // both PCIe1 legs, in and out
                case Verb::Write: return 2;
                case Verb::SendRecv: return 3;
            }
            return 0;
        case PathKind::HostSocDma:
            return verb == Verb::Write ? 1 : 2;
    }
    return 0;
}

// Requester posting cost above the RNIC baseline's MMIO, in microseconds.
double posting_delta_us(const HardwareConfig& cfg, const Path& path) {
    const LatencyParams& lat = cfg.latencies;
    switch (path.kind) {
        case PathKind::ClientToHost:
        case PathKind::ClientToSoc:
            return 0.0;  // clients post through their own RNIC
        case PathKind::HostSocRdma:
            if (path.direction == HostSocDirection::S2H) {
                return lat.mmio_soc_cycles / kSocGhz / 1000.0 -
                       kRnicMmioCycles / kHostGhz / 1000.0;
            }
            return (lat.mmio_host_cycles - kRnicMmioCycles) / kHostGhz / 1000.0;
        case PathKind::HostSocDma:
            // DMA jobs are submitted by SoC cores in either direction; the
            // descriptor write runs at SoC DRAM speed, not MMIO speed.
            return lat.soc_dram_ns / 1000.0;
    }
    return 0.0;
}

bool responder_is_soc(const Path& path) {
    return responder_memory(path) == SkewTarget::Soc;
}

}  // namespace

double path_latency(const HardwareConfig& cfg, const Path& path, Verb verb,
                    std::uint64_t payload_bytes, int doorbell_batch) {
    if (payload_bytes == 0) {
        fail(ErrorCode::ValidationError, "payload must be >= 1");
    }
    if (doorbell_batch < 1) {
        fail(ErrorCode::ValidationError, "doorbell_batch must be >= 1");
    }
    if (path.kind == PathKind::HostSocDma && verb == Verb::SendRecv) {
        fail(ErrorCode::UnsupportedVerbForPath, "host-soc-dma supports READ/WRITE only");
    }
    const LatencyParams& lat = cfg.latencies;

    double us = 0.0;
    switch (verb) {
        case Verb::Read: us = lat.base_read_us; break;
        case Verb::Write: us = lat.base_write_us; break;
        case Verb::SendRecv: us = lat.base_sendrecv_us; break;
    }
    us += switch_crossings(path, verb) * lat.switch_cross_ns / 1000.0;
    us += posting_delta_us(cfg, path) / doorbell_batch;
    if (path.intra_machine()) {
        us -= 2.0 * lat.net_oneway_us;  // no wire round trip
    }
    if (responder_is_soc(path)) {
        us += (lat.soc_dram_ns - lat.host_dram_ns) / 1000.0;
    }
    if (payload_bytes > kSerializationFloorBytes) {
        const double cap_gbps = effective_path_cap(cfg, path, verb, payload_bytes);
        us += static_cast<double>(payload_bytes) * 8.0 / (cap_gbps * 1000.0);
    }
    return us;
}

double skew_throughput(const HardwareConfig& cfg, SkewTarget target, Verb verb,
                       std::uint64_t address_range_bytes) {
    if (address_range_bytes < 64) {
        fail(ErrorCode::ValidationError, "address range must be >= 64 B");
    }
    const SkewTable& table =
        target == SkewTarget::Soc ? cfg.skew_table_soc : cfg.skew_table_host_ddio;
    auto it = table.samples.find(verb);
    if (it == table.samples.end() || it->second.empty()) {
        fail(ErrorCode::EmptySkewTable,
             std::string("no skew samples for ") + to_string(target) + "/" +
                 to_string(verb));
    }
    const auto& samples = it->second;
    const double range = static_cast<double>(address_range_bytes);
    if (range <= static_cast<double>(samples.front().first)) {
        return samples.front().second;
    }
    if (range >= static_cast<double>(samples.back().first)) {
        return samples.back().second;
    }
    for (std::size_t i = 1; i < samples.size(); ++i) {
        const double x0 = static_cast<double>(samples[i - 1].first);
        const double x1 = static_cast<double>(samples[i].first);
        if (range <= x1) {
            const double t = (range - x0) / (x1 - x0);
            return samples[i - 1].second + t * (samples[i].second - samples[i - 1].second);
        }
    }
    return samples.back().second;
}

double doorbell_multiplier(const HardwareConfig&, DoorbellSide side, int batch) {
    if (batch < 1) {
        fail(ErrorCode::ValidationError, "batch must be >= 1");
    }
    const double b = static_cast<double>(batch);
    auto interp = [b](std::initializer_list<std::pair<double, double>> points) {
        auto it = points.begin();
        if (b <= it->first) return it->second;
        auto prev = it;
        for (++it; it != points.end(); ++it) {
            if (b <= it->first) {
                const double t = (b - prev->first) / (it->first - prev->first);
                return prev->second + t * (it->second - prev->second);
            }
            prev = it;
        }
        return prev->second;  // clamp past the table
    };
    switch (side) {
        case DoorbellSide::Soc:
            return interp({{1.0, 1.0}, {16.0, 2.7}, {80.0, 4.6}});
        case DoorbellSide::Host:
            // Batching hurts the host side; the penalty fades past 48.
            if (batch > 48) return 1.0;
            return interp({{1.0, 1.0}, {16.0, 0.91}, {32.0, 0.93}, {48.0, 0.94}});
        case DoorbellSide::Client:
            return interp({{1.0, 1.0}, {16.0, 1.02}, {80.0, 1.30}});
    }
    return 1.0;
}

std::vector<std::uint64_t> segment_transfer(std::uint64_t total_bytes,
                                            std::uint64_t chunk_bytes) {
    if (chunk_bytes == 0) {
        fail(ErrorCode::ValidationError, "chunk must be >= 1");
    }
    std::vector<std::uint64_t> chunks;
    chunks.reserve(total_bytes / chunk_bytes + 1);
    while (total_bytes >= chunk_bytes) {
        chunks.push_back(chunk_bytes);
        total_bytes -= chunk_bytes;
    }
    if (total_bytes > 0) chunks.push_back(total_bytes);
    return chunks;
}

void write_allocation_csv(std::ostream& out, const std::vector<FlowSpec>& flows,
                          const AllocationReport& report) {
    out << "flow_id,path,verb,rate_gbps,bottleneck\n";
    for (std::size_t f = 0; f < flows.size(); ++f) {
        out << f << "," << to_string(flows[f].path) << "," << to_string(flows[f].verb)
            << "," << report.per_flow_rate_gbps[f] << ","
            << report.per_flow_bottleneck[f] << "\n";
    }
}

std::string allocation_json_summary(const AllocationReport& report) {
    nlohmann::json doc;
    doc["total_goodput_gbps"] = report.total_goodput_gbps;
    doc["bottleneck"] = report.bottleneck;
    nlohmann::json util = nlohmann::json::object();
    for (DirectedLink link : all_directed_links()) {
        util[to_string(link)] = report.per_link_utilization[static_cast<int>(link)];
    }
    doc["per_link_utilization"] = util;
    return doc.dump(2);
}

}  // namespace snicpath
