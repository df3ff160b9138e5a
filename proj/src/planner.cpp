#include "snicpath/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace snicpath {

double a1_limit(double pcie_gbps, double net_gbps, double ratio) {
    if (ratio < 0) fail(ErrorCode::NegativeRatio, "compression ratio must be >= 0");
    if (pcie_gbps <= 0 || net_gbps <= 0) {
        fail(ErrorCode::InvalidCapacities, "capacities must be positive");
    }
    const double pcie_bound = pcie_gbps / (1.0 + ratio);
    if (ratio == 0.0) return pcie_bound;
    return std::min(pcie_bound, net_gbps / ratio);
}

double break_even_ratio(double pcie_gbps, double net_gbps) {
    if (net_gbps <= 0 || pcie_gbps <= net_gbps) {
        fail(ErrorCode::InvalidCapacities, "break-even needs P > N > 0");
    }
    return pcie_gbps / net_gbps - 1.0;
}

ReplicationPlan plan_hybrid_replication(double pcie_gbps, double net_gbps, double ratio) {
    if (ratio < 0) fail(ErrorCode::NegativeRatio, "compression ratio must be >= 0");
    if (pcie_gbps <= 0 || net_gbps <= 0) {
        fail(ErrorCode::InvalidCapacities, "capacities must be positive");
    }
    const double P = pcie_gbps;
    const double N = net_gbps;

    // Two-variable LP: the optimum sits on a vertex of the feasible
    // polytope. Candidates: all on host, all offloaded, both constraints
    // tight. Ties prefer the smaller offload (keeps PCIe headroom).
    struct Vertex {
        double h, s;
    };
    std::vector<Vertex> vertices;
    vertices.push_back({std::min(P, N), 0.0});
    {
        const double s_max =
            ratio > 0 ? std::min(P / (1.0 + ratio), N / ratio) : P / (1.0 + ratio);
        vertices.push_back({0.0, s_max});
    }
    {
        const double s = P - N;
        const double h = N - s * ratio;
        if (s >= 0 && h >= 0) vertices.push_back({h, s});
    }

    Vertex best = vertices.front();
    for (const Vertex& v : vertices) {
        const double goodput = v.h + v.s;
        const double best_goodput = best.h + best.s;
        if (goodput > best_goodput + 1e-12 ||
            (std::abs(goodput - best_goodput) <= 1e-12 && v.s < best.s)) {
            best = v;
        }
    }

    ReplicationPlan plan;
    plan.offload_gbps = best.s;
    plan.host_direct_gbps = best.h;
    plan.ratio = ratio;
    plan.goodput_gbps = best.h + best.s;
    plan.pcie_residual_gbps = P - (best.h + best.s + best.s * ratio);
    plan.net_residual_gbps = N - (best.h + best.s * ratio);
    return plan;
}

double criteria_score(const Criteria& criteria, double latency_us, double peak,
                      double host_cpu_per_unit, double net_saving_per_unit) {
    return -criteria.w_latency * latency_us + criteria.w_throughput * peak -
           criteria.w_host_cpu * host_cpu_per_unit +
           criteria.w_net_saving * net_saving_per_unit;
}

// ---------------------------------------------------------------------------
// Case-study resource models
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kHostEndpoint = "nic:host-endpoint";
constexpr const char* kSocEndpoint = "nic:soc-endpoint";
constexpr const char* kSharedPool = "nic:shared";
constexpr const char* kSocGetCpu = "soc:get-cpu";
constexpr const char* kSocPipeline = "soc:pipeline";
constexpr const char* kHostCpu = "host:cores";
constexpr const char* kDmaEngine = "engine:dma";

// Gbps carried per M reqs/s moving `bytes` per request.
double gbps_per_mrps(double bytes) { return bytes * 8.0 / 1000.0; }

void add_link_loads(std::map<std::string, double>& vec, const Path& path, Verb verb,
                    double gbps_per_unit) {
    if (gbps_per_unit <= 0) return;
    const LinkLoad load = link_loads(path, verb);
    for (DirectedLink link : all_directed_links()) {
        if (load[link] > 0) {
            vec[to_string(link)] += load[link] * gbps_per_unit;
        }
    }
}

double peak_from_vector(const std::map<std::string, double>& vec,
                        const std::map<std::string, double>& capacities) {
    double peak = std::numeric_limits<double>::infinity();
    for (const auto& [name, usage] : vec) {
        if (usage <= 0) continue;
        auto it = capacities.find(name);
        if (it == capacities.end()) continue;
        peak = std::min(peak, it->second / usage);
    }
    return peak;
}

void add_common_link_capacities(std::map<std::string, double>& caps,
                                const HardwareConfig& cfg) {
    caps[to_string(DirectedLink::HostToSwitch)] = cfg.pcie0_bw_per_dir_gbps;
    caps[to_string(DirectedLink::SwitchToHost)] = cfg.pcie0_bw_per_dir_gbps;
    caps[to_string(DirectedLink::SwitchToNic)] = cfg.pcie1_bw_per_dir_gbps;
    caps[to_string(DirectedLink::NicToSwitch)] = cfg.pcie1_bw_per_dir_gbps;
    caps[to_string(DirectedLink::SwitchToSoc)] = cfg.soc_link_bw_per_dir_gbps;
    caps[to_string(DirectedLink::SocToSwitch)] = cfg.soc_link_bw_per_dir_gbps;
    caps[to_string(DirectedLink::NicToWire)] = cfg.net_bw_per_dir_gbps;
    caps[to_string(DirectedLink::WireToNic)] = cfg.net_bw_per_dir_gbps;
}

}  // namespace

std::map<std::string, double> kv_capacities(const HardwareConfig& cfg,
                                            const KvPathCapacities& caps) {
    std::map<std::string, double> out;
    add_common_link_capacities(out, cfg);
    out[kHostEndpoint] = caps.host_endpoint_mops;
    out[kSocEndpoint] = caps.soc_endpoint_mops;
    out[kSharedPool] = caps.shared_mops;
    out[kSocGetCpu] = caps.soc_get_capacity_mrps;
    out[kDmaEngine] = 1.0;
    return out;
}

std::map<std::string, double> replication_capacities(const HardwareConfig& cfg,
                                                     const ReplicationCaseParams& params) {
    std::map<std::string, double> out;
    add_common_link_capacities(out, cfg);
    out[kSocPipeline] = params.soc_pipeline_gbps;
    out[kHostCpu] = static_cast<double>(cfg.core_counts.host_cores);
    out[kDmaEngine] = 1.0;
    return out;
}

AlternativeProfile eval_kv_alternative(const std::string& alt_id,
                                       const HardwareConfig& cfg,
                                       const KvWorkloadSpec& workload,
                                       const KvPathCapacities& caps,
                                       const Criteria& criteria) {
    validate_kv_spec(workload);
    const double bucket_bytes = 64.0;
    const double value_bytes =
        static_cast<double>(workload.key_bytes + workload.value_bytes);
    const Path p1 = Path::client_to_host();
    const Path p2 = Path::client_to_soc();
    const Path dma = Path::host_soc_dma(HostSocDirection::S2H);
    const auto lat1_read = path_latency(cfg, p1, Verb::Read, 64, 1);
    const auto lat2_read = path_latency(cfg, p2, Verb::Read, 64, 1);
    const auto lat2_sr = path_latency(cfg, p2, Verb::SendRecv, 64, 1);
    const auto lat_dma_read = path_latency(cfg, dma, Verb::Read, 64, 1);

    AlternativeProfile profile;
    profile.id = alt_id;
    profile.unit = "Mreqs/s";
    std::map<std::string, double>& vec = profile.resource_vector;

    if (alt_id == "A1") {
        // Index lookup plus value fetch, both against host memory.
        profile.latency_us = 2.0 * lat1_read;
        vec[kHostEndpoint] = 2.0;
        vec[kSharedPool] = 2.0;
        add_link_loads(vec, p1, Verb::Read, gbps_per_mrps(bucket_bytes + value_bytes));
    } else if (alt_id == "A2") {
        // SENDRECV to the SoC; the SoC walks the host-resident index and
        // fetches the value over DMA, blocking its core on both reads.
        const double service_us = caps.soc_get_service_us + 2.0 * lat_dma_read;
        profile.latency_us = lat2_sr + service_us;
        vec[kSocEndpoint] = 1.0;
        vec[kSharedPool] = caps.soc_op_cost;
        vec[kSocGetCpu] = service_us / caps.soc_get_service_us;
        vec[kDmaEngine] =
            gbps_per_mrps(bucket_bytes + value_bytes) / cfg.dma_engine.read_bw_cap_gbps;
        add_link_loads(vec, p2, Verb::SendRecv, gbps_per_mrps(value_bytes));
        add_link_loads(vec, dma, Verb::Read, gbps_per_mrps(bucket_bytes + value_bytes));
    } else if (alt_id == "A3") {
        // Index lives in SoC memory; only the value fetch crosses to host.
        const double service_us = caps.soc_get_service_us + lat_dma_read;
        profile.latency_us = lat2_sr + service_us;
        vec[kSocEndpoint] = 1.0;
        vec[kSharedPool] = caps.soc_op_cost;
        vec[kSocGetCpu] = service_us / caps.soc_get_service_us;
        vec[kDmaEngine] = gbps_per_mrps(value_bytes) / cfg.dma_engine.read_bw_cap_gbps;
        add_link_loads(vec, p2, Verb::SendRecv, gbps_per_mrps(value_bytes));
        add_link_loads(vec, dma, Verb::Read, gbps_per_mrps(value_bytes));
    } else if (alt_id == "A4") {
        // READ the index from SoC memory, READ the value from host memory.
        profile.latency_us = lat2_read + lat1_read;
        vec[kHostEndpoint] = 1.0;
        vec[kSocEndpoint] = 1.0;
        vec[kSharedPool] = 1.0 + caps.soc_op_cost;
        add_link_loads(vec, p2, Verb::Read, gbps_per_mrps(bucket_bytes));
        add_link_loads(vec, p1, Verb::Read, gbps_per_mrps(value_bytes));
    } else if (alt_id == "A5-read") {
        // Index and hot values both cached in SoC memory.
        profile.latency_us = 2.0 * lat2_read;
        vec[kSocEndpoint] = 2.0;
        vec[kSharedPool] = 2.0 * caps.soc_op_cost;
        add_link_loads(vec, p2, Verb::Read, gbps_per_mrps(bucket_bytes + value_bytes));
    } else if (alt_id == "A5-sendrecv") {
        // One SENDRECV served entirely from the SoC value cache. On a miss
        // the SoC returns the value address and the client reads the host.
        const double miss = cache_fit_miss_rate(workload);
        profile.latency_us = lat2_sr + caps.soc_get_service_us + miss * lat1_read;
        vec[kSocEndpoint] = 1.0;
        vec[kSharedPool] = caps.soc_op_cost + miss;
        vec[kSocGetCpu] = 1.0;
        vec[kHostEndpoint] = miss;
        add_link_loads(vec, p2, Verb::SendRecv, gbps_per_mrps(value_bytes));
        if (miss > 0) {
            add_link_loads(vec, p1, Verb::Read, miss * gbps_per_mrps(value_bytes));
        }
    } else {
        fail(ErrorCode::UnknownAlternative, "unknown kv alternative " + alt_id);
    }

    profile.peak_throughput = peak_from_vector(vec, kv_capacities(cfg, caps));
    profile.criteria_score =
        criteria_score(criteria, profile.latency_us, profile.peak_throughput,
                       /*host_cpu_per_unit=*/0.0, /*net_saving_per_unit=*/0.0);
    return profile;
}

AlternativeProfile eval_replication_alternative(const std::string& alt_id,
                                                const HardwareConfig& cfg,
                                                const ReplicationWorkloadSpec& workload,
                                                const ReplicationCaseParams& params,
                                                const Criteria& criteria) {
    validate_replication_spec(workload);
    const double ratio = workload.compression_ratio;
    const std::uint64_t chunk = workload.chunk_bytes;
    const Path rdma = Path::host_soc_rdma(HostSocDirection::S2H);
    const Path dma = Path::host_soc_dma(HostSocDirection::S2H);
    const Path soc_egress = Path::client_to_soc();   // SoC memory -> wire byte path
    const Path host_egress = Path::client_to_host();  // host memory -> wire byte path

    AlternativeProfile profile;
    profile.id = alt_id;
    profile.unit = "Gbps";
    std::map<std::string, double>& vec = profile.resource_vector;
    double host_cpu_per_gbps = 0.0;
    double net_saving = 0.0;

    if (alt_id == "A1") {
        // Full offload over RDMA: the SoC reads each chunk through the NIC
        // (both PCIe1 directions), compresses it, and ships it out.
        profile.latency_us = path_latency(cfg, rdma, Verb::Read, chunk, 1) +
                             path_latency(cfg, soc_egress, Verb::Write,
                                          std::max<std::uint64_t>(
                                              1, static_cast<std::uint64_t>(chunk * ratio)),
                                          1);
        add_link_loads(vec, rdma, Verb::Read, 1.0);
        add_link_loads(vec, soc_egress, Verb::Read, ratio);  // egress byte path
        vec[kSocPipeline] = 1.0;
        host_cpu_per_gbps = params.host_cpu_cores_per_gbps_offload;
        net_saving = 1.0 - ratio;
    } else if (alt_id == "A2") {
        // Same offload, but the chunk read bypasses PCIe1 via the DMA engine.
        profile.latency_us = path_latency(cfg, dma, Verb::Read, chunk, 1) +
                             path_latency(cfg, soc_egress, Verb::Write,
                                          std::max<std::uint64_t>(
                                              1, static_cast<std::uint64_t>(chunk * ratio)),
                                          1);
        add_link_loads(vec, dma, Verb::Read, 1.0);
        vec[kDmaEngine] = 1.0 / cfg.dma_engine.read_bw_cap_gbps;
        add_link_loads(vec, soc_egress, Verb::Read, ratio);
        vec[kSocPipeline] = 1.0;
        host_cpu_per_gbps = params.host_cpu_cores_per_gbps_offload;
        net_saving = 1.0 - ratio;
    } else if (alt_id == "A3") {
        // Host-direct WRITE to the backup, uncompressed.
        profile.latency_us = path_latency(cfg, host_egress, Verb::Write, chunk, 1);
        add_link_loads(vec, host_egress, Verb::Read, 1.0);  // host memory -> wire
        host_cpu_per_gbps = params.host_cpu_cores_per_gbps_direct;
        net_saving = 0.0;
    } else {
        fail(ErrorCode::UnknownAlternative, "unknown replication alternative " + alt_id);
    }

    vec[kHostCpu] = host_cpu_per_gbps;
    profile.peak_throughput = peak_from_vector(vec, replication_capacities(cfg, params));
    profile.criteria_score = criteria_score(criteria, profile.latency_us,
                                            profile.peak_throughput, host_cpu_per_gbps,
                                            net_saving);
    return profile;
}

std::vector<std::string> known_alternatives(CaseStudy case_study) {
    if (case_study == CaseStudy::Replication) return {"A1", "A2", "A3"};
    return {"A1", "A2", "A3", "A4", "A5-read", "A5-sendrecv"};
}

CombinedPlan greedy_combine(std::vector<AlternativeProfile> profiles,
                            std::map<std::string, double> capacities) {
    if (profiles.empty()) {
        fail(ErrorCode::Infeasible, "no alternatives to combine");
    }
    std::stable_sort(profiles.begin(), profiles.end(),
                     [](const AlternativeProfile& a, const AlternativeProfile& b) {
                         return a.criteria_score > b.criteria_score;
                     });

    CombinedPlan plan;
    plan.unit = profiles.front().unit;
    for (const AlternativeProfile& profile : profiles) {
        double load = std::numeric_limits<double>::infinity();
        std::string binding = "unconstrained";
        for (const auto& [name, usage] : profile.resource_vector) {
            if (usage <= 0) continue;
            auto it = capacities.find(name);
            if (it == capacities.end()) continue;
            const double fit = std::max(0.0, it->second) / usage;
            if (fit < load) {
                load = fit;
                binding = name;
            }
        }
        if (!std::isfinite(load)) load = 0.0;
        if (load <= 1e-12) continue;
        for (const auto& [name, usage] : profile.resource_vector) {
            auto it = capacities.find(name);
            if (it != capacities.end()) it->second -= usage * load;
        }
        if (!plan.assignments.empty()) {
            plan.switch_points.push_back(plan.total);
        }
        plan.assignments.push_back({profile.id, load, binding});
        plan.total += load;
    }
    if (plan.assignments.empty()) {
        fail(ErrorCode::Infeasible, "no alternative has positive capacity");
    }
    return plan;
}

int kv_switch_point(double soc_capacity_mrps, double per_client_demand_mrps,
                    double rho_max) {
    if (soc_capacity_mrps <= 0 || per_client_demand_mrps <= 0 || rho_max <= 0) {
        fail(ErrorCode::ValidationError, "switch point inputs must be positive");
    }
    return static_cast<int>(std::floor(soc_capacity_mrps * rho_max /
                                       per_client_demand_mrps));
}

std::string plan_to_json(const CombinedPlan& plan) {
    nlohmann::json doc;
    doc["unit"] = plan.unit;
    doc["total"] = plan.total;
    doc["switch_points"] = plan.switch_points;
    nlohmann::json assignments = nlohmann::json::array();
    for (const CombinedAssignment& a : plan.assignments) {
        assignments.push_back({{"alternative", a.alt_id},
                               {"load", a.load},
                               {"binding_resource", a.binding_resource}});
    }
    doc["assignments"] = assignments;
    return doc.dump(2);
}

std::string plan_to_json(const ReplicationPlan& plan) {
    nlohmann::json doc;
    doc["offload_gbps"] = plan.offload_gbps;
    doc["host_direct_gbps"] = plan.host_direct_gbps;
    doc["ratio"] = plan.ratio;
    doc["goodput_gbps"] = plan.goodput_gbps;
    doc["pcie_residual_gbps"] = plan.pcie_residual_gbps;
    doc["net_residual_gbps"] = plan.net_residual_gbps;
    return doc.dump(2);
}

std::string plan_to_table(const CombinedPlan& plan,
                          const std::vector<AlternativeProfile>& profiles) {
    std::ostringstream out;
    out << "alternative  latency_us  peak(" << plan.unit << ")  score\n";
    for (const AlternativeProfile& p : profiles) {
        out << "  " << p.id << "  " << p.latency_us << "  " << p.peak_throughput << "  "
            << p.criteria_score << "\n";
    }
    out << "combined plan (total " << plan.total << " " << plan.unit << "):\n";
    for (const CombinedAssignment& a : plan.assignments) {
        out << "  " << a.alt_id << " carries " << a.load << " " << plan.unit
            << " until " << a.binding_resource << " saturates\n";
    }
    return out.str();
}

}  // namespace snicpath
