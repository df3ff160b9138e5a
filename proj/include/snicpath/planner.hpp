#pragma once

#include <map>
#include <string>
#include <vector>

#include "snicpath/analytic.hpp"
#include "snicpath/hw_model.hpp"
#include "snicpath/workloads.hpp"

namespace snicpath {

// ---------------------------------------------------------------------------
// Hybrid file replication: split goodput between a host-direct stream H
// (uncompressed, path (1)) and an offloaded stream S (compressed on the
// SoC, read over path (3)). Maximizes H + S subject to
//   H + S + S*ratio <= P      (PCIe1 budget; the offloaded bytes pass twice)
//   H + S*ratio     <= N      (wire budget)
// ---------------------------------------------------------------------------

struct ReplicationPlan {
    double offload_gbps = 0.0;      // S
    double host_direct_gbps = 0.0;  // H
    double ratio = 0.0;             // compressed / uncompressed
    double goodput_gbps = 0.0;      // H + S
    double pcie_residual_gbps = 0.0;  // slack of the PCIe1 constraint
    double net_residual_gbps = 0.0;   // slack of the wire constraint
};

// Peak goodput of the offload-only scheme: min(P/(1+ratio), N/ratio).
double a1_limit(double pcie_gbps, double net_gbps, double ratio);

// Compression ratio at which the offload-only scheme matches the
// uncompressed wire bound: P/N - 1. Requires P > N > 0.
double break_even_ratio(double pcie_gbps, double net_gbps);

ReplicationPlan plan_hybrid_replication(double pcie_gbps, double net_gbps, double ratio);

// ---------------------------------------------------------------------------
// Alternative evaluation and greedy combination
// ---------------------------------------------------------------------------

enum class CaseStudy { Replication, Kv };

struct AlternativeProfile {
    std::string id;
    double latency_us = 0.0;
    double peak_throughput = 0.0;  // in `unit`
    std::string unit;              // "Gbps" or "Mreqs/s"
    std::map<std::string, double> resource_vector;  // consumption per unit work
    double criteria_score = 0.0;
};

// Small-request processing capacities for the key-value case, M ops/s.
// Calibrated so the per-alternative peaks match the measured fixtures.
struct KvPathCapacities {
    double host_endpoint_mops = 100.0;  // ops against host memory, path (1)
    double soc_endpoint_mops = 140.0;   // ops against SoC memory, path (2)
    double shared_mops = 99.11;         // common NIC-core pool, in (1)-op units
    double soc_op_cost = 0.7;           // NIC cost of a (2)-op relative to a (1)-op
    double soc_get_capacity_mrps = 17.6;  // SENDRECV get service on the SoC cores
    double soc_get_service_us = 1.89;     // SoC-side work per SENDRECV get
};

struct ReplicationCaseParams {
    double soc_pipeline_gbps = 133.0;  // SoC chunk digest/compress ceiling
    double host_cpu_cores_per_gbps_direct = 0.05;   // host-direct write path
    double host_cpu_cores_per_gbps_offload = 0.005;  // control path only
};

// Ranking weights; score = -w_latency*latency + w_throughput*peak
//                          - w_host_cpu*cpu + w_net_saving*saving.
struct Criteria {
    double w_latency = 0.0;
    double w_throughput = 0.0;
    double w_host_cpu = 0.0;
    double w_net_saving = 0.0;

    static Criteria kv_defaults() { return {1.0, 0.0, 0.0, 0.0}; }
    static Criteria replication_defaults() { return {0.0, 0.001, 1.0, 10.0}; }
};

double criteria_score(const Criteria& criteria, double latency_us, double peak,
                      double host_cpu_per_unit, double net_saving_per_unit);

// Resource capacities a combined plan draws from.
std::map<std::string, double> kv_capacities(const HardwareConfig& cfg,
                                            const KvPathCapacities& caps);
std::map<std::string, double> replication_capacities(const HardwareConfig& cfg,
                                                     const ReplicationCaseParams& params);

// Known alternatives: replication A1..A3; kv A1..A5 with A5 split into
// "A5-sendrecv" and "A5-read". Throws UnknownAlternative otherwise.
AlternativeProfile eval_kv_alternative(const std::string& alt_id,
                                       const HardwareConfig& cfg,
                                       const KvWorkloadSpec& workload,
                                       const KvPathCapacities& caps = {},
                                       const Criteria& criteria = Criteria::kv_defaults());
AlternativeProfile eval_replication_alternative(
    const std::string& alt_id, const HardwareConfig& cfg,
    const ReplicationWorkloadSpec& workload, const ReplicationCaseParams& params = {},
    const Criteria& criteria = Criteria::replication_defaults());

std::vector<std::string> known_alternatives(CaseStudy case_study);

struct CombinedAssignment {
    std::string alt_id;
    double load;                   // in the case's unit
    std::string binding_resource;  // what stopped this alternative
};

struct CombinedPlan {
    std::vector<CombinedAssignment> assignments;  // ranked order
    std::vector<double> switch_points;            // cumulative load at each handoff
    double total = 0.0;
    std::string unit;
};

// Ranks profiles by criteria_score and loads each in turn until one of its
// resources saturates, then spills to the next.
CombinedPlan greedy_combine(std::vector<AlternativeProfile> profiles,
                            std::map<std::string, double> capacities);

// Number of clients served on the fast path before spilling:
// floor(soc_capacity * rho_max / per_client_demand).
int kv_switch_point(double soc_capacity_mrps, double per_client_demand_mrps,
                    double rho_max = 1.0);

std::string plan_to_json(const CombinedPlan& plan);
std::string plan_to_json(const ReplicationPlan& plan);
std::string plan_to_table(const CombinedPlan& plan,
                          const std::vector<AlternativeProfile>& profiles);

}  // namespace snicpath
