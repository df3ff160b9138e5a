#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "snicpath/analytic.hpp"
#include "snicpath/hw_model.hpp"
#include "snicpath/workloads.hpp"

namespace snicpath {

struct SimFlow {
    FlowSpec spec;
    int multiplicity = 1;  // client threads driving this flow
    int depth = 16;        // outstanding requests per thread (closed loop)
};

struct Scenario {
    HardwareConfig cfg = bluefield2_defaults();
    EfficiencyMap efficiency;
    std::vector<SimFlow> flows;
    double duration_s = 1.0;
    double warmup_s = 0.1;
    std::uint64_t seed = 42;
    // Optional workload sections, consumed by the planner subcommands.
    std::optional<KvWorkloadSpec> kv_workload;
    std::optional<ReplicationWorkloadSpec> replication_workload;
};

// Parses the scenario text format (top-level key = value plus one [flow]
// section per flow). Unknown keys are rejected with the line number.
Scenario build_scenario(const std::string& content);
Scenario load_scenario_file(const std::string& path);

struct FlowMetrics {
    double throughput_gbps = 0.0;
    double throughput_mrps = 0.0;
    double p50_us = 0.0;
    double p99_us = 0.0;
    std::uint64_t issued = 0;
    std::uint64_t completed = 0;        // inside the measurement window
    std::uint64_t total_completed = 0;  // over the whole run
    std::uint64_t in_flight_at_end = 0;
};

struct SimMetrics {
    std::vector<FlowMetrics> flows;
    std::map<std::string, double> resource_utilization;
    std::uint64_t event_count = 0;
    double window_s = 0.0;
};

// Deterministic request-level execution: posting, NIC-core service, every
// loaded directed link as a FIFO rate server, memory service under skew,
// responder CPU for SENDRECV, and the DMA engine for (3*). Identical
// (scenario, seed) inputs give bit-identical metrics.
SimMetrics run_simulation(const Scenario& scenario);

struct DivergenceReport {
    std::vector<double> per_flow_rel_error;
    double max_rel_error = 0.0;
};

// Steady-state simulated rates vs. allocate_bandwidth. Throws NotComparable
// for scenarios the closed forms do not cover (no flows, or payloads past
// an anomaly cliff).
DivergenceReport compare_with_analytic(const Scenario& scenario);

void write_metrics_csv(std::ostream& out, const Scenario& scenario,
                       const SimMetrics& metrics);
std::string metrics_to_json(const Scenario& scenario, const SimMetrics& metrics);

}  // namespace snicpath
