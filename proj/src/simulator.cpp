#include "snicpath/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "json.hpp"

namespace snicpath {

// ---------------------------------------------------------------------------
// Scenario parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void parse_fail(int lineno, const std::string& message) {
    fail(ErrorCode::ParseError, "scenario line " + std::to_string(lineno) + ": " + message);
}

double parse_number(const std::string& value, int lineno) {
    try {
        return std::stod(value);
    } catch (const std::exception&) {
        parse_fail(lineno, "expected a number, got '" + value + "'");
    }
}

}  // namespace

Scenario build_scenario(const std::string& content) {
    Scenario scenario;
    std::istringstream in(content);
    std::string line;
    int lineno = 0;
    enum class Section { Top, Flow, KvWorkload, ReplicationWorkload };
    Section section = Section::Top;
    SimFlow flow;
    std::string flow_path = "client-host";
    std::string flow_direction;

    auto finish_flow = [&]() {
        if (section != Section::Flow) return;
        const auto path = path_from_string(flow_path, flow_direction);
        if (!path) {
            fail(ErrorCode::ValidationError, "unknown path " + flow_path);
        }
        flow.spec.path = *path;
        scenario.flows.push_back(flow);
        flow = SimFlow{};
        flow_path = "client-host";
        flow_direction.clear();
    };

    while (std::getline(in, line)) {
        ++lineno;
        std::string text = trim(line);
        const auto hash = text.find('#');
        if (hash != std::string::npos) text = trim(text.substr(0, hash));
        if (text.empty()) continue;
        if (text == "[flow]") {
            finish_flow();
            section = Section::Flow;
            continue;
        }
        if (text == "[kv_workload]") {
            finish_flow();
            section = Section::KvWorkload;
            scenario.kv_workload.emplace();
            continue;
        }
        if (text == "[replication_workload]") {
            finish_flow();
            section = Section::ReplicationWorkload;
            scenario.replication_workload.emplace();
            continue;
        }
        if (text.front() == '[') parse_fail(lineno, "unknown section " + text);
        const auto eq = text.find('=');
        if (eq == std::string::npos) parse_fail(lineno, "expected key = value");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));

        if (section == Section::Top) {
            if (key == "duration") {
                scenario.duration_s = parse_number(value, lineno);
            } else if (key == "warmup") {
                scenario.warmup_s = parse_number(value, lineno);
            } else if (key == "seed") {
                scenario.seed = static_cast<std::uint64_t>(parse_number(value, lineno));
            } else {
                parse_fail(lineno, "unknown key '" + key + "'");
            }
            continue;
        }
        if (section == Section::KvWorkload) {
            KvWorkloadSpec& kv = *scenario.kv_workload;
            if (key == "n_clients") {
                kv.n_clients = static_cast<int>(parse_number(value, lineno));
            } else if (key == "zipf_theta") {
                kv.zipf_theta = parse_number(value, lineno);
            } else if (key == "key_bytes") {
                kv.key_bytes = static_cast<std::uint32_t>(parse_number(value, lineno));
            } else if (key == "value_bytes") {
                kv.value_bytes = static_cast<std::uint32_t>(parse_number(value, lineno));
            } else if (key == "get_fraction") {
                kv.get_fraction = parse_number(value, lineno);
            } else if (key == "keyspace_size") {
                kv.keyspace_size =
                    static_cast<std::uint64_t>(parse_number(value, lineno));
            } else if (key == "soc_cache_bytes") {
                kv.soc_cache_bytes =
                    static_cast<std::uint64_t>(parse_number(value, lineno));
            } else {
                parse_fail(lineno, "unknown kv_workload key '" + key + "'");
            }
            continue;
        }
        if (section == Section::ReplicationWorkload) {
            ReplicationWorkloadSpec& rep = *scenario.replication_workload;
            if (key == "file_bytes") {
                rep.file_bytes = static_cast<std::uint64_t>(parse_number(value, lineno));
            } else if (key == "io_bytes") {
                rep.io_bytes = static_cast<std::uint64_t>(parse_number(value, lineno));
            } else if (key == "n_clients") {
                rep.n_clients = static_cast<int>(parse_number(value, lineno));
            } else if (key == "compression_ratio") {
                rep.compression_ratio = parse_number(value, lineno);
            } else if (key == "chunk_bytes") {
                rep.chunk_bytes = static_cast<std::uint64_t>(parse_number(value, lineno));
            } else {
                parse_fail(lineno, "unknown replication_workload key '" + key + "'");
            }
            continue;
        }
        if (key == "path") {
            flow_path = value;
        } else if (key == "direction") {
            flow_direction = value;
        } else if (key == "verb") {
            const auto verb = verb_from_string(value);
            if (!verb) parse_fail(lineno, "unknown verb " + value);
            flow.spec.verb = *verb;
        } else if (key == "payload") {
            flow.spec.payload_bytes =
                static_cast<std::uint64_t>(parse_number(value, lineno));
        } else if (key == "demand") {
            flow.spec.demand_gbps = value == "unbounded"
                                        ? FlowSpec::kUnboundedDemand
                                        : parse_number(value, lineno);
        } else if (key == "multiplicity") {
            flow.multiplicity = static_cast<int>(parse_number(value, lineno));
        } else if (key == "depth") {
            flow.depth = static_cast<int>(parse_number(value, lineno));
        } else if (key == "doorbell_batch") {
            flow.spec.doorbell_batch = static_cast<int>(parse_number(value, lineno));
        } else if (key == "address_range") {
            flow.spec.address_range_bytes =
                value == "uniform-large"
                    ? FlowSpec::kUniformLargeRange
                    : static_cast<std::uint64_t>(parse_number(value, lineno));
        } else {
            parse_fail(lineno, "unknown flow key '" + key + "'");
        }
    }
    finish_flow();

    if (!(scenario.duration_s > scenario.warmup_s) || scenario.warmup_s < 0) {
        fail(ErrorCode::ValidationError, "need duration > warmup >= 0");
    }
    for (const SimFlow& f : scenario.flows) {
        if (f.multiplicity < 1 || f.depth < 1) {
            fail(ErrorCode::ValidationError, "multiplicity and depth must be >= 1");
        }
        if (f.spec.payload_bytes == 0) {
            fail(ErrorCode::ValidationError, "payload must be >= 1");
        }
        if (f.spec.doorbell_batch < 1) {
            fail(ErrorCode::ValidationError, "doorbell_batch must be >= 1");
        }
    }
    if (scenario.kv_workload) validate_kv_spec(*scenario.kv_workload);
    if (scenario.replication_workload) {
        validate_replication_spec(*scenario.replication_workload);
    }
    return scenario;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ParseError, "cannot open scenario " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return build_scenario(buffer.str());
}

// ---------------------------------------------------------------------------
// Event-driven execution
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kDmaSmallReqBytes = 4096;

struct Server {
    std::string name;
    double free_at = 0.0;
    double busy = 0.0;

    // FIFO service; returns the completion time.
    double serve(double arrival, double service) {
        const double start = std::max(arrival, free_at);
        free_at = start + service;
        busy += service;
        return free_at;
    }
};

SkewTarget responder_memory(const Path& path) {
    switch (path.kind) {
        case PathKind::ClientToHost:
            return SkewTarget::HostDdio;
        case PathKind::ClientToSoc:
            return SkewTarget::Soc;
        default:
            return path.direction == HostSocDirection::S2H ? SkewTarget::HostDdio
                                                           : SkewTarget::Soc;
    }
}

// Propagation/processing latency per request, excluding the serialization
// share that the rate servers already charge.
double fixed_latency_s(const HardwareConfig& cfg, const FlowSpec& spec) {
    double us = path_latency(cfg, spec.path, spec.verb, std::min<std::uint64_t>(
                                                            spec.payload_bytes, 1024),
                             spec.doorbell_batch);
    return us * 1e-6;
}

struct Stage {
    int server = -1;
    double service_s = 0.0;  // packet count for the NIC stage, seconds otherwise
    bool nic = false;
};

struct FlowRuntime {
    std::vector<Stage> stages;
    double fixed_latency_s = 0.0;
    bool open_loop = false;
    double arrival_interval_s = 0.0;  // open loop only
};

struct Request {
    int flow = 0;
    double issue_time = 0.0;
    std::size_t next_stage = 0;
    bool spawned_successor = false;  // open-loop arrivals only
};

struct Event {
    double time;
    std::uint64_t seq;
    std::size_t request;

    bool operator>(const Event& other) const {
        return time != other.time ? time > other.time : seq > other.seq;
    }
};

}  // namespace

SimMetrics run_simulation(const Scenario& scenario) {
    const HardwareConfig& cfg = scenario.cfg;
    std::vector<Server> servers;
    auto add_server = [&](const std::string& name) {
        servers.push_back({name});
        return static_cast<int>(servers.size() - 1);
    };

    std::array<int, kNumDirectedLinks> link_server{};
    for (DirectedLink link : all_directed_links()) {
        link_server[static_cast<int>(link)] = add_server(to_string(link));
    }
    const int nic_shared = add_server("nic:shared-cores");
    int nic_reserved_host = -1;
    int nic_reserved_soc = -1;
    if (cfg.core_counts.nic_cores_reserved_per_endpoint > 0) {
        nic_reserved_host = add_server("nic:reserved-host");
        nic_reserved_soc = add_server("nic:reserved-soc");
    }
    const int soc_cpu = add_server("cpu:soc");
    const int host_cpu = add_server("cpu:host");
    const int dma_engine = add_server("engine:dma");
    const int mem_host = add_server("mem:host");
    const int mem_soc = add_server("mem:soc");

    const int total_nic_cores = cfg.core_counts.nic_cores_shared +
                                2 * cfg.core_counts.nic_cores_reserved_per_endpoint;
    const double per_core_mpps =
        cfg.nic_pkt_rate_cap_mpps / static_cast<double>(total_nic_cores);
    const double shared_rate_pps =
        per_core_mpps * cfg.core_counts.nic_cores_shared * 1e6;
    const double reserved_rate_pps =
        per_core_mpps * cfg.core_counts.nic_cores_reserved_per_endpoint * 1e6;

    auto link_rate_bps = [&](DirectedLink link) {
        double gbps = 0.0;
        switch (link) {
            case DirectedLink::HostToSwitch:
            case DirectedLink::SwitchToHost:
                gbps = cfg.pcie0_bw_per_dir_gbps;
                break;
            case DirectedLink::SwitchToNic:
            case DirectedLink::NicToSwitch:
                gbps = cfg.pcie1_bw_per_dir_gbps;
                break;
            case DirectedLink::SwitchToSoc:
            case DirectedLink::SocToSwitch:
                gbps = cfg.soc_link_bw_per_dir_gbps;
                break;
            case DirectedLink::NicToWire:
            case DirectedLink::WireToNic:
                gbps = cfg.net_bw_per_dir_gbps;
                break;
        }
        return gbps * scenario.efficiency[link] * 0.125e9;  // bytes/s
    };

    // Per-flow stage chains (service time is constant per request).
    std::vector<FlowRuntime> runtimes;
    for (const SimFlow& flow : scenario.flows) {
        const FlowSpec& spec = flow.spec;
        FlowRuntime rt;
        rt.fixed_latency_s = fixed_latency_s(cfg, spec);
        const double bytes = static_cast<double>(spec.payload_bytes);

        if (spec.path.kind != PathKind::HostSocDma) {
            const double pkts = static_cast<double>(
                pcie_packet_counts(spec.path, spec.payload_bytes, cfg).total());
            // The concrete server (shared pool vs the endpoint's reserved
            // cores) is picked at dispatch time.
            rt.stages.push_back({nic_shared, pkts, true});
        } else {
            double engine_gbps = spec.verb == Verb::Read
                                     ? cfg.dma_engine.read_bw_cap_gbps
                                     : cfg.dma_engine.write_bw_cap_gbps;
            if (spec.payload_bytes < kDmaSmallReqBytes) {
                const Path rdma = Path::host_soc_rdma(spec.path.direction);
                double rdma_min = cfg.pcie1_bw_per_dir_gbps;
                const LinkLoad loads = link_loads(rdma, spec.verb);
                for (DirectedLink link : all_directed_links()) {
                    if (loads[link] > 0) {
                        rdma_min = std::min(rdma_min, link_rate_bps(link) * 8.0 / 1e9);
                    }
                }
                engine_gbps = std::min(engine_gbps,
                                       cfg.dma_engine.small_req_factor * rdma_min);
            }
            rt.stages.push_back({dma_engine, bytes / (engine_gbps * 0.125e9)});
        }

        const LinkLoad loads = link_loads(spec.path, spec.verb);
        for (DirectedLink link : all_directed_links()) {
            if (loads[link] > 0) {
                rt.stages.push_back({link_server[static_cast<int>(link)],
                                     loads[link] * bytes / link_rate_bps(link)});
            }
        }

        if (spec.address_range_bytes != FlowSpec::kUniformLargeRange) {
            const SkewTarget target = responder_memory(spec.path);
            const double rate_mrps =
                skew_throughput(cfg, target, spec.verb, spec.address_range_bytes);
            rt.stages.push_back({target == SkewTarget::Soc ? mem_soc : mem_host,
                                 1.0 / (rate_mrps * 1e6)});
        }
        if (spec.verb == Verb::SendRecv) {
            const bool soc_side = responder_memory(spec.path) == SkewTarget::Soc;
            const double peak =
                soc_side ? cfg.soc_sendrecv_peak_mrps : cfg.host_sendrecv_peak_mrps;
            rt.stages.push_back({soc_side ? soc_cpu : host_cpu, 1.0 / (peak * 1e6)});
        }

        if (!spec.unbounded()) {
            rt.open_loop = true;
            const double rate_rps = spec.demand_gbps * 0.125e9 / bytes;
            rt.arrival_interval_s = 1.0 / rate_rps;
        }
        runtimes.push_back(std::move(rt));
    }

    // Event loop.
    std::vector<Request> requests;
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue;
    std::uint64_t seq = 0;
    std::uint64_t event_count = 0;

    std::vector<FlowMetrics> flow_metrics(scenario.flows.size());
    std::vector<std::vector<double>> latency_samples(scenario.flows.size());

    auto issue = [&](int flow, double t) {
        requests.push_back({flow, t, 0});
        queue.push({t, seq++, requests.size() - 1});
        flow_metrics[flow].issued++;
        flow_metrics[flow].in_flight_at_end++;
    };

    for (std::size_t f = 0; f < scenario.flows.size(); ++f) {
        if (runtimes[f].open_loop) {
            issue(static_cast<int>(f), 0.0);
        } else {
            const int window = scenario.flows[f].multiplicity * scenario.flows[f].depth;
            for (int i = 0; i < window; ++i) issue(static_cast<int>(f), 0.0);
        }
    }

    const double duration = scenario.duration_s;
    const double warmup = scenario.warmup_s;
    const double window = duration - warmup;

    while (!queue.empty()) {
        const Event event = queue.top();
        if (event.time > duration) break;  // whatever remains is in flight
        queue.pop();
        ++event_count;
        // issue() may grow the request vector, so copy what we need and
        // never hold a reference across it.
        const int flow = requests[event.request].flow;
        const double issue_time = requests[event.request].issue_time;
        const std::size_t stage_index = requests[event.request].next_stage;
        FlowRuntime& rt = runtimes[flow];
        const FlowSpec& spec = scenario.flows[flow].spec;

        if (stage_index < rt.stages.size()) {
            // Open-loop arrivals pace themselves independently of service.
            if (stage_index == 0 && rt.open_loop &&
                !requests[event.request].spawned_successor) {
                requests[event.request].spawned_successor = true;
                const double next = issue_time + rt.arrival_interval_s;
                if (next < duration) issue(flow, next);
            }
            const Stage& stage = rt.stages[stage_index];
            double done;
            if (stage.nic) {
                // Packets drain through the endpoint's reserved cores or the
                // shared pool, whichever frees first.
                const bool host_side = responder_memory(spec.path) == SkewTarget::HostDdio;
                const int reserved = host_side ? nic_reserved_host : nic_reserved_soc;
                int chosen = nic_shared;
                double rate = shared_rate_pps;
                if (reserved >= 0 &&
                    servers[reserved].free_at <= servers[nic_shared].free_at) {
                    chosen = reserved;
                    rate = reserved_rate_pps;
                }
                done = servers[chosen].serve(event.time, stage.service_s / rate);
            } else {
                done = servers[stage.server].serve(event.time, stage.service_s);
            }
            requests[event.request].next_stage++;
            queue.push({done, seq++, event.request});
            continue;
        }

        // All stages done: completion after the propagation latency.
        const double completion = event.time + rt.fixed_latency_s;
        FlowMetrics& fm = flow_metrics[flow];
        fm.in_flight_at_end--;
        fm.total_completed++;
        if (completion > warmup && completion <= duration) {
            fm.completed++;
            latency_samples[flow].push_back((completion - issue_time) * 1e6);
        }
        // Closed-loop clients park until their request returns.
        if (!rt.open_loop && completion < duration) {
            issue(flow, completion);
        }
    }

    SimMetrics metrics;
    metrics.window_s = window;
    metrics.event_count = event_count;
    for (std::size_t f = 0; f < scenario.flows.size(); ++f) {
        FlowMetrics& fm = flow_metrics[f];
        const double bytes = static_cast<double>(scenario.flows[f].spec.payload_bytes);
        fm.throughput_mrps = static_cast<double>(fm.completed) / window / 1e6;
        fm.throughput_gbps = fm.throughput_mrps * bytes * 8.0 / 1000.0;
        auto& samples = latency_samples[f];
        if (!samples.empty()) {
            std::sort(samples.begin(), samples.end());
            fm.p50_us = samples[samples.size() / 2];
            fm.p99_us = samples[std::min(samples.size() - 1,
                                         static_cast<std::size_t>(samples.size() * 0.99))];
        }
        metrics.flows.push_back(fm);
    }
    for (const Server& server : servers) {
        // Work queued before the horizon may drain past it; count only the
        // busy time inside [0, duration].
        const double overflow = std::max(0.0, server.free_at - duration);
        metrics.resource_utilization[server.name] =
            std::max(0.0, server.busy - overflow) / duration;
    }
    return metrics;
}

DivergenceReport compare_with_analytic(const Scenario& scenario) {
    if (scenario.flows.empty()) {
        fail(ErrorCode::NotComparable, "scenario has no flows");
    }
    for (const SimFlow& flow : scenario.flows) {
        const FlowSpec& spec = flow.spec;
        const AnomalyThresholds& anomaly = scenario.cfg.anomaly;
        const std::uint64_t cliff = spec.path.kind == PathKind::ClientToSoc
                                        ? anomaly.soc_read_cliff_bytes
                                        : spec.path.kind == PathKind::HostSocRdma
                                              ? anomaly.hostsoc_cliff_bytes
                                              : spec.path.kind == PathKind::HostSocDma
                                                    ? anomaly.dma_cliff_bytes
                                                    : UINT64_MAX;
        if (spec.payload_bytes >= cliff) {
            fail(ErrorCode::NotComparable,
                 "payload past the anomaly cliff; closed forms do not apply");
        }
    }
    const SimMetrics metrics = run_simulation(scenario);
    std::vector<FlowSpec> flows;
    for (const SimFlow& flow : scenario.flows) flows.push_back(flow.spec);
    const AllocationReport report =
        allocate_bandwidth(scenario.cfg, flows, scenario.efficiency);

    DivergenceReport divergence;
    for (std::size_t f = 0; f < flows.size(); ++f) {
        const double analytic = report.per_flow_rate_gbps[f];
        const double simulated = metrics.flows[f].throughput_gbps;
        const double error =
            analytic > 0 ? std::abs(simulated - analytic) / analytic : simulated;
        divergence.per_flow_rel_error.push_back(error);
        divergence.max_rel_error = std::max(divergence.max_rel_error, error);
    }
    return divergence;
}

void write_metrics_csv(std::ostream& out, const Scenario& scenario,
                       const SimMetrics& metrics) {
    out << "flow_id,path,verb,payload,throughput_gbps,throughput_mrps,p50_us,p99_us,"
           "issued,completed\n";
    for (std::size_t f = 0; f < metrics.flows.size(); ++f) {
        const FlowSpec& spec = scenario.flows[f].spec;
        const FlowMetrics& fm = metrics.flows[f];
        out << f << "," << to_string(spec.path) << "," << to_string(spec.verb) << ","
            << spec.payload_bytes << "," << fm.throughput_gbps << ","
            << fm.throughput_mrps << "," << fm.p50_us << "," << fm.p99_us << ","
            << fm.issued << "," << fm.completed << "\n";
    }
}

std::string metrics_to_json(const Scenario& scenario, const SimMetrics& metrics) {
    nlohmann::json doc;
    doc["seed"] = scenario.seed;
    doc["window_s"] = metrics.window_s;
    doc["event_count"] = metrics.event_count;
    nlohmann::json flows = nlohmann::json::array();
    for (std::size_t f = 0; f < metrics.flows.size(); ++f) {
        const FlowMetrics& fm = metrics.flows[f];
        flows.push_back({{"flow", f},
                         {"path", to_string(scenario.flows[f].spec.path)},
                         {"verb", to_string(scenario.flows[f].spec.verb)},
                         {"throughput_gbps", fm.throughput_gbps},
                         {"throughput_mrps", fm.throughput_mrps},
                         {"p50_us", fm.p50_us},
                         {"p99_us", fm.p99_us}});
    }
    doc["flows"] = flows;
    nlohmann::json util = nlohmann::json::object();
    for (const auto& [name, value] : metrics.resource_utilization) {
        util[name] = value;
    }
    doc["resource_utilization"] = util;
    return doc.dump(2);
}

}  // namespace snicpath
