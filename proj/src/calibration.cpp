#include "snicpath/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Dense>

#include "snicpath/planner.hpp"

namespace snicpath {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == sep) {
            fields.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    fields.push_back(current);
    return fields;
}

const std::vector<std::string> kColumns = {"id",  "source", "path", "verb", "payload",
                                           "mix", "value",  "unit", "tol"};

Path parse_fixture_path(const std::string& token) {
    if (token == "1" || token == "rnic1") return Path::client_to_host();
    if (token == "2") return Path::client_to_soc();
    if (token == "3s2h") return Path::host_soc_rdma(HostSocDirection::S2H);
    if (token == "3h2s") return Path::host_soc_rdma(HostSocDirection::H2S);
    if (token == "3*s2h") return Path::host_soc_dma(HostSocDirection::S2H);
    if (token == "3*h2s") return Path::host_soc_dma(HostSocDirection::H2S);
    fail(ErrorCode::ParseError, "unknown fixture path " + token);
}

Verb parse_fixture_verb(const std::string& token) {
    auto verb = verb_from_string(token);
    if (!verb) fail(ErrorCode::ParseError, "unknown fixture verb " + token);
    return *verb;
}

}  // namespace

std::vector<Fixture> load_fixtures(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        return {};
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split(line, ',');
    for (const std::string& column : kColumns) {
        if (std::find(header.begin(), header.end(), column) == header.end()) {
            fail(ErrorCode::MissingColumn, "fixtures missing column " + column);
        }
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) index[header[i]] = i;

    std::vector<Fixture> fixtures;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split(line, ',');
        if (fields.size() != header.size()) {
            fail(ErrorCode::ParseError,
                 "fixtures line " + std::to_string(lineno) + ": wrong field count");
        }
        Fixture fx;
        fx.id = fields[index["id"]];
        fx.source = fields[index["source"]];
        fx.path = fields[index["path"]];
        fx.verb = fields[index["verb"]];
        try {
            const std::string& payload = fields[index["payload"]];
            fx.payload = payload == "-" ? 0 : std::stoull(payload);
            fx.value = std::stod(fields[index["value"]]);
            fx.tolerance = std::stod(fields[index["tol"]]);
        } catch (const std::exception&) {
            fail(ErrorCode::ParseError,
                 "fixtures line " + std::to_string(lineno) + ": bad number");
        }
        fx.mix = fields[index["mix"]];
        fx.unit = fields[index["unit"]];
        if (fx.source.empty()) {
            fail(ErrorCode::ValidationError, "fixture " + fx.id + ": empty citation");
        }
        if (!(fx.tolerance > 0.0 && fx.tolerance <= 1.0)) {
            fail(ErrorCode::ValidationError,
                 "fixture " + fx.id + ": tolerance must be in (0, 1]");
        }
        fixtures.push_back(std::move(fx));
    }
    return fixtures;
}

std::vector<Fixture> load_fixtures_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ParseError, "cannot open fixtures " + path);
    return load_fixtures(in);
}

// ---------------------------------------------------------------------------
// Efficiency fitting
// ---------------------------------------------------------------------------

namespace {

std::vector<FlowSpec> fixture_flows(const Fixture& fx) {
    const Path path = parse_fixture_path(fx.path);
    std::vector<FlowSpec> flows;
    if (fx.mix == "single") {
        FlowSpec flow;
        flow.path = path;
        flow.verb = parse_fixture_verb(fx.verb);
        flow.payload_bytes = fx.payload;
        flows.push_back(flow);
    } else if (fx.mix == "same") {
        for (int i = 0; i < 2; ++i) {
            FlowSpec flow;
            flow.path = path;
            flow.verb = parse_fixture_verb(fx.verb);
            flow.payload_bytes = fx.payload;
            flows.push_back(flow);
        }
    } else if (fx.mix == "opposite") {
        FlowSpec read;
        read.path = path;
        read.verb = Verb::Read;
        read.payload_bytes = fx.payload;
        FlowSpec write = read;
        write.verb = Verb::Write;
        flows = {read, write};
    }
    return flows;
}

bool is_fit_fixture(const Fixture& fx) {
    return fx.unit == "Gbps" &&
           (fx.mix == "single" || fx.mix == "same" || fx.mix == "opposite");
}

}  // namespace

FitResult fit_efficiency(const HardwareConfig& cfg, const std::vector<Fixture>& fixtures) {
    // Each saturating fixture contributes one linear equation
    //   sum_f cap(link binding flow f) * e[link] = observed,
    // taking the binding link from the identity-efficiency allocation.
    struct Row {
        std::map<int, double> coeff;  // link index -> theoretical rate
        double observed;
    };
    std::vector<Row> rows;
    for (const Fixture& fx : fixtures) {
        if (!is_fit_fixture(fx)) continue;
        const std::vector<FlowSpec> flows = fixture_flows(fx);
        if (flows.empty()) continue;
        const AllocationReport report = allocate_bandwidth(cfg, flows);
        Row row;
        row.observed = fx.value;
        bool all_link_bound = true;
        for (std::size_t f = 0; f < flows.size(); ++f) {
            const auto link = directed_link_from_string(report.per_flow_bottleneck[f]);
            if (!link) {
                all_link_bound = false;  // budget- or engine-bound, not fittable
                break;
            }
            row.coeff[static_cast<int>(*link)] += report.per_flow_rate_gbps[f];
        }
        if (all_link_bound) rows.push_back(std::move(row));
    }

    FitResult result;
    std::vector<int> covered;
    for (const Row& row : rows) {
        for (const auto& [link, _] : row.coeff) {
            if (std::find(covered.begin(), covered.end(), link) == covered.end()) {
                covered.push_back(link);
            }
        }
    }
    std::sort(covered.begin(), covered.end());

    if (!rows.empty()) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()),
                                                  static_cast<int>(covered.size()));
        Eigen::VectorXd b(static_cast<int>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            b(static_cast<int>(r)) = rows[r].observed;
            for (const auto& [link, rate] : rows[r].coeff) {
                const auto pos = std::find(covered.begin(), covered.end(), link);
                a(static_cast<int>(r),
                  static_cast<int>(pos - covered.begin())) = rate;
            }
        }
        // Minimum-norm least squares handles both over- and under-determined
        // coverage (a lone opposite-direction fixture splits evenly).
        Eigen::VectorXd x = a.completeOrthogonalDecomposition().solve(b);
        for (std::size_t i = 0; i < covered.size(); ++i) {
            const double factor =
                std::clamp(x(static_cast<int>(i)), 1e-6, 1.0);
            result.efficiency.set(static_cast<DirectedLink>(covered[i]), factor);
        }
    }
    for (DirectedLink link : all_directed_links()) {
        if (std::find(covered.begin(), covered.end(), static_cast<int>(link)) ==
            covered.end()) {
            result.warnings.push_back(std::string("no fixture covers ") +
                                      to_string(link) + "; factor left at 1.0");
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Fixture evaluation
// ---------------------------------------------------------------------------

namespace {

double parse_suffix_number(const std::string& mix, const std::string& key) {
    const auto pos = mix.find(key);
    if (pos == std::string::npos) {
        fail(ErrorCode::ParseError, "mix " + mix + " lacks " + key);
    }
    return std::stod(mix.substr(pos + key.size()));
}

double eval_alloc_total(const HardwareConfig& cfg, const EfficiencyMap& eff,
                        const Fixture& fx, const std::string& mix) {
    Fixture shaped = fx;
    shaped.mix = mix;
    const std::vector<FlowSpec> flows = fixture_flows(shaped);
    return allocate_bandwidth(cfg, flows, eff).total_goodput_gbps;
}

}  // namespace

double eval_fixture(const HardwareConfig& cfg, const EfficiencyMap& efficiency,
                    const Fixture& fx) {
    const std::string& mix = fx.mix;
    const EfficiencyMap identity;

    if (mix == "single" || mix == "same" || mix == "opposite") {
        return eval_alloc_total(cfg, efficiency, fx, mix);
    }
    if (mix.rfind("theory:", 0) == 0) {
        return eval_alloc_total(cfg, identity, fx, mix.substr(7));
    }
    if (mix == "concurrent12") {
        FlowSpec read;
        read.path = Path::client_to_host();
        read.verb = Verb::Read;
        read.payload_bytes = fx.payload;
        FlowSpec write;
        write.path = Path::client_to_soc();
        write.verb = Verb::Write;
        write.payload_bytes = fx.payload;
        return allocate_bandwidth(cfg, {read, write}, identity).total_goodput_gbps;
    }
    if (mix.rfind("concurrent456", 0) == 0) {
        FlowSpec read;
        read.path = Path::client_to_host();
        read.verb = Verb::Read;
        read.payload_bytes = fx.payload;
        FlowSpec write = read;
        write.verb = Verb::Write;
        FlowSpec offload;
        offload.path = Path::host_soc_rdma(HostSocDirection::S2H);
        offload.verb = Verb::Read;
        offload.payload_bytes = fx.payload;
        offload.demand_gbps = parse_suffix_number(mix, "offload=");
        return allocate_bandwidth(cfg, {read, write, offload}, identity)
            .total_goodput_gbps;
    }
    if (mix == "cap") {
        return effective_path_cap(cfg, parse_fixture_path(fx.path),
                                  parse_fixture_verb(fx.verb), fx.payload);
    }
    if (mix == "lat") {
        const HardwareConfig& model =
            fx.path == "rnic1" ? rnic_variant(cfg) : cfg;
        return path_latency(model, parse_fixture_path(fx.path),
                            parse_fixture_verb(fx.verb), fx.payload, 1);
    }
    if (mix == "pkts") {
        return static_cast<double>(
            pcie_packet_counts(parse_fixture_path(fx.path), fx.payload, cfg).total());
    }
    if (mix.rfind("pktrate:", 0) == 0) {
        const double gbps = std::stod(mix.substr(8));
        return pcie_packet_rate_mpps(parse_fixture_path(fx.path), gbps, fx.payload, cfg);
    }
    if (mix.rfind("skew:", 0) == 0) {
        const SkewTarget target =
            mix.substr(5) == "soc" ? SkewTarget::Soc : SkewTarget::HostDdio;
        return skew_throughput(cfg, target, parse_fixture_verb(fx.verb), fx.payload);
    }
    if (mix.rfind("db:", 0) == 0) {
        const auto second = mix.find(':', 3);
        const std::string side = mix.substr(3, second - 3);
        const int batch = std::stoi(mix.substr(second + 1));
        DoorbellSide db_side = DoorbellSide::Client;
        if (side == "soc") db_side = DoorbellSide::Soc;
        if (side == "host") db_side = DoorbellSide::Host;
        return doorbell_multiplier(cfg, db_side, batch);
    }
    if (mix == "dma-small-ratio") {
        const Path dma = parse_fixture_path(fx.path);
        const Path rdma = Path::host_soc_rdma(dma.direction);
        const Verb verb = parse_fixture_verb(fx.verb);
        return effective_path_cap(cfg, dma, verb, fx.payload) /
               effective_path_cap(cfg, rdma, verb, fx.payload);
    }
    if (mix.rfind("a1limit:ratio=", 0) == 0) {
        return a1_limit(cfg.pcie1_bw_per_dir_gbps, cfg.net_bw_per_dir_gbps,
                        parse_suffix_number(mix, "ratio="));
    }
    if (mix == "breakeven") {
        return break_even_ratio(cfg.pcie1_bw_per_dir_gbps, cfg.net_bw_per_dir_gbps);
    }
    if (mix.rfind("hybrid:S:ratio=", 0) == 0) {
        return plan_hybrid_replication(cfg.pcie1_bw_per_dir_gbps,
                                       cfg.net_bw_per_dir_gbps,
                                       parse_suffix_number(mix, "ratio="))
            .offload_gbps;
    }
    if (mix.rfind("kv:", 0) == 0) {
        const auto second = mix.find(':', 3);
        const std::string alt = mix.substr(3, second - 3);
        const std::string metric = mix.substr(second + 1);
        const KvWorkloadSpec workload;
        if (alt == "combined") {
            const auto a4 = eval_kv_alternative("A4", cfg, workload);
            const auto a5 = eval_kv_alternative("A5-sendrecv", cfg, workload);
            return greedy_combine({a4, a5}, kv_capacities(cfg, KvPathCapacities{}))
                .total;
        }
        const AlternativeProfile profile = eval_kv_alternative(alt, cfg, workload);
        return metric == "latency" ? profile.latency_us : profile.peak_throughput;
    }
    if (mix.rfind("rep:", 0) == 0) {
        const auto second = mix.find(':', 4);
        const std::string alt = mix.substr(4, second - 4);
        const std::string rest = mix.substr(second + 1);
        ReplicationWorkloadSpec workload;
        workload.compression_ratio = parse_suffix_number(rest, "ratio=");
        const AlternativeProfile profile =
            eval_replication_alternative(alt, cfg, workload);
        return profile.peak_throughput;
    }
    fail(ErrorCode::ParseError, "fixture " + fx.id + ": unknown mix " + mix);
}

std::vector<FixtureResult> validate_against_fixtures(const HardwareConfig& cfg,
                                                     const EfficiencyMap& efficiency,
                                                     const std::vector<Fixture>& fixtures) {
    std::vector<FixtureResult> results;
    results.reserve(fixtures.size());
    for (const Fixture& fx : fixtures) {
        FixtureResult res;
        res.id = fx.id;
        res.observed = fx.value;
        res.model = eval_fixture(cfg, efficiency, fx);
        res.rel_error = std::abs(res.model - fx.value) / std::abs(fx.value);
        res.pass = res.rel_error <= fx.tolerance;
        results.push_back(res);
    }
    return results;
}

void write_fitted_profile(std::ostream& out, const HardwareConfig& cfg,
                          const EfficiencyMap& efficiency) {
    write_profile(out, cfg);
    out << "[efficiency]\n";
    for (DirectedLink link : all_directed_links()) {
        out << to_string(link) << " = " << efficiency[link] << "\n";
    }
}

EfficiencyMap load_profile_efficiency(std::istream& in) {
    EfficiencyMap efficiency;
    std::string line;
    bool in_section = false;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        std::string text = line.substr(first);
        if (text.front() == '[') {
            in_section = text.rfind("[efficiency]", 0) == 0;
            continue;
        }
        if (!in_section) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) continue;
        std::string key = text.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        const auto link = directed_link_from_string(key);
        if (link) efficiency.set(*link, std::stod(text.substr(eq + 1)));
    }
    return efficiency;
}

}  // namespace snicpath
