#include "snicpath/hw_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace snicpath {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonPositiveCapacity: return "NonPositiveCapacity";
        case ErrorCode::BadMtu: return "BadMtu";
        case ErrorCode::EmptySkewTable: return "EmptySkewTable";
        case ErrorCode::UnsupportedVerbForPath: return "UnsupportedVerbForPath";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::NotComparable: return "NotComparable";
        case ErrorCode::NegativeRatio: return "NegativeRatio";
        case ErrorCode::InvalidCapacities: return "InvalidCapacities";
        case ErrorCode::UnknownAlternative: return "UnknownAlternative";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::MissingColumn: return "MissingColumn";
    }
    return "UnknownError";
}

const char* to_string(DirectedLink link) {
    switch (link) {
        case DirectedLink::HostToSwitch: return "pcie0:host->switch";
        case DirectedLink::SwitchToHost: return "pcie0:switch->host";
        case DirectedLink::SwitchToNic: return "pcie1:switch->nic";
        case DirectedLink::NicToSwitch: return "pcie1:nic->switch";
        case DirectedLink::SwitchToSoc: return "soclink:switch->soc";
        case DirectedLink::SocToSwitch: return "soclink:soc->switch";
        case DirectedLink::NicToWire: return "net:nic->wire";
        case DirectedLink::WireToNic: return "net:wire->nic";
    }
    return "?";
}

std::optional<DirectedLink> directed_link_from_string(const std::string& name) {
    for (DirectedLink link : all_directed_links()) {
        if (name == to_string(link)) return link;
    }
    return std::nullopt;
}

const char* to_string(Verb verb) {
    switch (verb) {
        case Verb::Read: return "read";
        case Verb::Write: return "write";
        case Verb::SendRecv: return "sendrecv";
    }
    return "?";
}

std::optional<Verb> verb_from_string(const std::string& name) {
    if (name == "read" || name == "READ") return Verb::Read;
    if (name == "write" || name == "WRITE") return Verb::Write;
    if (name == "sendrecv" || name == "SENDRECV" || name == "send_recv") return Verb::SendRecv;
    return std::nullopt;
}

const char* to_string(SkewTarget target) {
    return target == SkewTarget::HostDdio ? "host_ddio" : "soc";
}

std::string to_string(const Path& path) {
    switch (path.kind) {
        case PathKind::ClientToHost: return "client-host";
        case PathKind::ClientToSoc: return "client-soc";
        case PathKind::HostSocRdma:
            return path.direction == HostSocDirection::S2H ? "host-soc-rdma:s2h"
                                                           : "host-soc-rdma:h2s";
        case PathKind::HostSocDma:
            return path.direction == HostSocDirection::S2H ? "host-soc-dma:s2h"
                                                           : "host-soc-dma:h2s";
    }
    return "?";
}

std::optional<Path> path_from_string(const std::string& name, const std::string& direction) {
    HostSocDirection dir = HostSocDirection::S2H;
    if (direction == "h2s" || direction == "H2S") {
        dir = HostSocDirection::H2S;
    } else if (!direction.empty() && direction != "s2h" && direction != "S2H") {
        return std::nullopt;
    }
    if (name == "client-host") return Path::client_to_host();
    if (name == "client-soc") return Path::client_to_soc();
    if (name == "host-soc-rdma") return Path::host_soc_rdma(dir);
    if (name == "host-soc-dma") return Path::host_soc_dma(dir);
    return std::nullopt;
}

HardwareConfig bluefield2_defaults() {
    HardwareConfig cfg;
    // Skew samples: host side keeps its last-level-cache assist and stays
    // flat; the SoC side collapses when the touched range shrinks.
    cfg.skew_table_soc.samples[Verb::Read] = {{1536, 50.0}, {49152, 85.0}};
    cfg.skew_table_soc.samples[Verb::Write] = {{1536, 22.7}, {49152, 77.9}};
    cfg.skew_table_soc.samples[Verb::SendRecv] = {{1536, 21.6}, {49152, 21.6}};
    cfg.skew_table_host_ddio.samples[Verb::Read] = {{1536, 85.0}, {49152, 85.0}};
    cfg.skew_table_host_ddio.samples[Verb::Write] = {{1536, 90.0}, {49152, 90.0}};
    cfg.skew_table_host_ddio.samples[Verb::SendRecv] = {{1536, 33.75}, {49152, 33.75}};
    return cfg;
}

HardwareConfig rnic_variant(const HardwareConfig& cfg) {
    HardwareConfig rnic = cfg;
    rnic.latencies.switch_cross_ns = 0.0;
    rnic.latencies.mmio_host_cycles = 279.0;  // plain RNIC posting cost
    return rnic;
}

namespace {

bool is_power_of_two(std::uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

void check_positive(double value, const std::string& field) {
    if (!(value > 0.0)) {
        fail(ErrorCode::NonPositiveCapacity, field + " must be strictly positive");
    }
}

void check_mtu(std::uint32_t mtu, const std::string& field) {
    if (mtu < 64 || !is_power_of_two(mtu)) {
        fail(ErrorCode::BadMtu, field + " must be a power of two >= 64, got " +
                                    std::to_string(mtu));
    }
}

void check_skew_table(const SkewTable& table, const std::string& field) {
    if (table.samples.empty()) {
        fail(ErrorCode::EmptySkewTable, field + " has no samples");
    }
    for (const auto& [verb, samples] : table.samples) {
        if (samples.empty()) {
            fail(ErrorCode::EmptySkewTable,
                 field + " has no samples for verb " + to_string(verb));
        }
        for (std::size_t i = 0; i < samples.size(); ++i) {
            check_positive(samples[i].second, field + " rate sample");
            if (i > 0 && samples[i].first <= samples[i - 1].first) {
                fail(ErrorCode::ValidationError,
                     field + " ranges must be strictly increasing");
            }
        }
    }
}

}  // namespace

HardwareConfig validate_config(const HardwareConfig& raw) {
    check_positive(raw.net_bw_per_dir_gbps, "net_bw_per_dir");
    check_positive(raw.pcie1_bw_per_dir_gbps, "pcie1_bw_per_dir");
    check_positive(raw.pcie0_bw_per_dir_gbps, "pcie0_bw_per_dir");
    check_positive(raw.soc_link_bw_per_dir_gbps, "soc_link_bw_per_dir");
    check_mtu(raw.host_pcie_mtu, "host_pcie_mtu");
    check_mtu(raw.soc_pcie_mtu, "soc_pcie_mtu");
    check_positive(raw.nic_pkt_rate_cap_mpps, "nic_pkt_rate_cap");
    check_positive(raw.dma_engine.small_req_factor, "dma_engine.small_req_factor");
    check_positive(raw.dma_engine.write_bw_cap_gbps, "dma_engine.write_bw_cap");
    check_positive(raw.dma_engine.read_bw_cap_gbps, "dma_engine.read_bw_cap");
    check_positive(raw.latencies.switch_cross_ns + 1.0, "latencies.switch_cross_ns");
    if (raw.latencies.switch_cross_ns < 0) {
        fail(ErrorCode::NonPositiveCapacity, "switch_cross_ns must be >= 0");
    }
    check_positive(raw.latencies.net_oneway_us, "latencies.net_oneway_us");
    check_positive(raw.latencies.host_dram_ns, "latencies.host_dram_ns");
    check_positive(raw.latencies.soc_dram_ns, "latencies.soc_dram_ns");
    check_positive(raw.latencies.mmio_host_cycles, "latencies.mmio_host_cycles");
    check_positive(raw.latencies.mmio_soc_cycles, "latencies.mmio_soc_cycles");
    check_positive(raw.latencies.base_read_us, "latencies.base_read_us");
    check_positive(raw.latencies.base_write_us, "latencies.base_write_us");
    check_positive(raw.latencies.base_sendrecv_us, "latencies.base_sendrecv_us");
    if (raw.core_counts.host_cores <= 0 || raw.core_counts.soc_cores <= 0 ||
        raw.core_counts.nic_cores_shared <= 0 ||
        raw.core_counts.nic_cores_reserved_per_endpoint < 0) {
        fail(ErrorCode::NonPositiveCapacity, "core_counts must be positive");
    }
    check_positive(raw.soc_sendrecv_peak_mrps, "soc_sendrecv_peak");
    check_positive(raw.host_sendrecv_peak_mrps, "host_sendrecv_peak");
    if (raw.anomaly.soc_read_cliff_bytes == 0 || raw.anomaly.hostsoc_cliff_bytes == 0 ||
        raw.anomaly.dma_cliff_bytes == 0) {
        fail(ErrorCode::NonPositiveCapacity, "anomaly thresholds must be positive");
    }
    check_positive(raw.anomaly.cliff_bw_gbps, "anomaly.cliff_bw_gbps");
    check_skew_table(raw.skew_table_host_ddio, "skew_table_host_ddio");
    check_skew_table(raw.skew_table_soc, "skew_table_soc");
    return raw;
}

LinkLoad link_loads(const Path& path, Verb verb) {
    if (path.kind == PathKind::HostSocDma && verb == Verb::SendRecv) {
        fail(ErrorCode::UnsupportedVerbForPath, "host-soc-dma supports READ/WRITE only");
    }
    // SENDRECV payload moves requester->responder, same as WRITE.
    const bool data_to_responder = (verb != Verb::Read);

    LinkLoad load;
    switch (path.kind) {
        case PathKind::ClientToHost:
            if (data_to_responder) {
                load.set(DirectedLink::WireToNic, 1.0);
                load.set(DirectedLink::NicToSwitch, 1.0);
                load.set(DirectedLink::SwitchToHost, 1.0);
            } else {
                load.set(DirectedLink::HostToSwitch, 1.0);
                load.set(DirectedLink::SwitchToNic, 1.0);
                load.set(DirectedLink::NicToWire, 1.0);
            }
            break;
        case PathKind::ClientToSoc:
            if (data_to_responder) {
                load.set(DirectedLink::WireToNic, 1.0);
                load.set(DirectedLink::NicToSwitch, 1.0);
                load.set(DirectedLink::SwitchToSoc, 1.0);
            } else {
                load.set(DirectedLink::SocToSwitch, 1.0);
                load.set(DirectedLink::SwitchToNic, 1.0);
                load.set(DirectedLink::NicToWire, 1.0);
            }
            break;
        case PathKind::HostSocRdma: {
            // Data passes through PCIe1 twice, whatever the direction.
            load.set(DirectedLink::SwitchToNic, 1.0);
            load.set(DirectedLink::NicToSwitch, 1.0);
            const bool requester_is_soc = (path.direction == HostSocDirection::S2H);
            const bool data_from_host = (requester_is_soc != data_to_responder);
            if (data_from_host) {
                load.set(DirectedLink::HostToSwitch, 1.0);
                load.set(DirectedLink::SwitchToSoc, 1.0);
            } else {
                load.set(DirectedLink::SocToSwitch, 1.0);
                load.set(DirectedLink::SwitchToHost, 1.0);
            }
            break;
        }
        case PathKind::HostSocDma: {
            const bool requester_is_soc = (path.direction == HostSocDirection::S2H);
            const bool data_from_host = (requester_is_soc != data_to_responder);
            if (data_from_host) {
                load.set(DirectedLink::HostToSwitch, 1.0);
                load.set(DirectedLink::SwitchToSoc, 1.0);
            } else {
                load.set(DirectedLink::SocToSwitch, 1.0);
                load.set(DirectedLink::SwitchToHost, 1.0);
            }
            break;
        }
    }
    return load;
}

namespace {

std::uint64_t ceil_div(std::uint64_t n, std::uint64_t d) { return (n + d - 1) / d; }

}  // namespace

PciePacketCounts pcie_packet_counts(const Path& path, std::uint64_t bytes,
                                    const HardwareConfig& cfg) {
    const std::uint64_t host_pkts = ceil_div(bytes, cfg.host_pcie_mtu);
    const std::uint64_t soc_pkts = ceil_div(bytes, cfg.soc_pcie_mtu);
    switch (path.kind) {
        case PathKind::ClientToHost:
            return {host_pkts, host_pkts};
        case PathKind::ClientToSoc:
            return {soc_pkts, 0};
        case PathKind::HostSocRdma:
            return {host_pkts + soc_pkts, host_pkts};
        case PathKind::HostSocDma:
            return {0, host_pkts};
    }
    return {};
}

double pcie_packets_per_byte(const Path& path, std::uint64_t payload_bytes,
                             const HardwareConfig& cfg) {
    const PciePacketCounts counts = pcie_packet_counts(path, payload_bytes, cfg);
    return static_cast<double>(counts.total()) / static_cast<double>(payload_bytes);
}

double pcie_packet_rate_mpps(const Path& path, double gbps,
                             std::uint64_t payload_bytes, const HardwareConfig& cfg) {
    const double bytes_per_sec = gbps * 1e9 / 8.0;
    return bytes_per_sec * pcie_packets_per_byte(path, payload_bytes, cfg) / 1e6;
}

// ---------------------------------------------------------------------------
// Profile I/O
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

struct ProfileParser {
    std::map<std::string, std::map<std::string, std::string>> sections;

    void parse(std::istream& in) {
        std::string line;
        std::string section = "";
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string text = trim(line);
            auto hash = text.find('#');
            if (hash != std::string::npos) text = trim(text.substr(0, hash));
            if (text.empty()) continue;
            if (text.front() == '[') {
                if (text.back() != ']') {
                    fail(ErrorCode::ParseError,
                         "profile line " + std::to_string(lineno) + ": unterminated section");
                }
                section = trim(text.substr(1, text.size() - 2));
                continue;
            }
            auto eq = text.find('=');
            if (eq == std::string::npos) {
                fail(ErrorCode::ParseError,
                     "profile line " + std::to_string(lineno) + ": expected key = value");
            }
            sections[section][trim(text.substr(0, eq))] = trim(text.substr(eq + 1));
        }
    }

    double number(const std::string& section, const std::string& key) const {
        auto sec = sections.find(section);
        if (sec == sections.end() || !sec->second.count(key)) {
            fail(ErrorCode::ParseError, "profile missing [" + section + "] " + key);
        }
        try {
            return std::stod(sec->second.at(key));
        } catch (const std::exception&) {
            fail(ErrorCode::ParseError, "profile key " + key + " is not a number");
        }
    }

    SkewTable skew(const std::string& prefix) const {
        SkewTable table;
        for (Verb verb : {Verb::Read, Verb::Write, Verb::SendRecv}) {
            const std::string section = prefix + "." + to_string(verb);
            auto sec = sections.find(section);
            if (sec == sections.end()) continue;
            std::vector<std::pair<std::uint64_t, double>> samples;
            for (const auto& [key, value] : sec->second) {
                samples.emplace_back(std::stoull(key), std::stod(value));
            }
            std::sort(samples.begin(), samples.end());
            table.samples[verb] = std::move(samples);
        }
        return table;
    }
};

}  // namespace

HardwareConfig load_profile(std::istream& in) {
    ProfileParser parser;
    parser.parse(in);

    HardwareConfig cfg;
    cfg.net_bw_per_dir_gbps = parser.number("bandwidth", "net_bw_per_dir");
    cfg.pcie1_bw_per_dir_gbps = parser.number("bandwidth", "pcie1_bw_per_dir");
    cfg.pcie0_bw_per_dir_gbps = parser.number("bandwidth", "pcie0_bw_per_dir");
    cfg.soc_link_bw_per_dir_gbps = parser.number("bandwidth", "soc_link_bw_per_dir");
    cfg.host_pcie_mtu = static_cast<std::uint32_t>(parser.number("mtu", "host_pcie_mtu"));
    cfg.soc_pcie_mtu = static_cast<std::uint32_t>(parser.number("mtu", "soc_pcie_mtu"));
    cfg.nic_pkt_rate_cap_mpps = parser.number("nic", "pkt_rate_cap_mpps");
    cfg.dma_engine.small_req_factor = parser.number("dma_engine", "small_req_factor");
    cfg.dma_engine.write_bw_cap_gbps = parser.number("dma_engine", "write_bw_cap");
    cfg.dma_engine.read_bw_cap_gbps = parser.number("dma_engine", "read_bw_cap");
    cfg.latencies.switch_cross_ns = parser.number("latencies", "switch_cross_ns");
    cfg.latencies.net_oneway_us = parser.number("latencies", "net_oneway_us");
    cfg.latencies.host_dram_ns = parser.number("latencies", "host_dram_ns");
    cfg.latencies.soc_dram_ns = parser.number("latencies", "soc_dram_ns");
    cfg.latencies.mmio_host_cycles = parser.number("latencies", "mmio_host_cycles");
    cfg.latencies.mmio_soc_cycles = parser.number("latencies", "mmio_soc_cycles");
    cfg.latencies.base_read_us = parser.number("latencies", "base_read_us");
    cfg.latencies.base_write_us = parser.number("latencies", "base_write_us");
    cfg.latencies.base_sendrecv_us = parser.number("latencies", "base_sendrecv_us");
    cfg.core_counts.host_cores = static_cast<int>(parser.number("cores", "host_cores"));
    cfg.core_counts.soc_cores = static_cast<int>(parser.number("cores", "soc_cores"));
    cfg.core_counts.nic_cores_shared =
        static_cast<int>(parser.number("cores", "nic_cores_shared"));
    cfg.core_counts.nic_cores_reserved_per_endpoint =
        static_cast<int>(parser.number("cores", "nic_cores_reserved_per_endpoint"));
    cfg.soc_sendrecv_peak_mrps = parser.number("cores", "soc_sendrecv_peak_mrps");
    cfg.host_sendrecv_peak_mrps = parser.number("cores", "host_sendrecv_peak_mrps");
    cfg.anomaly.soc_read_cliff_bytes =
        static_cast<std::uint64_t>(parser.number("anomaly", "soc_read_cliff_bytes"));
    cfg.anomaly.hostsoc_cliff_bytes =
        static_cast<std::uint64_t>(parser.number("anomaly", "hostsoc_cliff_bytes"));
    cfg.anomaly.dma_cliff_bytes =
        static_cast<std::uint64_t>(parser.number("anomaly", "dma_cliff_bytes"));
    cfg.anomaly.cliff_bw_gbps = parser.number("anomaly", "cliff_bw_gbps");
    cfg.skew_table_host_ddio = parser.skew("skew_table.host_ddio");
    cfg.skew_table_soc = parser.skew("skew_table.soc");
    return validate_config(cfg);
}

HardwareConfig load_profile_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::ParseError, "cannot open profile " + path);
    }
    return load_profile(in);
}

namespace {

void write_skew(std::ostream& out, const std::string& prefix, const SkewTable& table) {
    for (const auto& [verb, samples] : table.samples) {
        out << "[" << prefix << "." << to_string(verb) << "]\n";
        for (const auto& [range, rate] : samples) {
            out << range << " = " << rate << "\n";
        }
        out << "\n";
    }
}

}  // namespace

void write_profile(std::ostream& out, const HardwareConfig& cfg) {
    out.precision(15);
    out << "[bandwidth]\n"
        << "net_bw_per_dir = " << cfg.net_bw_per_dir_gbps << "\n"
        << "pcie1_bw_per_dir = " << cfg.pcie1_bw_per_dir_gbps << "\n"
        << "pcie0_bw_per_dir = " << cfg.pcie0_bw_per_dir_gbps << "\n"
        << "soc_link_bw_per_dir = " << cfg.soc_link_bw_per_dir_gbps << "\n\n"
        << "[mtu]\n"
        << "host_pcie_mtu = " << cfg.host_pcie_mtu << "\n"
        << "soc_pcie_mtu = " << cfg.soc_pcie_mtu << "\n\n"
        << "[nic]\n"
        << "pkt_rate_cap_mpps = " << cfg.nic_pkt_rate_cap_mpps << "\n\n"
        << "[dma_engine]\n"
        << "small_req_factor = " << cfg.dma_engine.small_req_factor << "\n"
        << "write_bw_cap = " << cfg.dma_engine.write_bw_cap_gbps << "\n"
        << "read_bw_cap = " << cfg.dma_engine.read_bw_cap_gbps << "\n\n"
        << "[latencies]\n"
        << "switch_cross_ns = " << cfg.latencies.switch_cross_ns << "\n"
        << "net_oneway_us = " << cfg.latencies.net_oneway_us << "\n"
        << "host_dram_ns = " << cfg.latencies.host_dram_ns << "\n"
        << "soc_dram_ns = " << cfg.latencies.soc_dram_ns << "\n"
        << "mmio_host_cycles = " << cfg.latencies.mmio_host_cycles << "\n"
        << "mmio_soc_cycles = " << cfg.latencies.mmio_soc_cycles << "\n"
        << "base_read_us = " << cfg.latencies.base_read_us << "\n"
        << "base_write_us = " << cfg.latencies.base_write_us << "\n"
        << "base_sendrecv_us = " << cfg.latencies.base_sendrecv_us << "\n\n"
        << "[cores]\n"
        << "host_cores = " << cfg.core_counts.host_cores << "\n"
        << "soc_cores = " << cfg.core_counts.soc_cores << "\n"
        << "nic_cores_shared = " << cfg.core_counts.nic_cores_shared << "\n"
        << "nic_cores_reserved_per_endpoint = "
        << cfg.core_counts.nic_cores_reserved_per_endpoint << "\n"
        << "soc_sendrecv_peak_mrps = " << cfg.soc_sendrecv_peak_mrps << "\n"
        << "host_sendrecv_peak_mrps = " << cfg.host_sendrecv_peak_mrps << "\n\n"
        << "[anomaly]\n"
        << "soc_read_cliff_bytes = " << cfg.anomaly.soc_read_cliff_bytes << "\n"
        << "hostsoc_cliff_bytes = " << cfg.anomaly.hostsoc_cliff_bytes << "\n"
        << "dma_cliff_bytes = " << cfg.anomaly.dma_cliff_bytes << "\n"
        << "cliff_bw_gbps = " << cfg.anomaly.cliff_bw_gbps << "\n\n";
    write_skew(out, "skew_table.host_ddio", cfg.skew_table_host_ddio);
    write_skew(out, "skew_table.soc", cfg.skew_table_soc);
}

}  // namespace snicpath
