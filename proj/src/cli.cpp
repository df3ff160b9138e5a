#include "snicpath/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "snicpath/analytic.hpp"
#include "snicpath/calibration.hpp"
#include "snicpath/hw_model.hpp"
#include "snicpath/planner.hpp"
#include "snicpath/simulator.hpp"
#include "snicpath/workloads.hpp"

namespace snicpath {

namespace {

namespace fs = std::filesystem;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::ParseError, "cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct ProfileSource {
    HardwareConfig cfg = bluefield2_defaults();
    EfficiencyMap efficiency;
    std::string hash = "builtin";
};

ProfileSource resolve_profile(const std::string& flag_value) {
    ProfileSource source;
    std::string path = flag_value;
    if (path.empty()) {
        if (const char* env = std::getenv("SNICPATH_PROFILE")) path = env;
    }
    if (!path.empty()) {
        const std::string bytes = slurp(path);
        std::istringstream cfg_stream(bytes);
        source.cfg = load_profile(cfg_stream);
        std::istringstream eff_stream(bytes);
        source.efficiency = load_profile_efficiency(eff_stream);
        source.hash = content_hash_hex(bytes);
    } else {
        source.cfg = validate_config(source.cfg);
    }
    return source;
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::ValidationError, "cannot write " + path.string());
    out << body;
}

void write_manifest(const fs::path& outdir, const std::string& command,
                    const std::vector<std::string>& args, const ProfileSource& profile,
                    std::uint64_t seed, const std::string& extra_hash_name = "",
                    const std::string& extra_hash = "") {
    nlohmann::json doc;
    doc["command"] = command;
    doc["args"] = args;
    doc["profile_hash"] = profile.hash;
    doc["seed"] = seed;
    if (!extra_hash_name.empty()) doc[extra_hash_name] = extra_hash;
    write_file(outdir / "manifest.json", doc.dump(2) + "\n");
}

fs::path ensure_outdir(const std::string& outdir) {
    fs::path path(outdir);
    fs::create_directories(path);
    return path;
}

int cmd_analyze(const std::string& scenario_path, const ProfileSource& profile,
                const std::string& outdir, const std::string& format,
                const std::vector<std::string>& args, std::ostream& out) {
    Scenario scenario = build_scenario(slurp(scenario_path));
    scenario.cfg = profile.cfg;
    scenario.efficiency = profile.efficiency;
    std::vector<FlowSpec> flows;
    for (const SimFlow& flow : scenario.flows) flows.push_back(flow.spec);
    const AllocationReport report =
        allocate_bandwidth(scenario.cfg, flows, scenario.efficiency);

    std::ostringstream csv;
    write_allocation_csv(csv, flows, report);
    csv << "total,,," << report.total_goodput_gbps << "," << report.bottleneck << "\n";

    if (!outdir.empty()) {
        const fs::path dir = ensure_outdir(outdir);
        write_file(dir / "allocation.csv", csv.str());
        write_file(dir / "summary.json", allocation_json_summary(report) + "\n");
        write_manifest(dir, "analyze", args, profile, scenario.seed);
    }
    if (format == "json") {
        out << allocation_json_summary(report) << "\n";
    } else {
        out << csv.str();
    }
    return 0;
}

int cmd_simulate(const std::string& scenario_path, const ProfileSource& profile,
                 const std::string& outdir, const std::string& format, std::int64_t seed,
                 const std::vector<std::string>& args, std::ostream& out) {
    Scenario scenario = build_scenario(slurp(scenario_path));
    scenario.cfg = profile.cfg;
    scenario.efficiency = profile.efficiency;
    if (seed >= 0) scenario.seed = static_cast<std::uint64_t>(seed);
    const SimMetrics metrics = run_simulation(scenario);

    std::ostringstream csv;
    write_metrics_csv(csv, scenario, metrics);
    if (!outdir.empty()) {
        const fs::path dir = ensure_outdir(outdir);
        write_file(dir / "metrics.csv", csv.str());
        write_file(dir / "metrics.json", metrics_to_json(scenario, metrics) + "\n");
        write_manifest(dir, "simulate", args, profile, scenario.seed);
    }
    if (format == "json") {
        out << metrics_to_json(scenario, metrics) << "\n";
    } else {
        out << csv.str();
    }
    return 0;
}

int cmd_plan_replication(double pcie, double net, double ratio,
                         const std::string& scenario_path, const std::string& outdir,
                         const std::vector<std::string>& args,
                         const ProfileSource& profile, std::ostream& out) {
    if (!scenario_path.empty()) {
        const Scenario scenario = build_scenario(slurp(scenario_path));
        if (scenario.replication_workload) {
            ratio = scenario.replication_workload->compression_ratio;
        }
    }
    const ReplicationPlan plan = plan_hybrid_replication(pcie, net, ratio);
    out << "S=" << plan.offload_gbps << " H=" << plan.host_direct_gbps
        << " goodput=" << plan.goodput_gbps << "\n";
    if (!outdir.empty()) {
        const fs::path dir = ensure_outdir(outdir);
        write_file(dir / "plan.json", plan_to_json(plan) + "\n");
        write_manifest(dir, "plan replication", args, profile, 0);
    }
    return 0;
}

int cmd_plan_kv(const ProfileSource& profile, const std::string& scenario_path,
                std::int64_t dump_requests, const std::string& outdir,
                const std::vector<std::string>& args, std::ostream& out) {
    const HardwareConfig& cfg = profile.cfg;
    KvWorkloadSpec workload;
    std::uint64_t seed = 42;
    if (!scenario_path.empty()) {
        const Scenario scenario = build_scenario(slurp(scenario_path));
        if (scenario.kv_workload) workload = *scenario.kv_workload;
        seed = scenario.seed;
    }
    std::vector<AlternativeProfile> all;
    for (const std::string& id : known_alternatives(CaseStudy::Kv)) {
        all.push_back(eval_kv_alternative(id, cfg, workload));
    }
    // The shipped combination pairs the low-latency cached path with the
    // two-READ path; the others are reported for reference.
    const CombinedPlan plan =
        greedy_combine({eval_kv_alternative("A4", cfg, workload),
                        eval_kv_alternative("A5-sendrecv", cfg, workload)},
                       kv_capacities(cfg, KvPathCapacities{}));
    out << plan_to_table(plan, all);
    if (!outdir.empty()) {
        const fs::path dir = ensure_outdir(outdir);
        write_file(dir / "plan.json", plan_to_json(plan) + "\n");
        if (dump_requests > 0) {
            std::ostringstream csv;
            csv << "key_index,op\n";
            for (const KvRequest& req : gen_kv_requests(
                     workload, seed, static_cast<std::uint64_t>(dump_requests))) {
                csv << req.key_index << "," << (req.is_get ? "get" : "put") << "\n";
            }
            write_file(dir / "requests.csv", csv.str());
        }
        write_manifest(dir, "plan kv", args, profile, seed);
    }
    return 0;
}

int cmd_sweep(const std::string& var, double from, double to, double step,
              const ProfileSource& profile, const std::string& outdir,
              const std::vector<std::string>& args, std::ostream& out) {
    if (step <= 0 || to < from) {
        fail(ErrorCode::ValidationError, "sweep needs step > 0 and to >= from");
    }
    const HardwareConfig& cfg = profile.cfg;
    const double P = cfg.pcie1_bw_per_dir_gbps;
    const double N = cfg.net_bw_per_dir_gbps;
    std::ostringstream csv;

    if (var == "ratio") {
        csv << "ratio,hybrid_goodput_gbps,hybrid_offload_gbps,hybrid_host_gbps,"
               "a1_limit_gbps,host_direct_gbps\n";
        for (double r = from; r <= to + 1e-12; r += step) {
            const ReplicationPlan plan = plan_hybrid_replication(P, N, r);
            csv << r << "," << plan.goodput_gbps << "," << plan.offload_gbps << ","
                << plan.host_direct_gbps << "," << a1_limit(P, N, r) << ","
                << std::min(P, N) << "\n";
        }
    } else if (var == "payload") {
        csv << "payload_bytes,cap_gbps\n";
        for (double p = from; p <= to + 1e-12; p += step) {
            const auto payload = static_cast<std::uint64_t>(p);
            csv << payload << ","
                << effective_path_cap(cfg, Path::client_to_soc(), Verb::Read, payload)
                << "\n";
        }
    } else if (var == "n_clients") {
        const double per_client_mrps = 6.0;
        const KvWorkloadSpec workload;
        const CombinedPlan plan =
            greedy_combine({eval_kv_alternative("A4", cfg, workload),
                            eval_kv_alternative("A5-sendrecv", cfg, workload)},
                           kv_capacities(cfg, KvPathCapacities{}));
        csv << "n_clients,offered_mrps,served_mrps,fast_path_clients\n";
        for (double n = from; n <= to + 1e-12; n += step) {
            const double offered = n * per_client_mrps;
            csv << static_cast<int>(n) << "," << offered << ","
                << std::min(offered, plan.total) << ","
                << kv_switch_point(KvPathCapacities{}.soc_get_capacity_mrps,
                                   per_client_mrps)
                << "\n";
        }
    } else if (var == "a3_fraction") {
        const double ratio = 0.5;
        ReplicationWorkloadSpec workload;
        workload.compression_ratio = ratio;
        const auto a2 = eval_replication_alternative("A2", cfg, workload);
        const auto a3 = eval_replication_alternative("A3", cfg, workload);
        const auto caps = replication_capacities(cfg, ReplicationCaseParams{});
        csv << "a3_fraction,goodput_gbps,net_saving_fraction\n";
        for (double f = from; f <= to + 1e-12; f += step) {
            // Blend the per-unit resource vectors and scale to saturation.
            double goodput = std::numeric_limits<double>::infinity();
            for (const auto& [name, cap] : caps) {
                double usage = 0.0;
                auto it2 = a2.resource_vector.find(name);
                auto it3 = a3.resource_vector.find(name);
                if (it2 != a2.resource_vector.end()) usage += (1.0 - f) * it2->second;
                if (it3 != a3.resource_vector.end()) usage += f * it3->second;
                if (usage > 0) goodput = std::min(goodput, cap / usage);
            }
            csv << f << "," << goodput << "," << (1.0 - f) * (1.0 - ratio) << "\n";
        }
    } else {
        fail(ErrorCode::ValidationError, "unknown sweep variable " + var);
    }

    if (!outdir.empty()) {
        const fs::path dir = ensure_outdir(outdir);
        write_file(dir / "sweep.csv", csv.str());
        write_manifest(dir, "sweep " + var, args, profile, 0);
    }
    out << csv.str();
    return 0;
}

int cmd_calibrate(const std::string& fixtures_path, const ProfileSource& profile,
                  const std::string& outdir, const std::vector<std::string>& args,
                  std::ostream& out) {
    const std::string fixture_bytes = slurp(fixtures_path);
    std::istringstream stream(fixture_bytes);
    const std::vector<Fixture> fixtures = load_fixtures(stream);
    const FitResult fit = fit_efficiency(profile.cfg, fixtures);
    for (const std::string& warning : fit.warnings) {
        out << "warning: " << warning << "\n";
    }
    const fs::path dir = ensure_outdir(outdir.empty() ? "." : outdir);
    std::ostringstream fitted;
    write_fitted_profile(fitted, profile.cfg, fit.efficiency);
    write_file(dir / "fitted.profile", fitted.str());
    write_manifest(dir, "calibrate", args, profile, 0, "fixtures_hash",
                   content_hash_hex(fixture_bytes));
    out << "wrote " << (dir / "fitted.profile").string() << "\n";
    return 0;
}

int cmd_fixtures_check(const std::string& fixtures_path, const ProfileSource& profile,
                       std::ostream& out) {
    std::istringstream stream(slurp(fixtures_path));
    const std::vector<Fixture> fixtures = load_fixtures(stream);
    const FitResult fit = fit_efficiency(profile.cfg, fixtures);
    const auto results = validate_against_fixtures(profile.cfg, fit.efficiency, fixtures);
    int failures = 0;
    for (const FixtureResult& res : results) {
        out << (res.pass ? "pass" : "FAIL") << "  " << res.id << "  observed "
            << res.observed << "  model " << res.model << "  err "
            << res.rel_error << "\n";
        if (!res.pass) ++failures;
    }
    out << results.size() - failures << "/" << results.size() << " fixtures pass\n";
    return failures == 0 ? 0 : 2;
}

}  // namespace

std::string content_hash_hex(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    std::ostringstream out;
    out << std::hex << hash;
    return out.str();
}

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Off-path SmartNIC communication-path modeling toolkit"};
    app.require_subcommand(1);

    std::string profile_path;
    app.add_option("--profile", profile_path,
                   "hardware profile file (default: $SNICPATH_PROFILE or builtin)");

    std::string scenario_path, outdir, format = "csv";
    std::int64_t seed = -1;

    CLI::App* analyze = app.add_subcommand("analyze", "closed-form bandwidth allocation");
    analyze->add_option("scenario", scenario_path, "scenario file")->required();
    analyze->add_option("--out", outdir, "output directory");
    analyze->add_option("--format", format, "csv or json");

    CLI::App* simulate = app.add_subcommand("simulate", "discrete-event simulation");
    simulate->add_option("scenario", scenario_path, "scenario file")->required();
    simulate->add_option("--out", outdir, "output directory");
    simulate->add_option("--format", format, "csv or json");
    simulate->add_option("--seed", seed, "override the scenario seed");

    CLI::App* plan = app.add_subcommand("plan", "offload planning");
    plan->require_subcommand(1);
    double pcie = 256.0, net = 200.0, ratio = 1.0;
    std::int64_t dump_requests = 0;
    CLI::App* plan_rep = plan->add_subcommand("replication", "hybrid replication split");
    plan_rep->add_option("--pcie", pcie, "PCIe1 per-direction Gbps");
    plan_rep->add_option("--net", net, "network per-direction Gbps");
    plan_rep->add_option("--ratio", ratio, "compression ratio");
    plan_rep->add_option("--scenario", scenario_path,
                         "scenario file with a [replication_workload] section");
    plan_rep->add_option("--out", outdir, "output directory");
    CLI::App* plan_kv = plan->add_subcommand("kv", "key-value offload combination");
    plan_kv->add_option("--scenario", scenario_path,
                        "scenario file with a [kv_workload] section");
    plan_kv->add_option("--dump-requests", dump_requests,
                        "also write this many generated requests to requests.csv");
    plan_kv->add_option("--out", outdir, "output directory");

    CLI::App* sweep = app.add_subcommand("sweep", "grid evaluation");
    std::string sweep_var;
    double from = 0.0, to = 1.0, step = 0.1;
    sweep->add_option("--var", sweep_var, "ratio|payload|n_clients|a3_fraction")
        ->required();
    sweep->add_option("--from", from, "range start");
    sweep->add_option("--to", to, "range end");
    sweep->add_option("--step", step, "grid step");
    sweep->add_option("--out", outdir, "output directory");

    std::string fixtures_path;
    CLI::App* calibrate = app.add_subcommand("calibrate", "fit per-link efficiency");
    calibrate->add_option("--fixtures", fixtures_path, "fixtures csv")->required();
    calibrate->add_option("--out", outdir, "output directory");

    CLI::App* check = app.add_subcommand("fixtures-check", "regression-check fixtures");
    check->add_option("--fixtures", fixtures_path, "fixtures csv")->required();

    std::vector<const char*> argv;
    argv.push_back("snicpath");
    for (const std::string& arg : args) argv.push_back(arg.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return 1;
    }

    try {
        const ProfileSource profile = resolve_profile(profile_path);
        if (analyze->parsed()) {
            return cmd_analyze(scenario_path, profile, outdir, format, args, out);
        }
        if (simulate->parsed()) {
            return cmd_simulate(scenario_path, profile, outdir, format, seed, args, out);
        }
        if (plan->parsed()) {
            if (plan_rep->parsed()) {
                return cmd_plan_replication(pcie, net, ratio, scenario_path, outdir, args,
                                            profile, out);
            }
            return cmd_plan_kv(profile, scenario_path, dump_requests, outdir, args, out);
        }
        if (sweep->parsed()) {
            return cmd_sweep(sweep_var, from, to, step, profile, outdir, args, out);
        }
        if (calibrate->parsed()) {
            return cmd_calibrate(fixtures_path, profile, outdir, args, out);
        }
        if (check->parsed()) {
            return cmd_fixtures_check(fixtures_path, profile, out);
        }
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace snicpath
