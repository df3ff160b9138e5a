#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "snicpath/analytic.hpp"
#include "snicpath/hw_model.hpp"

namespace snicpath {

// One transcribed datapoint: a scenario selector plus the observed value.
// `mix` picks the model evaluation, e.g. "single", "opposite", "lat",
// "pktrate:200", "kv:A4:peak", "a1limit:ratio=1". See fixtures/paper.csv.
struct Fixture {
    std::string id;
    std::string source;  // citation string, nonempty
    std::string path;    // "1","2","3s2h","3h2s","3*s2h","3*h2s","rnic1" or "-"
    std::string verb;    // "read","write","sendrecv" or "-"
    std::uint64_t payload = 0;
    std::string mix;
    double value = 0.0;
    std::string unit;
    double tolerance = 0.0;  // relative, in (0, 1]
};

// CSV with header id,source,path,verb,payload,mix,value,unit,tol.
std::vector<Fixture> load_fixtures(std::istream& in);
std::vector<Fixture> load_fixtures_file(const std::string& path);

struct FitResult {
    EfficiencyMap efficiency;
    std::vector<std::string> warnings;  // links left at 1.0 for lack of coverage
};

// Least-squares fit of per-directed-link throughput factors against the
// measured saturating fixtures (unit Gbps, mix single/same/opposite whose
// flows are link-bound). Factors are clamped to (0, 1]; uncovered links
// stay at 1.0 with a warning.
FitResult fit_efficiency(const HardwareConfig& cfg, const std::vector<Fixture>& fixtures);

// Model value for one fixture under the given efficiency map.
double eval_fixture(const HardwareConfig& cfg, const EfficiencyMap& efficiency,
                    const Fixture& fixture);

struct FixtureResult {
    std::string id;
    double observed = 0.0;
    double model = 0.0;
    double rel_error = 0.0;
    bool pass = false;
};

std::vector<FixtureResult> validate_against_fixtures(const HardwareConfig& cfg,
                                                     const EfficiencyMap& efficiency,
                                                     const std::vector<Fixture>& fixtures);

// Fitted profiles carry an extra [efficiency] section.
void write_fitted_profile(std::ostream& out, const HardwareConfig& cfg,
                          const EfficiencyMap& efficiency);
EfficiencyMap load_profile_efficiency(std::istream& in);

}  // namespace snicpath
