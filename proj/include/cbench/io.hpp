#pragma once

// Serialization: JSON round trips for every configurable object, CSV writers
// for experiment outputs, and a stable digest of configurations so runs can
// be tied to the exact inputs that produced them.
//
// JSON schemas are flat and explicit; unknown keys are rejected nowhere (so
// configs may carry comments-by-convention like "_note"), but missing
// required keys throw with the offending key name.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbench/frequentist.hpp"
#include "cbench/posterior.hpp"
#include "cbench/priors.hpp"
#include "cbench/rate.hpp"
#include "cbench/smallball.hpp"
#include "cbench/spectral.hpp"

namespace cbench {

using Json = nlohmann::json;

// --- JSON round trips --------------------------------------------------------

Json to_json(const SequenceVector& f);
SequenceVector sequence_from_json(const Json& j);

Json to_json(const IllPosedness& cls);
IllPosedness ill_posedness_from_json(const Json& j);

// Includes a "rho" snapshot; operator_from_json rebuilds through
// make_operator and cross-checks the snapshot when present.
Json to_json(const SpectralOperator& op);
SpectralOperator operator_from_json(const Json& j);

Json to_json(const Observation& obs);
Observation observation_from_json(const Json& j);

Json to_json(const AnyPrior& prior);
AnyPrior prior_from_json(const Json& j);

Json to_json(const TruthSpec& truth);
TruthSpec truth_from_json(const Json& j);

Json to_json(const McmcConfig& cfg);
McmcConfig mcmc_from_json(const Json& j);

Json to_json(const RateScenario& sc);
RateScenario scenario_from_json(const Json& j);

Json to_json(const BasisMap& bm);
BasisMap basis_map_from_json(const Json& j);

// --- CSV writers ---------------------------------------------------------------

void write_rate_table_csv(const RateTable& table, const std::string& path);

// Chain samples in columnar form plus a JSON sidecar (path + ".meta.json")
// holding acceptance rates, seeds and warnings.
void write_chain_csv(const PosteriorChain& chain, const std::string& path);

void write_smallball_csv(const std::vector<SmallBallEstimate>& rows,
                         const std::string& path);

struct EntropyRow {
  double epsilon = 0.0;
  CoverCount cover;
};
void write_entropy_csv(const std::vector<EntropyRow>& rows, const std::string& path);

void write_power_csv(const PowerEstimate& power, const std::string& path);

// --- digests and metadata ------------------------------------------------------

std::uint64_t fnv1a64(const std::string& bytes);
// 16-hex-digit digest of the canonical (sorted-key) JSON dump.
std::string config_digest(const Json& config);

// Writes <dir>/metadata.json echoing the config, its digest and the seed.
void write_run_metadata(const std::string& dir, const Json& config,
                        std::uint64_t seed);

Json load_json_file(const std::string& path);

}  // namespace cbench
