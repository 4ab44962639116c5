#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bermudan/ensemble.hpp"
#include "bermudan/lsm_engine.hpp"
#include "bermudan/market_models.hpp"
#include "bermudan/payoffs.hpp"

namespace bermudan {

/// One market/payoff/grid combination priced with every listed regressor.
/// All regressors of a case share the same fitting and resimulation paths.
struct ExperimentCase {
  std::string label;
  MarketModel model;
  Payoff payoff;
  TimeGrid grid;
  std::vector<RegressorSpec> regressors;
};

struct ExperimentConfig {
  std::string id = "custom";
  std::vector<ExperimentCase> cases;
  std::size_t fit_paths = 100'000;
  std::size_t resim_paths = 100'000;
  bool itm_filter = true;
  std::uint64_t seed = 2024;
  /// Sweep points of a case fitted concurrently.
  unsigned workers = 1;
  std::string output;  // CSV path; empty for none

  void validate() const;
};

struct ResultRow {
  std::string experiment;
  std::string regressor;
  double price = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double fit_seconds = 0.0;
  double price_seconds = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;

  bool operator==(const ResultRow&) const = default;
};

struct CatalogEntry {
  std::string id;
  std::string description;
  std::string reference;  // where the comparison numbers come from
};

/// The nine built-in experiments.
std::vector<CatalogEntry> list_experiments();
/// Throws ConfigError for unknown ids.
ExperimentConfig builtin_experiment(const std::string& id);

/// Field-level ConfigError on malformed input.
ExperimentConfig parse_config(const nlohmann::json& json);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// Seed stamped on every row of case `index`; fit_and_price with this seed
/// and the row's regressor reproduces the row's price exactly.
std::uint64_t case_seed(std::uint64_t root_seed, std::size_t index);

/// Runs every sweep point; failed points become rows with `error` set.
/// Writes the CSV when config.output is non-empty.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

inline constexpr const char* kCsvHeader = "experiment,regressor,price,std_error,ci_lo,ci_hi,fit_s,price_s,seed";

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_csv(std::istream& in);

}  // namespace bermudan
