#include "bermudan/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "bermudan/errors.hpp"
#include "bermudan/parallel.hpp"
#include "bermudan/random.hpp"

namespace bermudan {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- parsing

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

const json& member(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing required field");
  return *it;
}

double number(const json& value, const std::string& path) {
  if (!value.is_number()) fail(path, "expected a number");
  return value.get<double>();
}

std::size_t count(const json& value, const std::string& path) {
  if (!value.is_number_integer() || value.get<long long>() < 0) fail(path, "expected a non-negative integer");
  return value.get<std::size_t>();
}

std::string text(const json& value, const std::string& path) {
  if (!value.is_string()) fail(path, "expected a string");
  return value.get<std::string>();
}

template <class T, class F>
std::vector<T> list_of(const json& value, const std::string& path, F&& convert) {
  std::vector<T> out;
  if (!value.is_array()) {
    out.push_back(convert(value, path));
    return out;
  }
  for (std::size_t i = 0; i < value.size(); ++i) out.push_back(convert(value[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

double number_or(const json& obj, const std::string& key, double fallback, const std::string& path) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, path + "." + key);
}

// A scalar broadcasts to all d assets.
std::vector<double> per_asset(const json& obj, const std::string& key, std::size_t d, const std::string& path,
                              std::optional<double> fallback = std::nullopt) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    if (fallback) return std::vector<double>(d, *fallback);
    fail(path + "." + key, "missing required field");
  }
  if (it->is_number()) return std::vector<double>(d, it->get<double>());
  auto values = list_of<double>(*it, path + "." + key, number);
  if (values.size() != d) fail(path + "." + key, "expected " + std::to_string(d) + " entries");
  return values;
}

MarketModel parse_model(const json& j, const std::string& path) {
  const std::string type = text(member(j, "type", path), path + ".type");
  if (type == "black_scholes") {
    const std::size_t d = count(member(j, "dim", path), path + ".dim");
    if (d == 0) fail(path + ".dim", "must be >= 1");
    BlackScholesParams p;
    p.s0 = per_asset(j, "s0", d, path);
    p.r = number(member(j, "r", path), path + ".r");
    p.sigma = per_asset(j, "sigma", d, path);
    p.dividend = per_asset(j, "dividend", d, path, 0.0);
    if (const auto it = j.find("corr"); it != j.end()) {
      if (!it->is_array() || it->size() != d) fail(path + ".corr", "expected a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
      p.corr.dim = d;
      for (std::size_t i = 0; i < d; ++i) {
        const auto row = list_of<double>((*it)[i], path + ".corr[" + std::to_string(i) + "]", number);
        if (row.size() != d) fail(path + ".corr[" + std::to_string(i) + "]", "expected " + std::to_string(d) + " entries");
        p.corr.values.insert(p.corr.values.end(), row.begin(), row.end());
      }
    } else {
      p.corr = SquareMatrix::constant_correlation(d, number_or(j, "rho", 0.0, path));
    }
    try {
      p.validate();
      correlation_factor(p.corr);
    } catch (const std::exception& e) {
      fail(path, e.what());
    }
    return p;
  }
  if (type == "heston") {
    HestonParams p;
    p.s0 = number(member(j, "s0", path), path + ".s0");
    p.v0 = number(member(j, "v0", path), path + ".v0");
    p.kappa = number(member(j, "kappa", path), path + ".kappa");
    p.theta = number(member(j, "theta", path), path + ".theta");
    p.xi = number(member(j, "xi", path), path + ".xi");
    p.rho = number(member(j, "rho", path), path + ".rho");
    p.r = number(member(j, "r", path), path + ".r");
    try {
      p.validate();
    } catch (const std::exception& e) {
      fail(path, e.what());
    }
    return p;
  }
  fail(path + ".type", "unknown model '" + type + "' (expected black_scholes or heston)");
}

Payoff parse_payoff(const json& j, std::size_t d, const std::string& path) {
  const std::string type = text(member(j, "type", path), path + ".type");
  const double strike = number(member(j, "strike", path), path + ".strike");
  Payoff payoff;
  if (type == "put") {
    if (d != 1) fail(path + ".type", "put needs a one-asset model");
    payoff = Payoff::put(strike);
  } else if (type == "max_call") {
    payoff = Payoff::max_call(strike);
  } else if (type == "geometric_put") {
    payoff = Payoff::geometric_put(strike);
  } else if (type == "basket_put") {
    payoff = j.contains("weights") ? Payoff::basket_put(strike, per_asset(j, "weights", d, path))
                                   : Payoff::basket_put(strike, d);
  } else {
    fail(path + ".type", "unknown payoff '" + type + "'");
  }
  try {
    payoff.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return payoff;
}

TimeGrid parse_grid(const json& j, const std::string& path) {
  const double maturity = number(member(j, "maturity", path), path + ".maturity");
  const std::size_t dates = count(member(j, "dates", path), path + ".dates");
  const std::size_t substeps = j.contains("substeps") ? count(j["substeps"], path + ".substeps") : 10;
  if (!(maturity > 0.0)) fail(path + ".maturity", "must be > 0");
  try {
    return TimeGrid::uniform(maturity, dates, substeps);
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
}

SplitStrategy parse_split(const json& j, const std::string& path) {
  const auto it = j.find("split");
  if (it == j.end()) return SplitStrategy::RandomDirectionBestThreshold;
  const std::string s = text(*it, path + ".split");
  if (s == "random") return SplitStrategy::RandomDirectionBestThreshold;
  if (s == "best") return SplitStrategy::BestDirectionBestThreshold;
  fail(path + ".split", "expected 'random' or 'best'");
}

std::vector<RegressorSpec> parse_regressors(const json& j, const std::string& path) {
  std::vector<RegressorSpec> out;
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "trees" && key != "forests" && key != "polynomial") fail(path + "." + key, "unknown regressor family");
  }
  auto check = [](const auto& spec, const std::string& where) {
    try {
      spec.validate();
    } catch (const std::exception& e) {
      fail(where, e.what());
    }
  };
  if (const auto it = j.find("trees"); it != j.end()) {
    const std::string p = path + ".trees";
    const auto depths = list_of<std::size_t>(member(*it, "max_depth", p), p + ".max_depth", count);
    const auto leaves = list_of<std::size_t>(member(*it, "min_samples_leaf", p), p + ".min_samples_leaf", count);
    for (auto depth : depths) {
      for (auto leaf : leaves) {
        TreeFitConfig c{depth, leaf, parse_split(*it, p), number_or(*it, "midpoint_prob", 0.0, p), 0};
        check(c, p);
        out.emplace_back(c);
      }
    }
  }
  if (const auto it = j.find("forests"); it != j.end()) {
    const std::string p = path + ".forests";
    const auto trees = list_of<std::size_t>(member(*it, "num_trees", p), p + ".num_trees", count);
    const auto fractions = list_of<double>(member(*it, "max_samples", p), p + ".max_samples", number);
    const auto depths = list_of<std::size_t>(member(*it, "max_depth", p), p + ".max_depth", count);
    const auto leaves = list_of<std::size_t>(member(*it, "min_samples_leaf", p), p + ".min_samples_leaf", count);
    bool bootstrap = true;
    if (const auto b = it->find("bootstrap"); b != it->end()) {
      if (!b->is_boolean()) fail(p + ".bootstrap", "expected a boolean");
      bootstrap = b->get<bool>();
    }
    for (auto depth : depths) {
      for (auto leaf : leaves) {
        for (auto b : trees) {
          for (auto fraction : fractions) {
            ForestFitConfig c;
            c.num_trees = b;
            c.tree = TreeFitConfig{depth, leaf, parse_split(*it, p), number_or(*it, "midpoint_prob", 0.0, p), 0};
            c.bootstrap = bootstrap;
            c.max_samples = fraction;
            check(c, p);
            out.emplace_back(c);
          }
        }
      }
    }
  }
  if (const auto it = j.find("polynomial"); it != j.end()) {
    const std::string p = path + ".polynomial";
    for (auto degree : list_of<std::size_t>(member(*it, "degrees", p), p + ".degrees", count)) {
      out.emplace_back(PolynomialSpec{static_cast<unsigned>(degree)});
    }
  }
  return out;
}

// -------------------------------------------------------------- emitting

json model_json(const MarketModel& model) {
  if (const auto* bs = std::get_if<BlackScholesParams>(&model)) {
    json j{{"type", "black_scholes"}, {"dim", bs->dim()}, {"s0", bs->s0}, {"r", bs->r}, {"sigma", bs->sigma},
           {"dividend", bs->dividend}};
    json corr = json::array();
    for (std::size_t i = 0; i < bs->dim(); ++i) {
      corr.push_back(std::vector<double>(bs->corr.values.begin() + static_cast<std::ptrdiff_t>(i * bs->dim()),
                                         bs->corr.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * bs->dim())));
    }
    j["corr"] = corr;
    return j;
  }
  const auto& h = std::get<HestonParams>(model);
  return {{"type", "heston"}, {"s0", h.s0}, {"v0", h.v0}, {"kappa", h.kappa}, {"theta", h.theta},
          {"xi", h.xi},       {"rho", h.rho}, {"r", h.r}};
}

json payoff_json(const Payoff& payoff) {
  static const char* names[] = {"put", "max_call", "geometric_put", "basket_put"};
  json j{{"type", names[static_cast<int>(payoff.kind)]}, {"strike", payoff.strike}};
  if (payoff.kind == PayoffKind::ArithmeticBasketPut) j["weights"] = payoff.weights;
  return j;
}

json tree_fields(const TreeFitConfig& t) {
  json j{{"max_depth", t.max_depth}, {"min_samples_leaf", t.min_samples_leaf},
         {"split", t.split_strategy == SplitStrategy::BestDirectionBestThreshold ? "best" : "random"}};
  if (t.midpoint_prob > 0.0) j["midpoint_prob"] = t.midpoint_prob;
  return j;
}

// Each spec becomes its own single-point family entry so the sweep order is
// preserved exactly on re-parse.
json regressors_json(const RegressorSpec& spec) {
  if (const auto* t = std::get_if<TreeFitConfig>(&spec)) return {{"trees", tree_fields(*t)}};
  if (const auto* f = std::get_if<ForestFitConfig>(&spec)) {
    json j = tree_fields(f->tree);
    j["num_trees"] = f->num_trees;
    j["max_samples"] = f->max_samples;
    j["bootstrap"] = f->bootstrap;
    return {{"forests", j}};
  }
  return {{"polynomial", {{"degrees", {std::get<PolynomialSpec>(spec).degree}}}}};
}

// ------------------------------------------------------------- built-ins

TreeFitConfig tree(std::size_t depth, std::size_t leaf) { return TreeFitConfig{depth, leaf, SplitStrategy::RandomDirectionBestThreshold, 0.0, 0}; }

ForestFitConfig forest(std::size_t trees, double max_samples, std::size_t depth, std::size_t leaf) {
  ForestFitConfig c;
  c.num_trees = trees;
  c.tree = tree(depth, leaf);
  c.bootstrap = true;
  c.max_samples = max_samples;
  return c;
}

std::vector<RegressorSpec> tree_sweep(std::initializer_list<std::size_t> depths, std::initializer_list<std::size_t> leaves) {
  std::vector<RegressorSpec> out;
  for (auto d : depths)
    for (auto l : leaves) out.emplace_back(tree(d, l));
  return out;
}

std::vector<RegressorSpec> forest_sweep(std::initializer_list<std::size_t> trees, std::initializer_list<double> fractions,
                                        std::size_t depth, std::size_t leaf) {
  std::vector<RegressorSpec> out;
  for (auto b : trees)
    for (auto f : fractions) out.emplace_back(forest(b, f, depth, leaf));
  return out;
}

template <class... Lists>
std::vector<RegressorSpec> concat(Lists&&... lists) {
  std::vector<RegressorSpec> out;
  (out.insert(out.end(), lists.begin(), lists.end()), ...);
  return out;
}

ExperimentCase put1d_case() {
  return {"put1d", BlackScholesParams::symmetric(1, 100.0, 0.1, 0.25, 0.0, 0.0), Payoff::put(110.0),
          TimeGrid::uniform(1.0, 10), {}};
}

ExperimentCase maxcall2_case(double s0) {
  return {"maxcall2/s0=" + std::to_string(static_cast<int>(s0)), BlackScholesParams::symmetric(2, s0, 0.05, 0.2, 0.1, 0.0),
          Payoff::max_call(100.0), TimeGrid::uniform(3.0, 9), {}};
}

ExperimentCase geoput_case(std::size_t d) {
  return {"geoput" + std::to_string(d), BlackScholesParams::symmetric(d, 100.0, 0.05, 0.2, 0.0, 0.2),
          Payoff::geometric_put(100.0), TimeGrid::uniform(1.0, 10), {}};
}

ExperimentCase basketput40_case() {
  return {"basketput40", BlackScholesParams::symmetric(40, 100.0, 0.05, 0.2, 0.0, 0.2), Payoff::basket_put(100.0, 40),
          TimeGrid::uniform(1.0, 10), {}};
}

ExperimentCase maxcall50_case() {
  return {"maxcall50", BlackScholesParams::symmetric(50, 100.0, 0.05, 0.2, 0.1, 0.0), Payoff::max_call(100.0),
          TimeGrid::uniform(3.0, 9), {}};
}

ExperimentCase hestonput_case() {
  // theta is not part of the published parameter set; 0.012 reproduces the
  // quoted degree-3 LSM value of 1.70.
  HestonParams h{100.0, 0.01, 2.0, 0.012, 0.2, -0.3, 0.1};
  return {"hestonput", h, Payoff::put(100.0), TimeGrid::uniform(1.0, 10, 10), {}};
}

ExperimentCase with(ExperimentCase c, std::vector<RegressorSpec> regressors) {
  c.regressors = std::move(regressors);
  return c;
}

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"put1d", "1-D Bermudan put, K=110, S0=100, sigma=0.25, r=0.1, T=1, N=10; tree depth/leaf sweep and forests",
       "lattice reference 11.987"},
      {"maxcall2", "call on the max of 2 assets, K=100, S0 in {90,100,110}, sigma=0.2, r=0.05, delta=0.1, T=3, N=9",
       "references 8.08 / 13.90 / 21.34"},
      {"geoput2", "geometric basket put, d=2, K=S0=100, sigma=0.2, rho=0.2, r=0.05, T=1, N=10", "CRR reference 4.57"},
      {"geoput10", "geometric basket put, d=10, K=S0=100, sigma=0.2, rho=0.2, r=0.05, T=1, N=10",
       "CRR reference 2.92"},
      {"geoput40", "geometric basket put, d=40, K=S0=100, sigma=0.2, rho=0.2, r=0.05, T=1, N=10",
       "CRR reference 2.52"},
      {"basketput40", "arithmetic basket put, d=40, weights 1/d, K=S0=100, sigma=0.2, rho=0.2, r=0.05, T=1, N=10",
       "reference band [2.15, 2.22]"},
      {"maxcall50", "call on the max of 50 assets, K=S0=100, sigma=0.2, delta=0.1, rho=0, r=0.05, T=3, N=9",
       "95% interval [69.56, 69.95]"},
      {"hestonput", "Heston put, K=S0=100, v0=0.01, theta=0.012, kappa=2, xi=0.2, rho=-0.3, r=0.1, T=1, N=10",
       "degree-3 LSM value 1.70"},
      {"lsm-baselines", "polynomial least-squares baselines for every model above", "quoted LSM prices"},
  };
  return entries;
}

// --------------------------------------------------------------- CSV

std::string format_double(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (fit_paths < 1 || resim_paths < 1) throw ConfigError("paths_fit/paths_resim: must be >= 1");
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    const std::string where = "cases[" + std::to_string(i) + "]";
    try {
      std::visit([](const auto& p) { p.validate(); }, c.model);
      c.payoff.validate();
      if (c.payoff.kind == PayoffKind::Put1D && dimension(c.model) != 1) throw std::invalid_argument("put needs d = 1");
      if (c.payoff.kind == PayoffKind::ArithmeticBasketPut && c.payoff.weights.size() != dimension(c.model)) {
        throw std::invalid_argument("basket weights do not match the model dimension");
      }
    } catch (const std::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

std::vector<CatalogEntry> list_experiments() { return catalog(); }

ExperimentConfig builtin_experiment(const std::string& id) {
  ExperimentConfig config;
  config.id = id;
  if (id == "put1d") {
    config.cases.push_back(with(put1d_case(), concat(tree_sweep({2, 5, 10, 20}, {1, 100}),
                                                     forest_sweep({1, 5, 10, 20}, {0.5, 1.0}, 5, 100))));
  } else if (id == "maxcall2") {
    for (double s0 : {90.0, 100.0, 110.0}) {
      config.cases.push_back(with(maxcall2_case(s0), concat(tree_sweep({5, 10, 20}, {1, 100}),
                                                            forest_sweep({10, 50}, {0.5, 0.7, 0.9}, 8, 100))));
    }
  } else if (id == "geoput2" || id == "geoput10" || id == "geoput40") {
    const std::size_t d = std::stoul(id.substr(6));
    config.cases.push_back(
        with(geoput_case(d), concat(tree_sweep({5, 8}, {1, 100}), forest_sweep({10, 50}, {0.5, 0.9}, 8, 100))));
  } else if (id == "basketput40") {
    config.cases.push_back(
        with(basketput40_case(), concat(tree_sweep({2, 5, 8}, {100}), forest_sweep({50}, {0.5, 0.9}, 5, 100))));
  } else if (id == "maxcall50") {
    config.cases.push_back(
        with(maxcall50_case(), concat(tree_sweep({50, 100, 200}, {50, 100}), forest_sweep({10}, {0.5, 0.7, 0.9}, 100, 100))));
  } else if (id == "hestonput") {
    config.cases.push_back(with(hestonput_case(), concat(tree_sweep({5, 10, 15}, {1, 100}),
                                                         forest_sweep({10, 50}, {0.5, 0.9}, 5, 100),
                                                         std::vector<RegressorSpec>{PolynomialSpec{3}})));
  } else if (id == "lsm-baselines") {
    config.cases.push_back(with(put1d_case(), {PolynomialSpec{3}}));
    for (double s0 : {90.0, 100.0, 110.0}) config.cases.push_back(with(maxcall2_case(s0), {PolynomialSpec{5}}));
    config.cases.push_back(with(geoput_case(2), {PolynomialSpec{3}}));
    config.cases.push_back(with(geoput_case(10), {PolynomialSpec{3}}));
    config.cases.push_back(with(geoput_case(40), {PolynomialSpec{1}}));
    config.cases.push_back(with(basketput40_case(), {PolynomialSpec{1}}));
    config.cases.push_back(with(maxcall50_case(), {PolynomialSpec{1}}));
    config.cases.push_back(with(hestonput_case(), {PolynomialSpec{3}}));
  } else {
    throw ConfigError("experiment: unknown id '" + id + "'");
  }
  return config;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) fail("<root>", "expected an object");
  ExperimentConfig config;
  if (j.contains("id")) config.id = text(j["id"], "id");
  if (j.contains("seed")) config.seed = count(j["seed"], "seed");
  if (j.contains("paths_fit")) config.fit_paths = count(j["paths_fit"], "paths_fit");
  if (j.contains("paths_resim")) config.resim_paths = count(j["paths_resim"], "paths_resim");
  if (j.contains("workers")) config.workers = static_cast<unsigned>(count(j["workers"], "workers"));
  if (j.contains("output")) config.output = text(j["output"], "output");
  if (j.contains("itm_filter")) {
    if (!j["itm_filter"].is_boolean()) fail("itm_filter", "expected a boolean");
    config.itm_filter = j["itm_filter"].get<bool>();
  }
  const json& cases = member(j, "cases", "<root>");
  if (!cases.is_array()) fail("cases", "expected an array");
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const std::string path = "cases[" + std::to_string(i) + "]";
    const json& c = cases[i];
    ExperimentCase ec{c.contains("label") ? text(c["label"], path + ".label") : "case" + std::to_string(i),
                      parse_model(member(c, "model", path), path + ".model"),
                      {},
                      parse_grid(member(c, "grid", path), path + ".grid"),
                      {}};
    ec.payoff = parse_payoff(member(c, "payoff", path), dimension(ec.model), path + ".payoff");
    if (const auto it = c.find("regressors"); it != c.end()) {
      if (it->is_array()) {
        for (std::size_t k = 0; k < it->size(); ++k) {
          auto specs = parse_regressors((*it)[k], path + ".regressors[" + std::to_string(k) + "]");
          ec.regressors.insert(ec.regressors.end(), specs.begin(), specs.end());
        }
      } else {
        ec.regressors = parse_regressors(*it, path + ".regressors");
      }
    }
    config.cases.push_back(std::move(ec));
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& config) {
  json cases = json::array();
  for (const auto& c : config.cases) {
    json regressors = json::array();
    for (const auto& spec : c.regressors) regressors.push_back(regressors_json(spec));
    cases.push_back({{"label", c.label},
                     {"model", model_json(c.model)},
                     {"payoff", payoff_json(c.payoff)},
                     {"grid", {{"maturity", c.grid.maturity()}, {"dates", c.grid.num_dates()}, {"substeps", c.grid.substeps()}}},
                     {"regressors", regressors}});
  }
  json j{{"id", config.id},
         {"seed", config.seed},
         {"paths_fit", config.fit_paths},
         {"paths_resim", config.resim_paths},
         {"itm_filter", config.itm_filter},
         {"workers", config.workers},
         {"cases", cases}};
  if (!config.output.empty()) j["output"] = config.output;
  return j;
}

std::uint64_t case_seed(std::uint64_t root_seed, std::size_t index) { return derive_seed(root_seed, index); }

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<ResultRow> rows;
  for (std::size_t ci = 0; ci < config.cases.size(); ++ci) {
    const ExperimentCase& c = config.cases[ci];
    if (c.regressors.empty()) continue;
    EngineOptions options;
    options.fit_paths = config.fit_paths;
    options.resim_paths = config.resim_paths;
    options.itm_filter = config.itm_filter;
    options.seed = case_seed(config.seed, ci);

    const double r = short_rate(c.model);
    const PathSet fit_paths = simulate(c.model, c.grid, options.fit_paths, options.fit_seed());
    const CashflowMatrix fit_cash = cashflows(c.payoff, fit_paths, r);

    const std::size_t points = c.regressors.size();
    std::vector<std::optional<PolicyModel>> policies(points);
    std::vector<ResultRow> case_rows(points);
    parallel_for(points, config.workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        ResultRow& row = case_rows[k];
        row.experiment = c.label;
        row.regressor = describe(c.regressors[k]);
        row.seed = options.seed;
        const auto start = std::chrono::steady_clock::now();
        try {
          policies[k].emplace(fit_policy(fit_paths, fit_cash, c.regressors[k], options.itm_filter, options.policy_seed()));
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        row.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
    });

    std::vector<const PolicyModel*> fitted;
    std::vector<std::size_t> fitted_index;
    for (std::size_t k = 0; k < points; ++k) {
      if (policies[k]) {
        fitted.push_back(&*policies[k]);
        fitted_index.push_back(k);
      }
    }
    try {
      const auto results = price_resimulated(fitted, c.model, c.payoff, options.resim_paths, options.resim_seed());
      for (std::size_t i = 0; i < results.size(); ++i) {
        ResultRow& row = case_rows[fitted_index[i]];
        row.price = results[i].price;
        row.std_error = results[i].std_error;
        row.ci_lo = results[i].ci_lo;
        row.ci_hi = results[i].ci_hi;
        row.price_seconds = results[i].price_seconds;
      }
    } catch (const std::exception& e) {
      for (std::size_t k : fitted_index) case_rows[k].error = e.what();
    }
    rows.insert(rows.end(), case_rows.begin(), case_rows.end());
  }

  if (!config.output.empty()) {
    std::ofstream out(config.output);
    if (!out) throw ConfigError("output: cannot open '" + config.output + "' for writing");
    write_csv(out, rows);
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& row : rows) {
    out << csv_field(row.experiment) << ',' << csv_field(row.regressor);
    if (row.error) {
      // Failed points keep their row; the numeric fields stay empty.
      out << ",,,,," << format_double(row.fit_seconds) << ",," << row.seed << '\n';
      continue;
    }
    out << ',' << format_double(row.price) << ',' << format_double(row.std_error) << ',' << format_double(row.ci_lo)
        << ',' << format_double(row.ci_hi) << ',' << format_double(row.fit_seconds) << ','
        << format_double(row.price_seconds) << ',' << row.seed << '\n';
  }
}

std::vector<ResultRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ConfigError("csv: unexpected header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw ConfigError("csv: expected 9 fields, got " + std::to_string(f.size()));
    ResultRow row;
    row.experiment = f[0];
    row.regressor = f[1];
    row.seed = std::stoull(f[8]);
    if (f[2].empty()) {
      row.error = "";
      row.fit_seconds = f[6].empty() ? 0.0 : std::stod(f[6]);
    } else {
      row.price = std::stod(f[2]);
      row.std_error = std::stod(f[3]);
      row.ci_lo = std::stod(f[4]);
      row.ci_hi = std::stod(f[5]);
      row.fit_seconds = std::stod(f[6]);
      row.price_seconds = std::stod(f[7]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bermudan
