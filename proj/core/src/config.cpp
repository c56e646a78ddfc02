#include "dcar/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "dcar/error.hpp"
#include "dcar/text_io.hpp"

namespace dcar {
namespace pt = boost::property_tree;
namespace {

std::string join_reals(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += text::format_real(v[i]);
  }
  return out;
}

std::vector<double> parse_real_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw UsageError("empty entry in list '" + s + "'");
    out.push_back(text::parse_real(item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw UsageError("expected a boolean, got '" + s + "'");
}

// Binds every "section.key" to a setter and a getter so that parsing,
// validation of unknown keys, and writing share one table.
struct Binding {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Binding int_field(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) {
            c.*member = static_cast<T>(text::parse_integer(v));
          },
          [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

Binding real_field(double ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) { c.*member = text::parse_real(v); },
          [member](const ExperimentConfig& c) { return text::format_real(c.*member); }};
}

template <typename Get>
Binding int_ref(Get get) {
  return {[get](ExperimentConfig& c, const std::string& v) {
            auto& ref = get(c);
            ref = static_cast<std::remove_reference_t<decltype(ref)>>(text::parse_integer(v));
          },
          [get](const ExperimentConfig& c) {
            return std::to_string(get(c));
          }};
}

template <typename Get>
Binding real_ref(Get get) {
  return {[get](ExperimentConfig& c, const std::string& v) { get(c) = text::parse_real(v); },
          [get](const ExperimentConfig& c) {
            return text::format_real(get(c));
          }};
}

template <typename Get>
Binding seed_ref(Get get) {
  return {[get](ExperimentConfig& c, const std::string& v) {
            const long long s = text::parse_integer(v);
            if (s < 0) throw UsageError("seeds must be non-negative");
            get(c) = static_cast<std::uint64_t>(s);
          },
          [get](const ExperimentConfig& c) {
            return std::to_string(get(c));
          }};
}

const std::vector<std::pair<std::string, Binding>>& bindings() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string, Binding>> table = {
      {"model.representation",
       {[](C& c, const std::string& v) { c.representation = parse_representation(v); },
        [](const C& c) { return representation_name(c.representation); }}},
      {"model.components", int_field(&C::components)},
      {"model.reduced_dim", int_field(&C::reduced_dim)},
      {"model.lambda", real_field(&C::lambda)},
      {"model.alpha", real_field(&C::alpha)},
      {"model.sigma_mean", real_field(&C::sigma_mean)},
      {"model.sigma_cov", real_field(&C::sigma_cov)},
      {"affinity.within_neighbors", int_ref([](auto& c) -> auto& { return c.affinity.within_neighbors; })},
      {"affinity.between_neighbors",
       int_ref([](auto& c) -> auto& { return c.affinity.between_neighbors; })},
      {"affinity.bandwidth",
       {[](C& c, const std::string& v) {
          if (v == "self-tuning") {
            c.affinity.bandwidth = BandwidthMode::kSelfTuning;
          } else if (v == "median") {
            c.affinity.bandwidth = BandwidthMode::kGlobalMedian;
          } else {
            throw UsageError("affinity.bandwidth must be 'self-tuning' or 'median'");
          }
        },
        [](const C& c) {
          return std::string(c.affinity.bandwidth == BandwidthMode::kSelfTuning ? "self-tuning"
                                                                                : "median");
        }}},
      {"affinity.self_tuning_neighbor",
       int_ref([](auto& c) -> auto& { return c.affinity.self_tuning_neighbor; })},
      {"affinity.exclude_same_track",
       {[](C& c, const std::string& v) { c.affinity.exclude_same_track = parse_bool(v); },
        [](const C& c) { return std::string(c.affinity.exclude_same_track ? "true" : "false"); }}},
      {"gmm.max_iterations", int_ref([](auto& c) -> auto& { return c.em.max_iterations; })},
      {"gmm.tolerance", real_ref([](auto& c) -> auto& { return c.em.relative_tolerance; })},
      {"optimizer.max_iterations", int_ref([](auto& c) -> auto& { return c.optimizer.max_iterations; })},
      {"optimizer.tolerance",
       real_ref([](auto& c) -> auto& { return c.optimizer.relative_tolerance; })},
      {"optimizer.gradient_tolerance",
       real_ref([](auto& c) -> auto& { return c.optimizer.gradient_tolerance; })},
      {"optimizer.restart_period", int_ref([](auto& c) -> auto& { return c.optimizer.restart_period; })},
      {"optimizer.init",
       {[](C& c, const std::string& v) {
          if (v == "random") {
            c.optimizer.init = InitMode::kRandom;
          } else if (v == "principal") {
            c.optimizer.init = InitMode::kPrincipal;
          } else {
            throw UsageError("optimizer.init must be 'random' or 'principal'");
          }
        },
        [](const C& c) {
          return std::string(c.optimizer.init == InitMode::kRandom ? "random" : "principal");
        }}},
      {"optimizer.gradient",
       {[](C& c, const std::string& v) {
          if (v == "exact") {
            c.optimizer.gradient = GradientForm::kExact;
          } else if (v == "commuting") {
            c.optimizer.gradient = GradientForm::kCommuting;
          } else {
            throw UsageError("optimizer.gradient must be 'exact' or 'commuting'");
          }
        },
        [](const C& c) {
          return std::string(c.optimizer.gradient == GradientForm::kExact ? "exact" : "commuting");
        }}},
      {"features.mfcc_coefficients", int_ref([](auto& c) -> auto& { return c.mfcc.coefficients; })},
      {"features.mel_filters", int_ref([](auto& c) -> auto& { return c.mfcc.filters; })},
      {"features.pca_dim", int_field(&C::pca_dim)},
      {"seeds.gmm_seed", seed_ref([](auto& c) -> auto& { return c.seeds.gmm; })},
      {"seeds.init_seed", seed_ref([](auto& c) -> auto& { return c.seeds.init; })},
      {"seeds.synth_seed", seed_ref([](auto& c) -> auto& { return c.seeds.synth; })},
      {"seeds.cv_seed", seed_ref([](auto& c) -> auto& { return c.seeds.cv; })},
      {"tune.folds", int_field(&C::folds)},
      {"tune.min_components", int_ref([](auto& c) -> auto& { return c.grid.min_components; })},
      {"tune.max_components", int_ref([](auto& c) -> auto& { return c.grid.max_components; })},
      {"tune.reduced_dim_step", int_ref([](auto& c) -> auto& { return c.grid.reduced_dim_step; })},
      {"tune.max_reduced_dim", int_ref([](auto& c) -> auto& { return c.grid.max_reduced_dim; })},
      {"tune.lambdas",
       {[](C& c, const std::string& v) { c.grid.lambdas = parse_real_list(v); },
        [](const C& c) { return join_reals(c.grid.lambdas); }}},
      {"tune.alphas",
       {[](C& c, const std::string& v) { c.grid.alphas = parse_real_list(v); },
        [](const C& c) { return join_reals(c.grid.alphas); }}},
      {"run.jobs", int_field(&C::jobs)},
  };
  return table;
}

const Binding& find_binding(const std::string& key) {
  for (const auto& [name, b] : bindings()) {
    if (name == key) return b;
  }
  throw UsageError("unknown configuration key '" + key + "'");
}

void apply(ExperimentConfig& c, const std::string& key, const std::string& value) {
  try {
    find_binding(key).set(c, value);
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError("configuration key '" + key + "': " + e.what());
  }
}

void apply_overrides(ExperimentConfig& c, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("override '" + o + "' is not of the form section.key=value");
    }
    apply(c, o.substr(0, eq), o.substr(eq + 1));
  }
}

}  // namespace

std::string representation_name(Representation r) {
  switch (r) {
    case Representation::kDcar:
      return "dcar";
    case Representation::kGmmBaseline:
      return "gmm-baseline";
    case Representation::kMvVector:
      return "mv-vector";
  }
  return "dcar";
}

Representation parse_representation(const std::string& name) {
  if (name == "dcar") return Representation::kDcar;
  if (name == "gmm-baseline") return Representation::kGmmBaseline;
  if (name == "mv-vector") return Representation::kMvVector;
  throw UsageError("representation must be dcar, gmm-baseline or mv-vector, got '" + name + "'");
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("invalid configuration: " + what);
  };
  need(components >= 1, "model.components must be >= 1");
  need(reduced_dim >= 1, "model.reduced_dim must be >= 1");
  need(lambda > 0.0, "model.lambda must be > 0");
  need(alpha > 0.0, "model.alpha must be > 0");
  need(sigma_mean >= 0.0 && sigma_cov >= 0.0, "kernel bandwidths must be >= 0");
  need(affinity.within_neighbors >= 1 && affinity.between_neighbors >= 1,
       "affinity neighbor counts must be >= 1");
  need(affinity.self_tuning_neighbor >= 1, "affinity.self_tuning_neighbor must be >= 1");
  need(em.max_iterations >= 1 && em.relative_tolerance > 0.0, "gmm settings out of range");
  need(optimizer.max_iterations >= 0 && optimizer.relative_tolerance >= 0.0 &&
           optimizer.gradient_tolerance >= 0.0 && optimizer.restart_period >= 0,
       "optimizer settings out of range");
  need(mfcc.coefficients >= 1 && mfcc.filters >= mfcc.coefficients,
       "features: need 1 <= mfcc_coefficients <= mel_filters");
  need(pca_dim >= 0, "features.pca_dim must be >= 0");
  need(folds >= 2, "tune.folds must be >= 2");
  need(grid.min_components >= 1 && grid.max_components >= grid.min_components,
       "tune component range is empty");
  need(grid.reduced_dim_step >= 1 && grid.max_reduced_dim >= 1, "tune reduced_dim range invalid");
  for (double v : grid.lambdas) need(v > 0.0, "tune.lambdas must be positive");
  for (double v : grid.alphas) need(v > 0.0, "tune.alphas must be positive");
  need(jobs >= 1, "run.jobs must be >= 1");
}

ExperimentConfig parse_config(std::istream& in, const std::vector<std::string>& overrides,
                              const std::string& source) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw UsageError(source + ": key '" + section + "' outside any section");
    }
    for (const auto& [key, value] : body) apply(c, section + "." + key, value.data());
  }
  apply_overrides(c, overrides);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  return parse_config(in, overrides, path.string());
}

ExperimentConfig default_config(const std::vector<std::string>& overrides) {
  ExperimentConfig c;
  apply_overrides(c, overrides);
  c.validate();
  return c;
}

void write_config(std::ostream& out, const ExperimentConfig& config) {
  std::string current;
  for (const auto& [name, b] : bindings()) {
    const auto dot = name.find('.');
    const std::string section = name.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out << '\n';
      out << '[' << section << "]\n";
      current = section;
    }
    out << name.substr(dot + 1) << " = " << b.get(config) << '\n';
  }
}

}  // namespace dcar
