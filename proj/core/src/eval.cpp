#include "dcar/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "dcar/error.hpp"
#include "dcar/log.hpp"
#include "dcar/text_io.hpp"

namespace dcar {
namespace {

double ratio_or_zero(long num, long den, const char* name, int event, bool& warned) {
  if (den == 0) {
    if (!warned) {
      warn(std::string(name) + " undefined for event " + std::to_string(event) +
           " (empty denominator); counted as 0");
      warned = true;
    }
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

// P(X <= k) for X ~ Binomial(n, 1/2).
double binomial_half_cdf(long k, long n) {
  if (n <= 1000) {
    double term = std::ldexp(1.0, -static_cast<int>(n));
    double sum = term;
    for (long i = 0; i < k; ++i) {
      term *= static_cast<double>(n - i) / static_cast<double>(i + 1);
      sum += term;
    }
    return sum;
  }
  double sum = 0.0;
  const double log_half_n = -static_cast<double>(n) * std::log(2.0);
  for (long i = 0; i <= k; ++i) {
    sum += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                    log_half_n);
  }
  return sum;
}

bool better_tie_break(const ParameterPoint& a, const ParameterPoint& b) {
  if (a.reduced_dim != b.reduced_dim) return a.reduced_dim < b.reduced_dim;
  if (a.components != b.components) return a.components < b.components;
  if (a.lambda != b.lambda) return a.lambda < b.lambda;
  return a.alpha < b.alpha;
}

int index_of(const std::vector<std::string>& events, const std::string& label,
             const std::string& where) {
  auto it = std::find(events.begin(), events.end(), label);
  if (it == events.end()) throw DataError(where + ": unknown label '" + label + "'");
  return static_cast<int>(it - events.begin());
}

}  // namespace

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> truth,
                          int event_count) {
  if (predicted.size() != truth.size()) {
    throw UsageError("confusion: prediction and truth lengths differ");
  }
  if (event_count < 1) throw UsageError("confusion: no events");
  ConfusionCounts c;
  c.events.assign(static_cast<std::size_t>(event_count), EventCounts{});
  c.total = static_cast<long>(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || t >= event_count || p < 0 || p >= event_count) {
      throw DataError("confusion: label outside the event catalog");
    }
    for (int l = 0; l < event_count; ++l) {
      auto& e = c.events[static_cast<std::size_t>(l)];
      const bool is_true = t == l;
      const bool is_pred = p == l;
      if (is_true && is_pred) {
        ++e.tp;
      } else if (!is_true && is_pred) {
        ++e.fp;
      } else if (is_true) {
        ++e.fn;
      } else {
        ++e.tn;
      }
    }
  }
  return c;
}

MetricReport metrics(const ConfusionCounts& counts) {
  if (counts.total <= 0) throw UsageError("metrics: no test tracks");
  const auto l = static_cast<Eigen::Index>(counts.events.size());
  MetricReport r;
  r.fscore.resize(l);
  r.false_alarm_rate.resize(l);
  r.miss_rate.resize(l);
  long tp_total = 0;
  bool warned_f = false;
  bool warned_far = false;
  bool warned_miss = false;
  for (Eigen::Index i = 0; i < l; ++i) {
    const auto& e = counts.events[static_cast<std::size_t>(i)];
    tp_total += e.tp;
    const int ev = static_cast<int>(i);
    r.fscore(i) = ratio_or_zero(2 * e.tp, 2 * e.tp + e.fp + e.fn, "FScore", ev, warned_f);
    r.false_alarm_rate(i) = ratio_or_zero(e.fp, e.tn + e.fp, "FAR", ev, warned_far);
    r.miss_rate(i) = ratio_or_zero(e.fn, e.fn + e.tp, "MissRate", ev, warned_miss);
  }
  r.accuracy = static_cast<double>(tp_total) / static_cast<double>(counts.total);
  r.mean_fscore = r.fscore.mean();
  r.mean_false_alarm_rate = r.false_alarm_rate.mean();
  r.mean_miss_rate = r.miss_rate.mean();
  return r;
}

double mcnemar_exact(long b, long c) {
  if (b < 0 || c < 0) throw UsageError("mcnemar: negative counts");
  const long n = b + c;
  if (n == 0) return 1.0;
  return std::min(1.0, 2.0 * binomial_half_cdf(std::min(b, c), n));
}

double mcnemar(std::span<const int> pred_a, std::span<const int> pred_b,
               std::span<const int> truth) {
  if (pred_a.size() != truth.size() || pred_b.size() != truth.size()) {
    throw UsageError("mcnemar: prediction lengths differ");
  }
  long b = 0;
  long c = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool a_ok = pred_a[i] == truth[i];
    const bool b_ok = pred_b[i] == truth[i];
    if (a_ok && !b_ok) ++b;
    if (!a_ok && b_ok) ++c;
  }
  return mcnemar_exact(b, c);
}

WinTieLoss win_tie_loss(std::span<const PairedPredictions> tasks, double level) {
  WinTieLoss out;
  for (const auto& task : tasks) {
    const double p = mcnemar(task.method_a, task.method_b, task.truth);
    if (p >= level) {
      ++out.ties;
      continue;
    }
    long a_right = 0;
    long b_right = 0;
    for (std::size_t i = 0; i < task.truth.size(); ++i) {
      a_right += task.method_a[i] == task.truth[i];
      b_right += task.method_b[i] == task.truth[i];
    }
    if (a_right > b_right) {
      ++out.wins;
    } else {
      ++out.losses;
    }
  }
  return out;
}

std::vector<ParameterPoint> parameter_grid(int event_count, int ambient_dim,
                                           const GridOptions& options) {
  std::vector<ParameterPoint> grid;
  const int r_max = std::min(options.max_reduced_dim, ambient_dim - 1);
  for (int p = options.min_components; p <= options.max_components; ++p) {
    for (int r = event_count; r <= r_max; r += options.reduced_dim_step) {
      for (double lam : options.lambdas) {
        for (double a : options.alphas) grid.push_back(ParameterPoint{p, r, lam, a});
      }
    }
  }
  return grid;
}

std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed,
                                  int* effective_folds) {
  if (folds < 2) throw UsageError("cross-validation needs at least two folds");
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  int k = folds;
  for (int cls : classes) {
    const auto n = static_cast<int>(std::count(labels.begin(), labels.end(), cls));
    if (n < k) {
      warn("event " + std::to_string(cls) + " has only " + std::to_string(n) +
           " training tracks; reducing folds from " + std::to_string(k));
      k = n;
    }
  }
  if (k < 2) throw DataError("cross-validation: some event has fewer than two tracks");
  std::mt19937_64 rng(seed);
  std::vector<int> fold(labels.size(), -1);
  for (int cls : classes) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    // Fisher-Yates with raw engine output keeps the order platform-independent.
    for (std::size_t i = members.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(members[i - 1], members[j]);
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      fold[members[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
  }
  if (effective_folds != nullptr) *effective_folds = k;
  return fold;
}

CvResult cross_validate(std::span<const int> labels, std::span<const ParameterPoint> grid,
                        int folds, std::uint64_t seed, const FoldScorer& scorer) {
  if (grid.empty()) throw UsageError("cross-validation grid is empty");
  CvResult result;
  const std::vector<int> fold = stratified_folds(labels, folds, seed, &result.folds);
  bool have_best = false;
  double best_mean = 0.0;
  for (const ParameterPoint& point : grid) {
    CvScore score{point, {}, 0.0};
    for (int f = 0; f < result.folds; ++f) {
      std::vector<std::size_t> train;
      std::vector<std::size_t> valid;
      for (std::size_t i = 0; i < fold.size(); ++i) {
        (fold[i] == f ? valid : train).push_back(i);
      }
      score.fold_accuracy.push_back(scorer(train, valid, point));
    }
    score.mean_accuracy =
        std::accumulate(score.fold_accuracy.begin(), score.fold_accuracy.end(), 0.0) /
        static_cast<double>(score.fold_accuracy.size());
    if (!have_best || score.mean_accuracy > best_mean ||
        (score.mean_accuracy == best_mean && better_tie_break(point, result.best))) {
      have_best = true;
      best_mean = score.mean_accuracy;
      result.best = point;
    }
    result.scores.push_back(std::move(score));
  }
  return result;
}

std::vector<int> PredictionFile::truth_indices() const {
  std::vector<int> out;
  for (const auto& r : records) out.push_back(index_of(events, r.truth, "pred-v1"));
  return out;
}

std::vector<int> PredictionFile::predicted_indices() const {
  std::vector<int> out;
  for (const auto& r : records) out.push_back(index_of(events, r.predicted, "pred-v1"));
  return out;
}

void write_predictions(std::ostream& out, const PredictionFile& file) {
  out << "pred-v1 " << file.events.size();
  for (const auto& e : file.events) out << ' ' << e;
  out << '\n';
  for (const auto& r : file.records) {
    out << r.track_id << ' ' << r.truth << ' ' << r.predicted;
    for (Eigen::Index j = 0; j < r.scores.size(); ++j) out << ' ' << text::format_real(r.scores(j));
    out << '\n';
  }
}

PredictionFile read_predictions(std::istream& in, const std::string& source) {
  text::LineReader reader(in, source);
  auto header = reader.tokens();
  if (header.size() < 2 || header[0] != "pred-v1") {
    reader.fail("expected header 'pred-v1 <L> <events...>'");
  }
  const auto l = text::parse_integer(header[1]);
  if (l < 1 || static_cast<long long>(header.size()) != l + 2) {
    reader.fail("event list does not match the declared count");
  }
  PredictionFile file;
  file.events.assign(header.begin() + 2, header.end());
  std::vector<std::string> toks;
  while (reader.try_tokens(toks)) {
    if (static_cast<long long>(toks.size()) != l + 3) {
      reader.fail("expected track_id, true label, predicted label and " + std::to_string(l) +
                  " scores");
    }
    PredictionRecord rec;
    rec.track_id = toks[0];
    rec.truth = toks[1];
    rec.predicted = toks[2];
    rec.scores.resize(l);
    for (long long j = 0; j < l; ++j) {
      rec.scores(j) = text::parse_real(toks[static_cast<std::size_t>(j + 3)]);
    }
    if (std::find(file.events.begin(), file.events.end(), rec.truth) == file.events.end() ||
        std::find(file.events.begin(), file.events.end(), rec.predicted) ==
            file.events.end()) {
      reader.fail("label not in the event list");
    }
    file.records.push_back(std::move(rec));
  }
  return file;
}

void save_predictions(const std::filesystem::path& path, const PredictionFile& file) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_predictions(out, file);
}

PredictionFile load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_predictions(in, path.string());
}

void write_report_csv(std::ostream& out, std::span<const NamedReport> reports,
                      std::span<const std::string> events) {
  out << "method,event,accuracy,fscore,far,miss_rate\n";
  for (const auto& nr : reports) {
    const auto& r = nr.report;
    out << nr.method << ",all," << text::format_real(r.accuracy) << ','
        << text::format_real(r.mean_fscore) << ',' << text::format_real(r.mean_false_alarm_rate)
        << ',' << text::format_real(r.mean_miss_rate) << '\n';
    for (Eigen::Index i = 0; i < r.fscore.size(); ++i) {
      const std::string name = static_cast<std::size_t>(i) < events.size()
                                   ? events[static_cast<std::size_t>(i)]
                                   : std::to_string(i);
      out << nr.method << ',' << name << ",," << text::format_real(r.fscore(i)) << ','
          << text::format_real(r.false_alarm_rate(i)) << ','
          << text::format_real(r.miss_rate(i)) << '\n';
    }
  }
}

void write_report_table(std::ostream& out, std::span<const NamedReport> reports) {
  std::size_t width = 6;
  for (const auto& nr : reports) width = std::max(width, nr.method.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "method" << "  " << std::right
     << std::setw(8) << "Accuracy" << std::setw(8) << "FScore" << std::setw(8) << "FAR"
     << std::setw(10) << "MissRate" << '\n';
  os << std::fixed << std::setprecision(4);
  for (const auto& nr : reports) {
    os << std::left << std::setw(static_cast<int>(width)) << nr.method << "  " << std::right
       << std::setw(8) << nr.report.accuracy << std::setw(8) << nr.report.mean_fscore
       << std::setw(8) << nr.report.mean_false_alarm_rate << std::setw(10)
       << nr.report.mean_miss_rate << '\n';
  }
  out << os.str();
}

}  // namespace dcar
