#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dcar/error.hpp"
#include "dcar/eval.hpp"
#include "dcar/log.hpp"
#include "support/generators.hpp"

using namespace dcar;
using dcar::testing::Gen;

namespace {

// Two-tailed exact binomial p-value by direct summation of the pmf.
double oracle_mcnemar(long b, long c) {
  const long n = b + c;
  if (n == 0) return 1.0;
  const long k = std::min(b, c);
  double tail = 0.0;
  for (long i = 0; i <= k; ++i) {
    tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) -
                     static_cast<double>(n) * std::log(2.0));
  }
  return std::min(1.0, 2.0 * tail);
}

}  // namespace

TEST(Confusion, HandCase) {
  const std::vector<int> truth{0, 0, 1, 1};
  const std::vector<int> pred{0, 1, 1, 1};
  const ConfusionCounts c = confusion(pred, truth, 2);
  EXPECT_EQ(c.total, 4);
  EXPECT_EQ(c.events[0].tp, 1);
  EXPECT_EQ(c.events[0].fn, 1);
  EXPECT_EQ(c.events[0].fp, 0);
  EXPECT_EQ(c.events[0].tn, 2);
  EXPECT_EQ(c.events[1].tp, 2);
  EXPECT_EQ(c.events[1].fp, 1);
  EXPECT_EQ(c.events[1].fn, 0);
  EXPECT_EQ(c.events[1].tn, 1);
  const MetricReport m = metrics(c);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(m.fscore(0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.fscore(1), 0.8);
  EXPECT_DOUBLE_EQ(m.miss_rate(0), 0.5);
  EXPECT_DOUBLE_EQ(m.false_alarm_rate(1), 0.5);
}

TEST(Confusion, CountsAgreeWithBruteForce) {
  Gen gen(141);
  for (int trial = 0; trial < 100; ++trial) {
    const int l = gen.integer(2, 6);
    const int t = gen.integer(1, 50);
    std::vector<int> truth(static_cast<std::size_t>(t)), pred(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) {
      truth[static_cast<std::size_t>(i)] = gen.integer(0, l - 1);
      pred[static_cast<std::size_t>(i)] = gen.integer(0, l - 1);
    }
    const ConfusionCounts c = confusion(pred, truth, l);
    long tp_total = 0;
    for (int e = 0; e < l; ++e) {
      EventCounts want;
      for (int i = 0; i < t; ++i) {
        const bool is = truth[static_cast<std::size_t>(i)] == e;
        const bool said = pred[static_cast<std::size_t>(i)] == e;
        want.tp += is && said;
        want.fn += is && !said;
        want.fp += !is && said;
        want.tn += !is && !said;
      }
      const EventCounts& got = c.events[static_cast<std::size_t>(e)];
      EXPECT_EQ(got.tp, want.tp);
      EXPECT_EQ(got.fp, want.fp);
      EXPECT_EQ(got.tn, want.tn);
      EXPECT_EQ(got.fn, want.fn);
      EXPECT_EQ(got.tp + got.fp + got.tn + got.fn, t);
      tp_total += got.tp;
    }
    ScopedWarningSink quiet([](std::string_view) {});
    const MetricReport m = metrics(c);
    EXPECT_DOUBLE_EQ(m.accuracy, static_cast<double>(tp_total) / t);
    for (int e = 0; e < l; ++e) {
      EXPECT_GE(m.fscore(e), 0.0);
      EXPECT_LE(m.fscore(e), 1.0);
      EXPECT_GE(m.false_alarm_rate(e), 0.0);
      EXPECT_LE(m.miss_rate(e), 1.0);
    }
  }
}

TEST(Metrics, UndefinedRatioWarnsAndCountsZero) {
  const std::vector<int> truth{0, 0, 0};
  const std::vector<int> pred{0, 0, 0};
  std::vector<std::string> warnings;
  ScopedWarningSink sink([&](std::string_view w) { warnings.emplace_back(w); });
  const MetricReport m = metrics(confusion(pred, truth, 2));
  EXPECT_EQ(m.fscore(1), 0.0);
  EXPECT_EQ(m.miss_rate(1), 0.0);
  EXPECT_FALSE(warnings.empty());
}

TEST(McNemar, HandValues) {
  EXPECT_NEAR(mcnemar_exact(10, 0), 2.0 / 1024.0, 1e-15);
  EXPECT_EQ(mcnemar_exact(0, 0), 1.0);
  EXPECT_EQ(mcnemar_exact(7, 7), 1.0);
}

TEST(McNemar, SymmetricAndMatchesOracle) {
  for (long b = 0; b < 40; b += 3) {
    for (long c = 0; c < 40; c += 5) {
      EXPECT_EQ(mcnemar_exact(b, c), mcnemar_exact(c, b));
      EXPECT_NEAR(mcnemar_exact(b, c), oracle_mcnemar(b, c), 1e-10);
      EXPECT_LE(mcnemar_exact(b, c), 1.0);
    }
  }
  EXPECT_NEAR(mcnemar_exact(900, 1100), oracle_mcnemar(900, 1100), 1e-10);
  EXPECT_NEAR(mcnemar_exact(1500, 1400), oracle_mcnemar(1500, 1400), 1e-8);
}

TEST(McNemar, CountsDiscordantPairs) {
  const std::vector<int> truth{0, 0, 1, 1, 0, 1};
  const std::vector<int> a{0, 0, 1, 1, 1, 0};
  const std::vector<int> b{1, 1, 1, 0, 1, 0};
  // A right / B wrong at 0, 1, 3; never the other way round.
  EXPECT_DOUBLE_EQ(mcnemar(a, b, truth), mcnemar_exact(3, 0));
}

TEST(WinTieLoss, ConstructedTasks) {
  auto task = [](int a_only, int b_only, int both) {
    PairedPredictions p;
    for (int i = 0; i < a_only; ++i) {
      p.truth.push_back(0);
      p.method_a.push_back(0);
      p.method_b.push_back(1);
    }
    for (int i = 0; i < b_only; ++i) {
      p.truth.push_back(0);
      p.method_a.push_back(1);
      p.method_b.push_back(0);
    }
    for (int i = 0; i < both; ++i) {
      p.truth.push_back(1);
      p.method_a.push_back(1);
      p.method_b.push_back(1);
    }
    return p;
  };
  const std::vector<PairedPredictions> tasks{task(12, 0, 5), task(0, 12, 5), task(3, 3, 5),
                                             task(12, 1, 0), task(2, 1, 10)};
  const WinTieLoss w = win_tie_loss(tasks, 0.05);
  EXPECT_EQ(w.wins, 2);
  EXPECT_EQ(w.ties, 2);
  EXPECT_EQ(w.losses, 1);
  const WinTieLoss strict = win_tie_loss(tasks, 1e-12);
  EXPECT_EQ(strict.ties, 5);
}

TEST(ParameterGrid, SizesAndBounds) {
  const GridOptions one{3, 3, 5, 4, {1.0}, {0.5}};
  const auto g = parameter_grid(4, 10, one);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].components, 3);
  EXPECT_EQ(g[0].reduced_dim, 4);

  const auto full = parameter_grid(10, 40);
  std::set<int> rs;
  for (const auto& p : full) {
    rs.insert(p.reduced_dim);
    EXPECT_GE(p.reduced_dim, 10);
    EXPECT_LE(p.reduced_dim, 39);
  }
  EXPECT_EQ(rs, (std::set<int>{10, 15, 20, 25, 30, 35}));
  EXPECT_EQ(full.size(), 10u * 6u * 5u * 5u);
}

TEST(StratifiedFolds, DeterministicAndBalanced) {
  Gen gen(142);
  const std::vector<int> labels = gen.labels(53, 3);
  const auto a = stratified_folds(labels, 5, 9);
  EXPECT_EQ(a, stratified_folds(labels, 5, 9));
  for (int c = 0; c < 3; ++c) {
    std::vector<int> per(5, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) ++per[static_cast<std::size_t>(a[i])];
    }
    const auto [lo, hi] = std::minmax_element(per.begin(), per.end());
    EXPECT_LE(*hi - *lo, 1);
  }
}

TEST(StratifiedFolds, ReducesFoldsForSmallClasses) {
  const std::vector<int> labels{0, 0, 0, 1, 1, 1, 1, 1};
  int eff = 0;
  ScopedWarningSink quiet([](std::string_view) {});
  const auto f = stratified_folds(labels, 5, 1, &eff);
  EXPECT_EQ(eff, 3);
  EXPECT_EQ(*std::max_element(f.begin(), f.end()), 2);
  const std::vector<int> tiny{0, 1, 1};
  EXPECT_THROW(stratified_folds(tiny, 5, 1), DataError);
}

TEST(CrossValidate, TieBreaksTowardsSmallerSettings) {
  const std::vector<int> labels{0, 0, 0, 1, 1, 1};
  std::vector<ParameterPoint> grid{{2, 3, 1.0, 1.0}, {1, 3, 1.0, 1.0}, {2, 2, 1.0, 1.0},
                                   {2, 2, 0.1, 1.0}, {2, 2, 0.1, 0.5}};
  const CvResult r = cross_validate(labels, grid, 3, 4,
                                    [](const auto&, const auto&, const ParameterPoint&) { return 0.5; });
  EXPECT_EQ(r.folds, 3);
  EXPECT_EQ(r.best.reduced_dim, 2);
  EXPECT_EQ(r.best.components, 2);
  EXPECT_EQ(r.best.lambda, 0.1);
  EXPECT_EQ(r.best.alpha, 0.5);
  ASSERT_EQ(r.scores.size(), grid.size());

  const CvResult best = cross_validate(labels, grid, 3, 4,
                                       [](const auto&, const auto&, const ParameterPoint& p) {
                                         return p.components == 1 ? 0.9 : 0.4;
                                       });
  EXPECT_EQ(best.best.components, 1);
  EXPECT_DOUBLE_EQ(best.scores[1].mean_accuracy, 0.9);
}

TEST(CrossValidate, FoldsPartitionTracks) {
  Gen gen(143);
  const std::vector<int> labels = gen.labels(30, 3);
  const std::vector<ParameterPoint> grid{ParameterPoint{}};
  std::vector<int> seen(30, 0);
  cross_validate(labels, grid, 5, 7,
                 [&](const std::vector<std::size_t>& train, const std::vector<std::size_t>& val,
                     const ParameterPoint&) {
                   EXPECT_EQ(train.size() + val.size(), 30u);
                   for (std::size_t i : val) ++seen[i];
                   return 0.0;
                 });
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(Predictions, RoundTripIsExact) {
  Gen gen(144);
  PredictionFile f;
  f.events = {"birthday", "parade", "wedding"};
  for (int i = 0; i < 12; ++i) {
    f.records.push_back({"track" + std::to_string(i), f.events[static_cast<std::size_t>(i % 3)],
                         f.events[static_cast<std::size_t>((i * 7) % 3)], gen.vector(3)});
  }
  std::ostringstream a;
  write_predictions(a, f);
  std::istringstream in(a.str());
  const PredictionFile g = read_predictions(in);
  std::ostringstream b;
  write_predictions(b, g);
  EXPECT_EQ(a.str(), b.str());
  for (std::size_t i = 0; i < f.records.size(); ++i) {
    EXPECT_EQ(f.records[i].scores, g.records[i].scores);
  }
  EXPECT_EQ(g.truth_indices()[4], 1);
  EXPECT_EQ(g.predicted_indices()[1], 1);
}

TEST(Predictions, RejectsMalformed) {
  std::istringstream bad_header("pred-v2 2 a b\n");
  EXPECT_THROW(read_predictions(bad_header), DataError);
  std::istringstream short_row("pred-v1 2 a b\nt1 a b 0.5\n");
  EXPECT_THROW(read_predictions(short_row), DataError);
  std::istringstream unknown("pred-v1 2 a b\nt1 a c 0.5 0.5\n");
  EXPECT_THROW(read_predictions(unknown), DataError);
}

TEST(ReportCsv, Layout) {
  const std::vector<int> truth{0, 0, 1, 1};
  const std::vector<int> pred{0, 1, 1, 1};
  const std::vector<NamedReport> reports{{"dcar", metrics(confusion(pred, truth, 2))}};
  const std::vector<std::string> events{"a", "b"};
  std::ostringstream out;
  write_report_csv(out, reports, events);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "method,event,accuracy,fscore,far,miss_rate");
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("dcar,all,0.75", 0), 0u);
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("dcar,a,,", 0), 0u);
}

TEST(Reference, PublishedConstants) {
  EXPECT_LT(reference::kTenEventAccuracyMvVector, reference::kTenEventAccuracyIVector);
  EXPECT_LT(reference::kTenEventAccuracyGmm, reference::kTenEventAccuracyDcar);
  EXPECT_DOUBLE_EQ(reference::kTenEventAccuracyDcar, 0.5321);
  EXPECT_DOUBLE_EQ(reference::kBinaryAccuracyDcar, 0.8293);
  EXPECT_EQ(reference::kDcarVsIVectorAt005.wins + reference::kDcarVsIVectorAt005.ties +
                reference::kDcarVsIVectorAt005.losses,
            45);
  EXPECT_EQ(reference::kDcarVsIVectorAt001.wins, 40);
}
