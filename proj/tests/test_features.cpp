#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dcar/error.hpp"
#include "dcar/features.hpp"
#include "dcar/wav.hpp"
#include "support/generators.hpp"

using namespace dcar;
using dcar::testing::Gen;
using Eigen::MatrixXd;

namespace {

AudioTrack tone(double seconds, int rate, double freq, double amp = 0.5) {
  AudioTrack t;
  t.sample_rate = rate;
  t.track_id = "tone";
  const auto n = static_cast<std::size_t>(std::lround(seconds * rate));
  for (std::size_t i = 0; i < n; ++i) {
    t.samples.push_back(amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate));
  }
  return t;
}

AudioTrack noise(double seconds, int rate, std::uint64_t seed) {
  Gen gen(seed);
  AudioTrack t;
  t.sample_rate = rate;
  t.track_id = "noise";
  const auto n = static_cast<std::size_t>(std::lround(seconds * rate));
  for (std::size_t i = 0; i < n; ++i) t.samples.push_back(gen.uniform(-0.5, 0.5));
  return t;
}

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

}  // namespace

TEST(FrameLayout, OneSecondAt16k) {
  const FrameLayout l = frame_layout(16000, 16000);
  EXPECT_EQ(l.window, 1600);
  EXPECT_EQ(l.hop, 160);
  EXPECT_EQ(l.count, 91);
}

TEST(FrameLayout, ExactlyOneWindow) { EXPECT_EQ(frame_layout(1600, 16000).count, 1); }

TEST(FrameLayout, TooShortRejected) { EXPECT_THROW(frame_layout(1599, 16000), DataError); }

TEST(FrameLayout, MatchesLoopOracleOnRandomPairs) {
  Gen gen(41);
  const int rates[] = {8000, 11025, 16000, 22050, 44100, 48000};
  for (int trial = 0; trial < 100; ++trial) {
    const int rate = rates[gen.integer(0, 5)];
    const long win = std::lround(0.1 * rate);
    const long hop = std::lround(0.01 * rate);
    const auto n = static_cast<std::size_t>(win + gen.integer(0, 3 * rate));
    long count = 0;
    for (long start = 0; start + win <= static_cast<long>(n); start += hop) ++count;
    EXPECT_EQ(frame_layout(n, rate).count, count) << "n=" << n << " rate=" << rate;
  }
}

TEST(FrameSignal, ZeroSignalGivesZeroFrames) {
  AudioTrack t;
  t.sample_rate = 8000;
  t.samples.assign(8000, 0.0);
  const MatrixXd f = frame_signal(t);
  EXPECT_EQ(f.cols(), 91);
  EXPECT_EQ(f.rows(), 800);
  EXPECT_EQ(f.norm(), 0.0);
}

TEST(FrameSignal, HammingWeighted) {
  AudioTrack t;
  t.sample_rate = 1000;
  t.samples.assign(100, 1.0);
  const MatrixXd f = frame_signal(t);
  ASSERT_EQ(f.cols(), 1);
  const double n = 100.0;
  for (int i = 0; i < 100; ++i) {
    EXPECT_NEAR(f(i, 0), 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n - 1)), 1e-12);
  }
}

TEST(Mfcc, SilenceGivesConstantFiniteColumns) {
  AudioTrack t;
  t.sample_rate = 16000;
  t.samples.assign(16000, 0.0);
  const MatrixXd c = mfcc(frame_signal(t), t.sample_rate);
  ASSERT_EQ(c.rows(), 20);
  EXPECT_TRUE(all_finite(c));
  for (Eigen::Index j = 1; j < c.cols(); ++j) EXPECT_EQ(c.col(j), c.col(0));
}

TEST(Mfcc, SineAndNoiseDiffer) {
  const MatrixXd s = mfcc(frame_signal(tone(0.5, 16000, 440.0)), 16000);
  const MatrixXd w = mfcc(frame_signal(noise(0.5, 16000, 7)), 16000);
  for (Eigen::Index j = 0; j < s.cols(); ++j) EXPECT_GT((s.col(j) - w.col(j)).norm(), 1.0);
}

TEST(Mfcc, IdenticalFramesIdenticalColumns) {
  const MatrixXd f = frame_signal(noise(0.2, 8000, 3));
  MatrixXd twice(f.rows(), 2);
  twice.col(0) = f.col(0);
  twice.col(1) = f.col(0);
  const MatrixXd c = mfcc(twice, 8000);
  EXPECT_EQ(c.col(0), c.col(1));
}

TEST(Deltas, ConstantBaseGivesZero) {
  const MatrixXd base = MatrixXd::Constant(20, 15, 3.5);
  const MatrixXd full = append_deltas(base);
  ASSERT_EQ(full.rows(), 60);
  EXPECT_EQ(full.topRows(20), base);
  EXPECT_EQ(full.bottomRows(40).norm(), 0.0);
}

TEST(Deltas, LinearRamp) {
  const int m = 20;
  MatrixXd base(1, m);
  for (int t = 0; t < m; ++t) base(0, t) = t;
  const MatrixXd d1 = regression_deltas(base, 2);
  const MatrixXd d2 = regression_deltas(d1, 2);
  // Replicated padding bends the ramp within two frames of each edge, and
  // the second pass within four.
  for (int t = 2; t <= m - 3; ++t) EXPECT_NEAR(d1(0, t), 1.0, 1e-14) << t;
  for (int t = 4; t <= m - 5; ++t) EXPECT_NEAR(d2(0, t), 0.0, 1e-14) << t;
}

TEST(Deltas, SingleFrameGivesZero) {
  MatrixXd base(20, 1);
  base.setRandom();
  EXPECT_EQ(append_deltas(base).bottomRows(40).norm(), 0.0);
}

TEST(ExtractFeatures, SixtyDimensionalAndDeterministic) {
  const AudioTrack t = noise(0.6, 16000, 9);
  const FrameMatrix a = extract_features(t);
  const FrameMatrix b = extract_features(t);
  EXPECT_EQ(a.dim(), 60);
  EXPECT_EQ(a.frame_count(), frame_layout(t.samples.size(), 16000).count);
  EXPECT_EQ(a.columns, b.columns);
  EXPECT_TRUE(all_finite(a.columns));
}

TEST(ExtractFeatures, FiniteForExtremeInputs) {
  AudioTrack t = tone(0.3, 8000, 1000.0, 1.0);
  for (std::size_t i = 0; i < t.samples.size(); i += 2) t.samples[i] = (i % 4) ? 1.0 : -1.0;
  EXPECT_TRUE(all_finite(extract_features(t).columns));
  AudioTrack silent;
  silent.sample_rate = 8000;
  silent.samples.assign(4000, 0.0);
  EXPECT_TRUE(all_finite(extract_features(silent).columns));
}

TEST(Pca, FullRankReconstructsExactly) {
  Gen gen(51);
  const MatrixXd x = gen.gaussian(5, 40);
  const PcaProjection p = pca_fit(x, 5);
  const MatrixXd y = p.apply(x);
  const MatrixXd back = (p.basis * y).colwise() + p.mean;
  EXPECT_LT((back - x).norm(), 1e-10);
}

TEST(Pca, RecoversLowRankSubspace) {
  Gen gen(52);
  const MatrixXd basis = gen.orthonormal(5, 2);
  const MatrixXd x = (basis * gen.gaussian(2, 200) * 3.0).colwise() + gen.vector(5);
  const PcaProjection p = pca_fit(x, 2);
  EXPECT_GT(p.explained_variance_ratio, 0.999);
  EXPECT_LT((p.basis.transpose() * p.basis - MatrixXd::Identity(2, 2)).norm(), 1e-10);
  // Same span as the planted basis.
  EXPECT_LT((p.basis * p.basis.transpose() - basis * basis.transpose()).norm(), 1e-8);
}

TEST(Pca, Errors) {
  Gen gen(53);
  const MatrixXd x = gen.gaussian(4, 30);
  EXPECT_THROW(pca_fit(x, 0), UsageError);
  EXPECT_THROW(pca_fit(x, 5), UsageError);
  EXPECT_THROW(pca_fit(gen.gaussian(4, 4), 2), DataError);
  EXPECT_THROW(pca_fit(MatrixXd::Ones(4, 30), 2), DataError);
}

TEST(FramesFormat, RoundTripIsByteIdentical) {
  Gen gen(61);
  FrameMatrix f{"trk_1", gen.gaussian(6, 9) * 1e3};
  f.columns(0, 0) = 1e-300;
  f.columns(1, 0) = -0.1;
  std::ostringstream first;
  write_frames(first, f);
  std::istringstream in(first.str());
  const FrameMatrix back = read_frames(in);
  EXPECT_EQ(back.track_id, "trk_1");
  EXPECT_EQ(back.columns, f.columns);
  std::ostringstream second;
  write_frames(second, back);
  EXPECT_EQ(first.str(), second.str());
}

TEST(FramesFormat, RejectsMalformedInput) {
  std::istringstream bad_header("frames-v2 t 2 1\n0 0\n");
  EXPECT_THROW(read_frames(bad_header), DataError);
  std::istringstream short_row("frames-v1 t 2 2\n0 0\n1\n");
  EXPECT_THROW(read_frames(short_row), DataError);
  std::istringstream nan_value("frames-v1 t 1 1\nnan\n");
  EXPECT_THROW(read_frames(nan_value), DataError);
}

TEST(Wav, RoundTripThroughSixteenBitPcm) {
  const auto dir = std::filesystem::temp_directory_path() / "dcar_wav_test";
  std::filesystem::create_directories(dir);
  AudioTrack t = tone(0.25, 8000, 300.0);
  write_wav(dir / "a.wav", t);
  const AudioTrack back = read_wav(dir / "a.wav", "a");
  ASSERT_EQ(back.samples.size(), t.samples.size());
  EXPECT_EQ(back.sample_rate, 8000);
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    EXPECT_NEAR(back.samples[i], t.samples[i], 1.0 / 32767.0);
  }
  std::filesystem::remove_all(dir);
}

TEST(Wav, StereoFloatIsDownmixed) {
  const auto dir = std::filesystem::temp_directory_path() / "dcar_wav_float";
  std::filesystem::create_directories(dir);
  const std::vector<float> left{0.5f, -0.25f, 1.0f};
  const std::vector<float> right{0.1f, 0.25f, 0.0f};
  std::ofstream out(dir / "s.wav", std::ios::binary);
  auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
  const std::uint32_t data_bytes = 3 * 2 * 4;
  out.write("RIFF", 4);
  u32(36 + data_bytes);
  out.write("WAVEfmt ", 8);
  u32(16);
  u16(3);  // IEEE float
  u16(2);
  u32(22050);
  u32(22050 * 8);
  u16(8);
  u16(32);
  out.write("data", 4);
  u32(data_bytes);
  for (int i = 0; i < 3; ++i) {
    out.write(reinterpret_cast<const char*>(&left[static_cast<std::size_t>(i)]), 4);
    out.write(reinterpret_cast<const char*>(&right[static_cast<std::size_t>(i)]), 4);
  }
  out.close();
  const AudioTrack t = read_wav(dir / "s.wav");
  ASSERT_EQ(t.samples.size(), 3u);
  EXPECT_EQ(t.sample_rate, 22050);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(t.samples[i], 0.5 * (static_cast<double>(left[i]) + right[i]), 1e-7);
  }
  std::filesystem::remove_all(dir);
}

TEST(Wav, CorruptFileRejected) {
  const auto dir = std::filesystem::temp_directory_path() / "dcar_wav_bad";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "bad.wav") << "this is not a wav file";
  EXPECT_THROW(read_wav(dir / "bad.wav"), DataError);
  EXPECT_THROW(read_wav(dir / "missing.wav"), DataError);
  std::filesystem::remove_all(dir);
}
