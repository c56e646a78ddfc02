#include "dcar/model_io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

#include "dcar/error.hpp"
#include "dcar/text_io.hpp"

namespace dcar {
namespace {

using Eigen::Index;
using text::format_real;
using text::parse_integer;
using text::parse_real;

void expect_key(text::LineReader& r, const std::vector<std::string>& toks, const std::string& key,
                std::size_t count) {
  if (toks.empty() || toks[0] != key || toks.size() != count) {
    r.fail("expected '" + key + "' line with " + std::to_string(count - 1) + " values");
  }
}

Eigen::MatrixXd read_rows(text::LineReader& r, Index rows, Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) m.row(i) = r.real_row(cols).transpose();
  return m;
}

Index positive(text::LineReader& r, const std::string& tok, const char* what) {
  const auto v = parse_integer(tok);
  if (v < 1) r.fail(std::string(what) + " must be positive");
  return static_cast<Index>(v);
}

}  // namespace

Index TrainedModel::input_dim() const {
  if (pca) return pca->input_dim();
  if (embedding) return embedding->ambient_dim();
  // mv-vector points are [mean, variance] of the frames.
  return krr.points.empty() ? 0 : krr.points.front().mean.size() / 2;
}

void write_model(std::ostream& out, const TrainedModel& m) {
  out << "model-v1\n";
  out << "representation " << representation_name(m.representation) << '\n';
  out << "events " << m.events.size();
  for (const auto& e : m.events) out << ' ' << e;
  out << '\n';
  out << "components " << m.components << '\n';
  out << "gmm_seed " << m.gmm_seed << '\n';
  out << "em " << m.em.max_iterations << ' ' << format_real(m.em.relative_tolerance) << ' '
      << format_real(m.em.collapse_fraction) << '\n';
  const auto& p = m.krr.params;
  out << "kernel " << format_real(p.lambda) << ' ' << format_real(p.sigma_mean) << ' '
      << format_real(p.sigma_cov) << ' ' << format_real(p.alpha) << '\n';
  if (m.pca) {
    out << "pca " << m.pca->input_dim() << ' ' << m.pca->output_dim() << ' '
        << format_real(m.pca->explained_variance_ratio) << '\n';
    text::write_row(out, m.pca->mean);
    for (Index i = 0; i < m.pca->basis.rows(); ++i) {
      text::write_row(out, m.pca->basis.row(i).transpose());
    }
  } else {
    out << "pca none\n";
  }
  if (m.embedding) {
    write_embedding(out, *m.embedding);
  } else {
    out << "emb-v1 none\n";
  }
  const auto n = m.krr.points.size();
  const Index mean_dim = n ? m.krr.points.front().mean.size() : 0;
  const Index cov_dim = n ? m.krr.points.front().log_cov.rows() : 0;
  out << "points " << n << ' ' << mean_dim << ' ' << cov_dim << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pt = m.krr.points[i];
    out << "item " << m.krr.labels[i] << ' ' << m.item_tracks[i] << '\n';
    text::write_row(out, pt.mean);
    for (Index row = 0; row < pt.log_cov.rows(); ++row) {
      text::write_row(out, pt.log_cov.row(row).transpose());
    }
  }
  out << "coefficients " << m.krr.coefficients.rows() << ' ' << m.krr.coefficients.cols()
      << '\n';
  for (Index i = 0; i < m.krr.coefficients.rows(); ++i) {
    text::write_row(out, m.krr.coefficients.row(i).transpose());
  }
  out << "end\n";
}

TrainedModel read_model(std::istream& in, const std::string& source) {
  text::LineReader r(in, source);
  TrainedModel m;
  auto toks = r.tokens();
  if (toks.size() != 1 || toks[0] != "model-v1") r.fail("expected header 'model-v1'");

  toks = r.tokens();
  expect_key(r, toks, "representation", 2);
  try {
    m.representation = parse_representation(toks[1]);
  } catch (const UsageError& e) {
    r.fail(e.what());
  }

  toks = r.tokens();
  if (toks.size() < 2 || toks[0] != "events") r.fail("expected 'events <L> ...'");
  const Index l = positive(r, toks[1], "event count");
  if (static_cast<Index>(toks.size()) != l + 2) r.fail("event list does not match its count");
  m.events.assign(toks.begin() + 2, toks.end());
  m.krr.event_count = static_cast<int>(l);

  toks = r.tokens();
  expect_key(r, toks, "components", 2);
  m.components = static_cast<int>(parse_integer(toks[1]));
  if (m.components < 0) r.fail("components must be >= 0");

  toks = r.tokens();
  expect_key(r, toks, "gmm_seed", 2);
  {
    const auto& s = toks[1];
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc() || ptr != s.data() + s.size()) r.fail("invalid gmm_seed");
    m.gmm_seed = seed;
  }

  toks = r.tokens();
  expect_key(r, toks, "em", 4);
  m.em.max_iterations = static_cast<int>(parse_integer(toks[1]));
  m.em.relative_tolerance = parse_real(toks[2]);
  m.em.collapse_fraction = parse_real(toks[3]);

  toks = r.tokens();
  expect_key(r, toks, "kernel", 5);
  m.krr.params = KernelParams{parse_real(toks[1]), parse_real(toks[2]), parse_real(toks[3]),
                              parse_real(toks[4])};
  try {
    m.krr.params.validate();
  } catch (const Error& e) {
    r.fail(e.what());
  }

  toks = r.tokens();
  if (toks.size() == 2 && toks[0] == "pca" && toks[1] == "none") {
  } else if (toks.size() == 4 && toks[0] == "pca") {
    const Index d = positive(r, toks[1], "pca input dim");
    const Index k = positive(r, toks[2], "pca output dim");
    PcaProjection pca;
    pca.explained_variance_ratio = parse_real(toks[3]);
    pca.mean = r.real_row(d);
    pca.basis = read_rows(r, d, k);
    m.pca = std::move(pca);
  } else {
    r.fail("expected 'pca none' or 'pca <d> <r> <ratio>'");
  }

  toks = r.tokens();
  if (toks.size() == 2 && toks[0] == "emb-v1" && toks[1] == "none") {
  } else if (toks.size() == 3 && toks[0] == "emb-v1") {
    const Index d = positive(r, toks[1], "embedding ambient dim");
    const Index k = positive(r, toks[2], "embedding reduced dim");
    if (k > d) r.fail("embedding reduced dim exceeds ambient dim");
    try {
      m.embedding = Embedding(read_rows(r, d, k), 1e-8);
    } catch (const NumericalError& e) {
      r.fail(e.what());
    }
  } else {
    r.fail("expected an emb-v1 block");
  }

  toks = r.tokens();
  expect_key(r, toks, "points", 4);
  const auto n = parse_integer(toks[1]);
  const Index mean_dim = static_cast<Index>(parse_integer(toks[2]));
  const Index cov_dim = static_cast<Index>(parse_integer(toks[3]));
  if (n < 1 || mean_dim < 1 || cov_dim < 0) r.fail("invalid points header");
  for (long long i = 0; i < n; ++i) {
    toks = r.tokens();
    expect_key(r, toks, "item", 3);
    const auto label = parse_integer(toks[1]);
    if (label < 0 || label >= l) r.fail("item label out of range");
    m.krr.labels.push_back(static_cast<int>(label));
    m.item_tracks.push_back(toks[2]);
    KernelPoint pt;
    pt.mean = r.real_row(mean_dim);
    if (cov_dim > 0) pt.log_cov = read_rows(r, cov_dim, cov_dim);
    m.krr.points.push_back(std::move(pt));
  }

  toks = r.tokens();
  expect_key(r, toks, "coefficients", 3);
  if (parse_integer(toks[1]) != n || parse_integer(toks[2]) != l) {
    r.fail("coefficient matrix must be points x events");
  }
  m.krr.coefficients = read_rows(r, static_cast<Index>(n), l);

  toks = r.tokens();
  if (toks.size() != 1 || toks[0] != "end") r.fail("expected 'end'");
  if (m.embedding && m.pca && m.embedding->ambient_dim() != m.pca->output_dim()) {
    r.fail("embedding and pca dimensions disagree");
  }
  return m;
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_model(out, model);
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model " + path.string());
  return read_model(in, path.string());
}

}  // namespace dcar
