#include "dcar/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "dcar/error.hpp"
#include "dcar/text_io.hpp"

namespace dcar {

Embedding::Embedding(Eigen::MatrixXd w, double tolerance) : w_(std::move(w)) {
  if (w_.cols() < 1 || w_.rows() < w_.cols()) {
    throw UsageError("embedding must be d x r with 1 <= r <= d");
  }
  if (!w_.allFinite()) throw NumericalError("embedding has non-finite entries");
  const double err = orthonormality_error();
  if (err > tolerance) {
    throw NumericalError("embedding columns are not orthonormal (||W^T W - I||_F = " +
                         text::format_real(err) + ")");
  }
}

Embedding Embedding::identity(Eigen::Index d) {
  return Embedding(Eigen::MatrixXd::Identity(d, d));
}

Embedding Embedding::orthonormalize(const Eigen::MatrixXd& m) {
  if (m.cols() < 1 || m.rows() < m.cols()) {
    throw UsageError("orthonormalize: expected a tall matrix");
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
  const Eigen::MatrixXd r = qr.matrixQR().topRows(m.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (r(c, c) < 0) q.col(c) *= -1.0;
  }
  return Embedding(std::move(q));
}

Embedding Embedding::random(Eigen::Index d, Eigen::Index r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(d, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) m(i, j) = normal(rng);
  }
  return orthonormalize(m);
}

Embedding Embedding::principal(std::span<const GaussianComponent> components,
                               Eigen::Index r) {
  if (components.empty()) throw UsageError("principal init: no components");
  const Eigen::Index d = components.front().dim();
  const auto n = static_cast<double>(components.size());
  Eigen::VectorXd mean_mu = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd mean_log = Eigen::MatrixXd::Zero(d, d);
  std::vector<Eigen::MatrixXd> logs;
  for (const auto& c : components) {
    mean_mu += c.mean / n;
    logs.push_back(sym_log(c.covariance).matrix());
    mean_log += logs.back() / n;
  }
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < components.size(); ++i) {
    const Eigen::VectorXd dm = components[i].mean - mean_mu;
    const Eigen::MatrixXd dl = logs[i] - mean_log;
    scatter += dm * dm.transpose() + dl * dl.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (scatter + scatter.transpose()));
  Eigen::MatrixXd top = es.eigenvectors().rightCols(r).rowwise().reverse();
  for (Eigen::Index c = 0; c < r; ++c) {
    Eigen::Index arg = 0;
    top.col(c).cwiseAbs().maxCoeff(&arg);
    if (top(arg, c) < 0) top.col(c) *= -1.0;
  }
  return orthonormalize(top);
}

double Embedding::orthonormality_error() const {
  return (w_.transpose() * w_ - Eigen::MatrixXd::Identity(w_.cols(), w_.cols())).norm();
}

TangentVector project_to_tangent(const Embedding& w, const Eigen::MatrixXd& g) {
  const Eigen::MatrixXd& wm = w.matrix();
  if (g.rows() != wm.rows() || g.cols() != wm.cols()) {
    throw UsageError("project_to_tangent: shape mismatch");
  }
  return TangentVector{g - wm * (wm.transpose() * g)};
}

GeodesicStep::GeodesicStep(const Embedding& w, const TangentVector& h) : w_(w.matrix()) {
  if (h.direction.rows() != w_.rows() || h.direction.cols() != w_.cols()) {
    throw UsageError("geodesic: direction shape mismatch");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(h.direction,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  u_ = svd.matrixU();
  singular_ = svd.singularValues();
  v_ = svd.matrixV();
  wv_ = w_ * v_;
}

Embedding GeodesicStep::point(double t) const {
  if (t == 0.0 || singular_.size() == 0 || max_singular_value() == 0.0) {
    return Embedding(w_, 1e-8);
  }
  const Eigen::ArrayXd st = singular_.array() * t;
  Eigen::MatrixXd wt = (wv_ * st.cos().matrix().asDiagonal() +
                        u_ * st.sin().matrix().asDiagonal()) *
                       v_.transpose();
  const double drift =
      (wt.transpose() * wt - Eigen::MatrixXd::Identity(wt.cols(), wt.cols())).norm();
  if (drift > 1e-12) return Embedding::orthonormalize(wt);
  return Embedding(std::move(wt));
}

TangentVector GeodesicStep::transport_direction(double t) const {
  const Eigen::ArrayXd st = singular_.array() * t;
  return TangentVector{(-wv_ * st.sin().matrix().asDiagonal() +
                        u_ * st.cos().matrix().asDiagonal()) *
                       singular_.asDiagonal() * v_.transpose()};
}

TangentVector GeodesicStep::transport_tangent(const TangentVector& d, double t) const {
  const Eigen::ArrayXd st = singular_.array() * t;
  const Eigen::MatrixXd correction =
      (wv_ * st.sin().matrix().asDiagonal() +
       u_ * (1.0 - st.cos()).matrix().asDiagonal()) *
      (u_.transpose() * d.direction);
  return TangentVector{d.direction - correction};
}

Embedding geodesic(const Embedding& w, const TangentVector& h, double t) {
  return GeodesicStep(w, h).point(t);
}

TangentVector transport_search_direction(const Embedding& w, const TangentVector& h,
                                         double t) {
  return GeodesicStep(w, h).transport_direction(t);
}

TangentVector transport_gradient(const Embedding& w, const TangentVector& d,
                                 const TangentVector& h, double t) {
  return GeodesicStep(w, h).transport_tangent(d, t);
}

double cg_step_size(const TangentVector& d_new, const TangentVector& transported_d_old,
                    const TangentVector& d_old) {
  const double denom = inner(d_old.direction, d_old.direction);
  if (denom == 0.0) return 0.0;
  return inner(d_new.direction - transported_d_old.direction, d_new.direction) / denom;
}

GaussianComponent reduce_component(const Embedding& w, const GaussianComponent& g) {
  const Eigen::MatrixXd& wm = w.matrix();
  if (g.dim() != wm.rows()) {
    throw UsageError("reduce_component: component dimension " + std::to_string(g.dim()) +
                     " vs embedding ambient dimension " + std::to_string(wm.rows()));
  }
  GaussianComponent out;
  out.weight = g.weight;
  out.mean = wm.transpose() * g.mean;
  out.covariance = SpdMatrix(wm.transpose() * g.covariance.matrix() * wm);
  return out;
}

Eigen::VectorXd principal_angles(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) throw UsageError("principal_angles: row mismatch");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.transpose() * b);
  Eigen::VectorXd s = svd.singularValues();
  Eigen::VectorXd angles(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    angles(i) = std::acos(std::clamp(s(i), -1.0, 1.0));
  }
  std::sort(angles.data(), angles.data() + angles.size());
  return angles;
}

void write_embedding(std::ostream& out, const Embedding& w) {
  out << "emb-v1 " << w.ambient_dim() << ' ' << w.reduced_dim() << '\n';
  for (Eigen::Index i = 0; i < w.ambient_dim(); ++i) {
    text::write_row(out, w.matrix().row(i).transpose());
  }
}

Embedding read_embedding(std::istream& in, const std::string& source) {
  text::LineReader reader(in, source);
  auto header = reader.tokens();
  if (header.size() != 3 || header[0] != "emb-v1") {
    reader.fail("expected header 'emb-v1 <d> <r>'");
  }
  const auto d = text::parse_integer(header[1]);
  const auto r = text::parse_integer(header[2]);
  if (d < 1 || r < 1 || r > d) reader.fail("invalid embedding shape");
  Eigen::MatrixXd w(d, r);
  for (long long i = 0; i < d; ++i) w.row(i) = reader.real_row(r).transpose();
  try {
    return Embedding(std::move(w), 1e-8);
  } catch (const NumericalError& e) {
    reader.fail(e.what());
  }
}

void save_embedding(const std::filesystem::path& path, const Embedding& w) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_embedding(out, w);
}

Embedding load_embedding(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_embedding(in, path.string());
}

}  // namespace dcar
