#include "magflow/loop.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace magflow {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

DiscreteLoop::DiscreteLoop(MatrixXd samples, VectorXi winding, double tau)
    : samples_(std::move(samples)), winding_(std::move(winding)), tau_(tau) {
  if (samples_.cols() < 8) throw std::invalid_argument("loop needs N >= 8 samples");
  if (tau_ <= 0.0) throw std::invalid_argument("loop period must be > 0");
  if (winding_.size() != samples_.rows())
    throw std::invalid_argument("winding vector dimension mismatch");
}

VectorXd DiscreteLoop::node(long j) const {
  const long N = size();
  long wraps = j >= 0 ? j / N : -((-j + N - 1) / N);
  long idx = j - wraps * N;
  return samples_.col(idx) + double(wraps) * winding_.cast<double>();
}

VectorXd DiscreteLoop::segment(int j) const { return node(j + 1) - node(j); }

VectorXd DiscreteLoop::midpoint(int j) const {
  return 0.5 * (node(j) + node(j + 1));
}

VectorXd DiscreteLoop::velocity_mid(int j) const { return segment(j) / step(); }

VectorXd DiscreteLoop::velocity_centered(int j) const {
  return (node(long(j) + 1) - node(long(j) - 1)) / (2.0 * step());
}

double DiscreteLoop::max_segment_norm() const {
  double m = 0.0;
  for (int j = 0; j < size(); ++j) m = std::max(m, segment(j).norm());
  return m;
}

double DiscreteLoop::extent() const {
  double m = 0.0;
  for (int j = 0; j < size(); ++j)
    for (int k = j + 1; k < size(); ++k)
      m = std::max(m, (samples_.col(j) - samples_.col(k)).norm());
  return m;
}

DiscreteLoop DiscreteLoop::refined() const {
  const int N = size();
  MatrixXd s(dim(), 2 * N);
  for (int j = 0; j < N; ++j) {
    s.col(2 * j) = node(j);
    s.col(2 * j + 1) = midpoint(j);
  }
  return DiscreteLoop(std::move(s), winding_, tau_);
}

DiscreteLoop DiscreteLoop::with_resolution_guard(double guard) const {
  DiscreteLoop out = *this;
  for (int pass = 0; pass < 20 && out.max_segment_norm() > guard; ++pass)
    out = out.refined();
  if (out.max_segment_norm() > guard)
    throw std::runtime_error("loop resolution guard unattainable");
  return out;
}

DiscreteLoop DiscreteLoop::translated(const VectorXd& shift) const {
  DiscreteLoop out = *this;
  out.samples_.colwise() += shift;
  return out;
}

DiscreteLoop DiscreteLoop::time_shifted(int s) const {
  const int N = size();
  MatrixXd out(dim(), N);
  for (int j = 0; j < N; ++j) out.col(j) = node(long(j) + s);
  return DiscreteLoop(std::move(out), winding_, tau_);
}

DiscreteLoop DiscreteLoop::constant(const VectorXd& q0, int N, double tau,
                                    const VectorXi* winding) {
  const int n = static_cast<int>(q0.size());
  VectorXi alpha = winding ? *winding : VectorXi::Zero(n);
  if (!alpha.isZero())
    throw std::invalid_argument("constant loop must have zero winding");
  MatrixXd s(n, N);
  s.colwise() = q0;
  return DiscreteLoop(std::move(s), alpha, tau);
}

DiscreteLoop DiscreteLoop::straight(const VectorXd& q0, const VectorXi& winding,
                                    int N, double tau) {
  const int n = static_cast<int>(q0.size());
  MatrixXd s(n, N);
  for (int j = 0; j < N; ++j)
    s.col(j) = q0 + (double(j) / N) * winding.cast<double>();
  return DiscreteLoop(std::move(s), winding, tau);
}

DiscreteLoop DiscreteLoop::circle(const VectorXd& center, double radius, int N,
                                  double tau, int turns, int plane_a,
                                  int plane_b) {
  const int n = static_cast<int>(center.size());
  MatrixXd s(n, N);
  for (int j = 0; j < N; ++j) {
    const double ang = kTwoPi * turns * j / N;
    VectorXd q = center;
    q[plane_a] += radius * std::cos(ang);
    q[plane_b] += radius * std::sin(ang);
    s.col(j) = q;
  }
  return DiscreteLoop(std::move(s), VectorXi::Zero(n), tau);
}

DiscreteLoop DiscreteLoop::random_fourier(std::mt19937_64& rng, int dim,
                                          const VectorXi& winding, int N,
                                          double tau, double amplitude,
                                          int max_mode, const VectorXd* base) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  MatrixXd a(dim, max_mode + 1), b(dim, max_mode + 1);
  for (int m = 0; m <= max_mode; ++m) {
    const double scale = amplitude / double(1 + m);
    for (int i = 0; i < dim; ++i) {
      a(i, m) = scale * unif(rng);
      b(i, m) = (m == 0) ? 0.0 : scale * unif(rng);
    }
  }
  const VectorXd q0 = base ? *base : VectorXd::Zero(dim);
  MatrixXd s(dim, N);
  for (int j = 0; j < N; ++j) {
    const double u = double(j) / N;  // t / tau
    VectorXd q = q0 + u * winding.cast<double>();
    for (int m = 0; m <= max_mode; ++m)
      q += a.col(m) * std::cos(kTwoPi * m * u) + b.col(m) * std::sin(kTwoPi * m * u);
    s.col(j) = q;
  }
  return DiscreteLoop(std::move(s), winding, tau);
}

CotangentLoop::CotangentLoop(DiscreteLoop b, MatrixXd p)
    : base(std::move(b)), momenta(std::move(p)) {
  if (momenta.rows() != base.dim() || momenta.cols() != base.size())
    throw std::invalid_argument("momentum array shape mismatch");
  if (!momenta.allFinite())
    throw std::invalid_argument("momenta must be finite");
}

// ---- serialization ------------------------------------------------------

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void write_loop_csv(const std::string& path, const DiscreteLoop& loop) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "t";
  for (int i = 0; i < loop.dim(); ++i) f << ",x" << (i + 1);
  f << "\n";
  for (int j = 0; j < loop.size(); ++j) {
    f << fmt17(loop.t_node(j));
    for (int i = 0; i < loop.dim(); ++i) f << "," << fmt17(loop.samples()(i, j));
    f << "\n";
  }
}

void write_loop_sidecar(const std::string& path, const DiscreteLoop& loop,
                        const std::string& metric_name,
                        const std::string& sigma_name) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "{\n  \"tau\": " << fmt17(loop.tau()) << ",\n  \"N\": " << loop.size()
    << ",\n  \"winding\": [";
  for (int i = 0; i < loop.winding().size(); ++i) {
    if (i) f << ", ";
    f << loop.winding()[i];
  }
  f << "],\n  \"metric\": \"" << metric_name << "\",\n  \"sigma\": \""
    << sigma_name << "\"\n}\n";
}

DiscreteLoop read_loop_csv(const std::string& csv_path,
                           const std::string& sidecar_path) {
  std::ifstream side(sidecar_path);
  if (!side) throw std::runtime_error("cannot open " + sidecar_path);
  std::string text((std::istreambuf_iterator<char>(side)),
                   std::istreambuf_iterator<char>());
  auto grab_num = [&](const std::string& key) {
    const auto pos = text.find("\"" + key + "\"");
    if (pos == std::string::npos)
      throw std::runtime_error("sidecar missing key " + key);
    return std::stod(text.substr(text.find(':', pos) + 1));
  };
  const double tau = grab_num("tau");
  const int N = static_cast<int>(grab_num("N"));
  std::vector<int> winding;
  {
    auto pos = text.find("\"winding\"");
    auto lb = text.find('[', pos), rb = text.find(']', pos);
    std::stringstream ss(text.substr(lb + 1, rb - lb - 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) winding.push_back(std::stoi(tok));
  }

  std::ifstream f(csv_path);
  if (!f) throw std::runtime_error("cannot open " + csv_path);
  std::string line;
  std::getline(f, line);  // header
  const int n = static_cast<int>(winding.size());
  MatrixXd s(n, N);
  for (int j = 0; j < N; ++j) {
    if (!std::getline(f, line)) throw std::runtime_error("truncated loop CSV");
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');  // t column
    for (int i = 0; i < n; ++i) {
      if (!std::getline(ss, tok, ',')) throw std::runtime_error("short CSV row");
      s(i, j) = std::stod(tok);
    }
  }
  VectorXi alpha(n);
  for (int i = 0; i < n; ++i) alpha[i] = winding[i];
  return DiscreteLoop(std::move(s), std::move(alpha), tau);
}

void write_loop_poly(const std::string& path, const DiscreteLoop& loop) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  for (int j = 0; j <= loop.size(); ++j) {  // closed: repeat first vertex lifted
    f << fmt17(j * loop.step());
    const VectorXd q = loop.node(j);
    for (int i = 0; i < loop.dim(); ++i) f << " " << fmt17(q[i]);
    f << "\n";
  }
}

}  // namespace magflow
