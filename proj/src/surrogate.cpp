#include "parafem/surrogate.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace parafem {

namespace {

/// tanh through the vectorized exponential; agrees with std::tanh to a few
/// ulps and is an order of magnitude faster on wide batches.
Eigen::MatrixXd tanh_batch(const Eigen::MatrixXd& z)
{
  return (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

} // namespace

SurrogateNet::SurrogateNet(std::vector<int> dims, DomainPtr domain)
    : dims_(std::move(dims)), domain_(std::move(domain))
{
  if (dims_.size() < 2 || dims_.front() != 2 || dims_.back() != 1)
    throw std::invalid_argument("layer dims must start with 2 and end with 1");
  for (int d : dims_)
    if (d <= 0)
      throw std::invalid_argument("layer widths must be positive");
  if (!domain_)
    throw std::invalid_argument("surrogate needs a domain for its distance factor");
  Eigen::Index off = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    w_offset_.push_back(off);
    off += static_cast<Eigen::Index>(dims_[l]) * dims_[l + 1];
    b_offset_.push_back(off);
    if (l + 2 < dims_.size())
      off += dims_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(off);
}

void SurrogateNet::set_parameters(const Eigen::VectorXd& p)
{
  if (p.size() != params_.size())
    throw std::invalid_argument("parameter vector has the wrong length");
  if (!p.allFinite())
    throw std::invalid_argument("parameters must be finite");
  params_ = p;
}

SurrogateNet::Weights SurrogateNet::weight(std::size_t l)
{
  return {params_.data() + w_offset_.at(l), dims_[l + 1], dims_[l]};
}

SurrogateNet::ConstWeights SurrogateNet::weight(std::size_t l) const
{
  return {params_.data() + w_offset_.at(l), dims_[l + 1], dims_[l]};
}

SurrogateNet::Bias SurrogateNet::bias(std::size_t l)
{
  if (l + 1 >= num_layers())
    throw std::out_of_range("the output layer has no bias");
  return {params_.data() + b_offset_[l], dims_[l + 1]};
}

SurrogateNet::ConstBias SurrogateNet::bias(std::size_t l) const
{
  if (l + 1 >= num_layers())
    throw std::out_of_range("the output layer has no bias");
  return {params_.data() + b_offset_[l], dims_[l + 1]};
}

Eigen::RowVectorXd SurrogateNet::raw(const Eigen::Matrix2Xd& x) const
{
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l + 1 < num_layers(); ++l) {
    Eigen::MatrixXd z = weight(l) * a;
    z.colwise() += bias(l);
    a = tanh_batch(z);
  }
  return weight(num_layers() - 1) * a;
}

void SurrogateNet::evaluate(std::span<const Point2> points, std::span<double> out) const
{
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::Matrix2Xd x(2, n);
  for (Eigen::Index i = 0; i < n; ++i)
    x.col(i) << points[static_cast<std::size_t>(i)].x, points[static_cast<std::size_t>(i)].y;
  const Eigen::RowVectorXd u = raw(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point2 p = points[static_cast<std::size_t>(i)];
    double v = domain_->distance(p) * u[i];
    if (lift_)
      v += lift_(p);
    out[static_cast<std::size_t>(i)] = v;
  }
}

SurrogateNet init_net(std::vector<int> dims, std::uint64_t seed, DomainPtr domain)
{
  SurrogateNet net(std::move(dims), std::move(domain));
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const int fan_in = net.dims()[l];
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    auto w = net.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        w(i, j) = normal(rng);
  }
  return net;
}

TrainingSet make_training_set(const SurrogateNet& net, const FeFunction& target)
{
  const Mesh& mesh = *target.mesh();
  const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
  TrainingSet s{Eigen::Matrix2Xd(2, n), Eigen::RowVectorXd(n), Eigen::RowVectorXd::Zero(n),
                Eigen::RowVectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point2 p = mesh.vertices()[static_cast<std::size_t>(i)];
    s.x.col(i) << p.x, p.y;
    s.distance[i] = net.domain()->distance(p);
    if (net.has_lift())
      s.lift[i] = net.lift()(p);
    s.target[i] = target[static_cast<std::size_t>(i)];
  }
  return s;
}

double loss(const SurrogateNet& net, const TrainingSet& data)
{
  const Eigen::RowVectorXd r =
    data.distance.cwiseProduct(net.raw(data.x)) + data.lift - data.target;
  return r.squaredNorm() / static_cast<double>(data.size());
}

double loss(const SurrogateNet& net, const FeFunction& target)
{
  return loss(net, make_training_set(net, target));
}

double loss_and_gradient(const SurrogateNet& net, const TrainingSet& data, Eigen::VectorXd& grad)
{
  const std::size_t layers = net.num_layers();
  std::vector<Eigen::MatrixXd> acts(layers);
  acts[0] = data.x;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Eigen::MatrixXd z = net.weight(l) * acts[l];
    z.colwise() += net.bias(l);
    acts[l + 1] = tanh_batch(z);
  }
  const Eigen::RowVectorXd out = net.weight(layers - 1) * acts[layers - 1];
  const Eigen::RowVectorXd r = data.distance.cwiseProduct(out) + data.lift - data.target;
  const double n = static_cast<double>(data.size());
  const double value = r.squaredNorm() / n;

  grad.resize(static_cast<Eigen::Index>(net.num_parameters()));
  const auto& dims = net.dims();
  auto slice_w = [&](std::size_t l) {
    return Eigen::Map<Eigen::MatrixXd>(grad.data() + net.weight_offset(l), dims[l + 1], dims[l]);
  };
  auto slice_b = [&](std::size_t l) {
    return Eigen::Map<Eigen::VectorXd>(grad.data() + net.bias_offset(l), dims[l + 1]);
  };

  Eigen::MatrixXd delta = ((2.0 / n) * r.cwiseProduct(data.distance));
  slice_w(layers - 1) = delta * acts[layers - 1].transpose();
  for (std::size_t l = layers - 1; l-- > 0;) {
    Eigen::MatrixXd da = net.weight(l + 1).transpose() * delta;
    delta = (da.array() * (1.0 - acts[l + 1].array().square())).matrix();
    slice_w(l) = delta * acts[l].transpose();
    slice_b(l) = delta.rowwise().sum();
  }
  return value;
}

Eigen::VectorXd gradient(const SurrogateNet& net, const FeFunction& target)
{
  Eigen::VectorXd g;
  loss_and_gradient(net, make_training_set(net, target), g);
  return g;
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start)
{
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
    .count();
}

struct Objective
{
  SurrogateNet& net;
  const TrainingSet& data;

  double operator()(const Eigen::VectorXd& p, Eigen::VectorXd& g) const
  {
    net.set_parameters(p);
    return loss_and_gradient(net, data, g);
  }
};

void validate(const TrainConfig& cfg)
{
  if (!(cfg.learning_rate > 0.0) || !(cfg.epsilon > 0.0) || !(cfg.loss_target >= 0.0) ||
      cfg.adam_epochs < 0 || cfg.lbfgs_history < 1 || cfg.lbfgs_max_iterations < 0 ||
      cfg.stagnation_window < 1 || !(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) ||
      !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0))
    throw std::invalid_argument("invalid training configuration");
}

} // namespace

TrainReport train(SurrogateNet& net, const TrainingSet& data, const TrainConfig& cfg)
{
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  TrainReport rep;
  Objective f{net, data};

  Eigen::VectorXd p = net.parameters();
  Eigen::VectorXd g;
  double value = f(p, g);
  rep.initial_loss = value;
  if (!std::isfinite(value)) {
    rep.non_finite = true;
    rep.final_loss = value;
    rep.wall_ms = elapsed_ms(start);
    return rep;
  }

  // Adam, one full-batch step per epoch.
  Eigen::VectorXd m = Eigen::VectorXd::Zero(p.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p.size());
  double b1t = 1.0;
  double b2t = 1.0;
  while (value > cfg.loss_target && rep.adam_epochs < cfg.adam_epochs) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseAbs2();
    b1t *= cfg.beta1;
    b2t *= cfg.beta2;
    const double lr = cfg.learning_rate * std::sqrt(1.0 - b2t) / (1.0 - b1t);
    Eigen::VectorXd trial =
      p - lr * (m.array() / (v.array().sqrt() + cfg.epsilon * std::sqrt(1.0 - b2t))).matrix();
    Eigen::VectorXd gt;
    const double vt = trial.allFinite() ? f(trial, gt) : NAN;
    ++rep.adam_epochs;
    if (!std::isfinite(vt)) {
      rep.non_finite = true;
      break;
    }
    p = std::move(trial);
    g = std::move(gt);
    value = vt;
  }

  // L-BFGS with backtracking Armijo line search.
  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> history{value};
  while (!rep.non_finite && value > cfg.loss_target &&
         rep.lbfgs_iterations < cfg.lbfgs_max_iterations) {
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty())
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
      slope = -g.squaredNorm();
      if (!(slope < 0.0))
        break;
    }
    double step = s_hist.empty() ? std::min(1.0, 1.0 / std::sqrt(g.squaredNorm())) : 1.0;
    constexpr double armijo = 1e-4;
    bool accepted = false;
    Eigen::VectorXd trial;
    Eigen::VectorXd gt;
    double vt = value;
    for (int bt = 0; bt < 40; ++bt) {
      trial = p + step * dir;
      if (!trial.allFinite()) {
        step *= 0.5;
        continue;
      }
      vt = f(trial, gt);
      if (std::isfinite(vt) && vt <= value + armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (s_hist.empty())
        break;
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      continue;
    }
    ++rep.lbfgs_iterations;
    Eigen::VectorXd s = trial - p;
    Eigen::VectorXd y = gt - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * std::sqrt(s.squaredNorm() * y.squaredNorm())) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > cfg.lbfgs_history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    p = std::move(trial);
    g = std::move(gt);
    value = vt;
    history.push_back(value);
    const auto w = static_cast<std::size_t>(cfg.stagnation_window);
    if (history.size() > w) {
      const double old = history[history.size() - 1 - w];
      if ((old - value) < cfg.stagnation_tol * old)
        break;
    }
  }

  net.set_parameters(p);
  rep.final_loss = value;
  rep.reached_target = value <= cfg.loss_target;
  rep.wall_ms = elapsed_ms(start);
  return rep;
}

TrainReport train(SurrogateNet& net, const FeFunction& target, const TrainConfig& cfg)
{
  return train(net, make_training_set(net, target), cfg);
}

void save_checkpoint(const SurrogateNet& net, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write checkpoint " + path.string());
  out << "parafem-surrogate 1\n" << net.dims().size();
  for (int d : net.dims())
    out << ' ' << d;
  out << '\n' << std::setprecision(17);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weight(l);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        out << (j ? " " : "") << w(i, j);
      out << '\n';
    }
    if (l + 1 < net.num_layers()) {
      const auto b = net.bias(l);
      for (Eigen::Index i = 0; i < b.size(); ++i)
        out << (i ? " " : "") << b[i];
      out << '\n';
    }
  }
  if (!out)
    throw std::runtime_error("failed writing checkpoint " + path.string());
}

void load_checkpoint(SurrogateNet& net, const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read checkpoint " + path.string());
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  in >> magic >> version >> count;
  if (magic != "parafem-surrogate" || version != 1)
    throw std::runtime_error("not a surrogate checkpoint: " + path.string());
  std::vector<int> dims(count);
  for (int& d : dims)
    in >> d;
  if (!in || dims != net.dims())
    throw std::runtime_error("checkpoint layer dims do not match the network");
  SurrogateNet tmp(dims, net.domain());
  for (std::size_t l = 0; l < tmp.num_layers(); ++l) {
    auto w = tmp.weight(l);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        in >> w(i, j);
    if (l + 1 < tmp.num_layers()) {
      auto b = tmp.bias(l);
      for (Eigen::Index i = 0; i < b.size(); ++i)
        in >> b[i];
    }
  }
  if (!in)
    throw std::runtime_error("truncated checkpoint " + path.string());
  net.set_parameters(tmp.parameters());
}

} // namespace parafem
