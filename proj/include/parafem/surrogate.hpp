#pragma once

#include "parafem/fields.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace parafem {

/// Fully connected tanh network u_theta with a linear, bias-free output layer,
/// wrapped as d(x) u_theta(x) + h(x) where d is the distance to the boundary
/// and h an optional boundary lift.
class SurrogateNet final : public PointField
{
public:
  using Weights = Eigen::Map<Eigen::MatrixXd>;
  using ConstWeights = Eigen::Map<const Eigen::MatrixXd>;
  using Bias = Eigen::Map<Eigen::VectorXd>;
  using ConstBias = Eigen::Map<const Eigen::VectorXd>;

  /// Zero-initialized network. Throws std::invalid_argument unless dims has at
  /// least two entries, starts with 2, ends with 1 and is positive.
  SurrogateNet(std::vector<int> dims, DomainPtr domain);

  const std::vector<int>& dims() const { return dims_; }
  std::size_t num_layers() const { return dims_.size() - 1; }
  std::size_t num_parameters() const { return static_cast<std::size_t>(params_.size()); }
  const DomainPtr& domain() const { return domain_; }

  /// Flat trainable parameters: per layer the weight matrix (column-major)
  /// followed by the bias, which the output layer does not have.
  const Eigen::VectorXd& parameters() const { return params_; }
  void set_parameters(const Eigen::VectorXd& p);

  Weights weight(std::size_t layer);
  ConstWeights weight(std::size_t layer) const;
  /// Bias of a hidden layer; the output layer has none (std::out_of_range).
  Bias bias(std::size_t layer);
  ConstBias bias(std::size_t layer) const;
  /// Offsets of a layer's weights and bias inside the flat parameter vector.
  Eigen::Index weight_offset(std::size_t layer) const { return w_offset_.at(layer); }
  Eigen::Index bias_offset(std::size_t layer) const { return b_offset_.at(layer); }

  /// Lift h added to the output; an empty function means h = 0.
  void set_lift(ScalarFunction lift) { lift_ = std::move(lift); }
  const ScalarFunction& lift() const { return lift_; }
  bool has_lift() const { return static_cast<bool>(lift_); }

  /// u_theta at the columns of x (2 x n).
  Eigen::RowVectorXd raw(const Eigen::Matrix2Xd& x) const;

  void evaluate(std::span<const Point2> points, std::span<double> out) const override;

private:
  std::vector<int> dims_;
  std::vector<Eigen::Index> w_offset_;
  std::vector<Eigen::Index> b_offset_;
  Eigen::VectorXd params_;
  DomainPtr domain_;
  ScalarFunction lift_;
};

/// Kaiming-normal weights (variance 2 / fan_in) from a seeded generator,
/// zero biases.
SurrogateNet init_net(std::vector<int> dims, std::uint64_t seed, DomainPtr domain);

/// Fixed training points with their distance, lift and target values.
struct TrainingSet
{
  Eigen::Matrix2Xd x;
  Eigen::RowVectorXd distance;
  Eigen::RowVectorXd lift;
  Eigen::RowVectorXd target;

  std::size_t size() const { return static_cast<std::size_t>(x.cols()); }
};

/// All vertices of the target's mesh, with d and h taken from the net.
TrainingSet make_training_set(const SurrogateNet& net, const FeFunction& target);

/// Mean squared mismatch over the training points.
double loss(const SurrogateNet& net, const TrainingSet& data);
double loss(const SurrogateNet& net, const FeFunction& target);

/// Loss and its exact gradient with respect to the flat parameters.
double loss_and_gradient(const SurrogateNet& net, const TrainingSet& data, Eigen::VectorXd& grad);
Eigen::VectorXd gradient(const SurrogateNet& net, const FeFunction& target);

struct TrainConfig
{
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double loss_target = 1e-6;
  int adam_epochs = 20000;
  int lbfgs_history = 10;
  int lbfgs_max_iterations = 1000;
  int stagnation_window = 10;
  double stagnation_tol = 1e-10;
};

struct TrainReport
{
  int adam_epochs = 0;
  int lbfgs_iterations = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double wall_ms = 0.0;
  bool reached_target = false;
  /// Training stopped on a non-finite loss; the last finite iterate is kept.
  bool non_finite = false;
};

/// Adam until the loss target or the epoch cap, then L-BFGS with Armijo
/// backtracking until the target, stagnation or its cap. Starts from the
/// current parameters of `net`.
TrainReport train(SurrogateNet& net, const FeFunction& target, const TrainConfig& cfg = {});
TrainReport train(SurrogateNet& net, const TrainingSet& data, const TrainConfig& cfg = {});

/// Text checkpoint: layer dims followed by each layer's row-major weights and
/// biases.
void save_checkpoint(const SurrogateNet& net, const std::filesystem::path& path);
/// Restores parameters into a net with matching dims.
void load_checkpoint(SurrogateNet& net, const std::filesystem::path& path);

} // namespace parafem
