#include <cmath>
#include <stdexcept>
#include <string>

#include "picce/random.hpp"
#include "picce/trainer.hpp"

namespace picce {

namespace {

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double scale,
                                std::mt19937_64& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * standard_normal(rng);
  }
  return m;
}

}  // namespace

std::string_view to_string(Architecture arch) {
  return arch == Architecture::Linear ? "linear" : "mlp";
}

Architecture parse_architecture(std::string_view text) {
  if (text == "linear") return Architecture::Linear;
  if (text == "mlp") return Architecture::OneHiddenLayer;
  throw std::invalid_argument("unknown architecture '" + std::string(text) + "'");
}

ScorerModel::ScorerModel(Architecture arch, std::size_t input_dim, std::size_t hidden_width,
                         std::size_t output_dim, std::uint64_t seed)
    : arch_(arch), input_dim_(input_dim), hidden_width_(hidden_width), output_dim_(output_dim) {
  if (input_dim == 0 || output_dim == 0) throw std::invalid_argument("empty scorer dimensions");
  std::mt19937_64 rng(seed);
  const auto in = static_cast<Eigen::Index>(input_dim);
  const auto out = static_cast<Eigen::Index>(output_dim);
  if (arch == Architecture::Linear) {
    params_.push_back(gaussian_matrix(out, in, std::sqrt(1.0 / static_cast<double>(in)), rng));
    params_.push_back(Eigen::MatrixXd::Zero(out, 1));
    return;
  }
  if (hidden_width == 0) throw std::invalid_argument("hidden width must be positive");
  const auto hidden = static_cast<Eigen::Index>(hidden_width);
  params_.push_back(gaussian_matrix(hidden, in, std::sqrt(2.0 / static_cast<double>(in)), rng));
  params_.push_back(Eigen::MatrixXd::Zero(hidden, 1));
  params_.push_back(gaussian_matrix(out, hidden, std::sqrt(1.0 / static_cast<double>(hidden)), rng));
  params_.push_back(Eigen::MatrixXd::Zero(out, 1));
}

Eigen::MatrixXd ScorerModel::forward(const Eigen::MatrixXd& inputs) const {
  if (arch_ == Architecture::Linear) {
    return (params_[0] * inputs).colwise() + params_[1].col(0);
  }
  const Eigen::MatrixXd hidden =
      ((params_[0] * inputs).colwise() + params_[1].col(0)).cwiseMax(0.0);
  return (params_[2] * hidden).colwise() + params_[3].col(0);
}

Vec ScorerModel::scores(std::span<const double> x) const {
  if (x.size() != input_dim_) throw std::invalid_argument("feature vector has the wrong dimension");
  const Eigen::MatrixXd in = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::MatrixXd out = forward(in);
  return Vec(out.data(), out.data() + out.size());
}

std::vector<Eigen::MatrixXd> ScorerModel::backward(const Eigen::MatrixXd& inputs,
                                                   const Eigen::MatrixXd& score_grad) const {
  std::vector<Eigen::MatrixXd> grads;
  if (arch_ == Architecture::Linear) {
    grads.push_back(score_grad * inputs.transpose());
    grads.push_back(score_grad.rowwise().sum());
    return grads;
  }
  const Eigen::MatrixXd pre = (params_[0] * inputs).colwise() + params_[1].col(0);
  const Eigen::MatrixXd hidden = pre.cwiseMax(0.0);
  const Eigen::MatrixXd d_hidden =
      (params_[2].transpose() * score_grad).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  grads.push_back(d_hidden * inputs.transpose());
  grads.push_back(d_hidden.rowwise().sum());
  grads.push_back(score_grad * hidden.transpose());
  grads.push_back(score_grad.rowwise().sum());
  return grads;
}

bool ScorerModel::finite() const {
  for (const auto& p : params_) {
    if (!p.allFinite()) return false;
  }
  return true;
}

}  // namespace picce
