#include <cmath>
#include <limits>
#include <numeric>

#include "citegen/errors.hpp"
#include "citegen/fid_model.hpp"
#include "citegen/text.hpp"

namespace citegen {

namespace {

// Applies fn(a, b) over matching tensors of two same-shaped parameter sets.
template <typename Fn>
void zip(Parameters& a, const Parameters& b, Fn&& fn) {
  std::vector<const Matrix*> others;
  b.visit([&](const std::string&, const Matrix& m) { others.push_back(&m); });
  std::size_t i = 0;
  a.visit([&](const std::string&, Matrix& m) { fn(m, *others[i++]); });
}

double global_norm(const Parameters& p) {
  double total = 0;
  p.visit([&](const std::string&, const Matrix& m) { total += m.squaredNorm(); });
  return std::sqrt(total);
}

class Adam {
 public:
  Adam(const ModelConfig& config, const TrainOptions& options)
      : options_(options), m_(zero_parameters(config)), v_(zero_parameters(config)) {}

  void step(Parameters& params, const Parameters& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
    std::vector<Matrix*> ms, vs;
    m_.visit([&](const std::string&, Matrix& m) { ms.push_back(&m); });
    v_.visit([&](const std::string&, Matrix& m) { vs.push_back(&m); });
    std::size_t i = 0;
    zip(params, grads, [&](Matrix& w, const Matrix& g) {
      Matrix& m = *ms[i];
      Matrix& v = *vs[i];
      ++i;
      m = options_.beta1 * m + (1.0 - options_.beta1) * g;
      v = options_.beta2 * v + (1.0 - options_.beta2) * g.cwiseProduct(g);
      w.array() -= options_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + options_.epsilon);
    });
  }

 private:
  const TrainOptions& options_;
  Parameters m_, v_;
  std::size_t t_ = 0;
};

}  // namespace

double mean_loss(const Parameters& params, const ModelConfig& config,
                 const std::vector<TrainingExample>& examples) {
  if (examples.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0;
  for (const auto& e : examples) total += forward_loss(params, config, e.input, e.target).loss;
  return total / static_cast<double>(examples.size());
}

TrainReport train(Parameters& params, const ModelConfig& config,
                  const std::vector<TrainingExample>& train_set,
                  const std::vector<TrainingExample>& valid_set, const TrainOptions& options) {
  config.validate();
  if (train_set.empty()) throw Error(ErrorCode::kConfigError, "empty training set");

  TrainReport report;
  report.initial_loss = mean_loss(params, config, train_set);

  auto shuffle_rng = make_rng(options.seed, "shuffle");
  auto dropout_rng = make_rng(options.seed, "dropout");
  Adam adam(config, options);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch_size = std::max<std::size_t>(options.batch_size, 1);

  Parameters best = params;
  double best_valid = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    portable_shuffle(order, shuffle_rng);
    double epoch_total = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      Parameters batch_grad = zero_parameters(config);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const auto& example = train_set[order[i]];
        Gradients g = backward(params, config, example.input, example.target, &dropout_rng);
        epoch_total += g.loss;
        zip(batch_grad, g.grads, [&](Matrix& acc, const Matrix& x) { acc += scale * x; });
      }
      const double norm = global_norm(batch_grad);
      if (!std::isfinite(norm)) throw Error(ErrorCode::kNumericalError, "non-finite gradient norm");
      if (options.grad_clip > 0 && norm > options.grad_clip) {
        const double shrink = options.grad_clip / norm;
        batch_grad.visit([&](const std::string&, Matrix& m) { m *= shrink; });
      }
      adam.step(params, batch_grad);
    }
    const double train_loss = epoch_total / static_cast<double>(train_set.size());
    report.train_loss.push_back(train_loss);
    if (!std::isfinite(train_loss) || train_loss > 10.0 * report.initial_loss) {
      throw Error(ErrorCode::kDivergence, "epoch " + std::to_string(epoch + 1) + " train loss " +
                                              std::to_string(train_loss) + " exceeds 10x initial loss " +
                                              std::to_string(report.initial_loss));
    }
    double valid_loss = std::numeric_limits<double>::quiet_NaN();
    if (!valid_set.empty()) {
      valid_loss = mean_loss(params, config, valid_set);
      report.valid_loss.push_back(valid_loss);
      if (valid_loss < best_valid) {
        best_valid = valid_loss;
        best = params;
        report.best_epoch = epoch + 1;
      }
    } else {
      report.best_epoch = epoch + 1;
    }
    if (options.on_epoch) options.on_epoch(epoch + 1, train_loss, valid_loss);
  }
  if (!valid_set.empty() && report.best_epoch > 0) params = std::move(best);
  return report;
}

}  // namespace citegen
