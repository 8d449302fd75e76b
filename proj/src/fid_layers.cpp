#include "fid_layers.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "citegen/text.hpp"

namespace citegen::layers {

namespace {
constexpr double kNormEpsilon = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluK = 0.044715;
}  // namespace

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluK * x * x * x)));
}

double gelu_derivative(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluK * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluK * x * x);
}

Matrix layer_norm(const Matrix& x, const LayerNormParams& p, LayerNormCache* cache) {
  const auto rows = x.rows();
  const auto d = static_cast<double>(x.cols());
  Matrix xhat(rows, x.cols());
  Eigen::VectorXd rstd(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mean = x.row(r).sum() / d;
    const auto centered = x.row(r).array() - mean;
    const double var = centered.square().sum() / d;
    rstd(r) = 1.0 / std::sqrt(var + kNormEpsilon);
    xhat.row(r) = centered * rstd(r);
  }
  Matrix y = (xhat.array().rowwise() * p.gain.row(0).array()).matrix();
  y.rowwise() += p.bias.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const LayerNormParams& p, const LayerNormCache& cache,
                           LayerNormParams& grad) {
  grad.gain += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  grad.bias += dy.colwise().sum();
  const Matrix dxhat = (dy.array().rowwise() * p.gain.row(0).array()).matrix();
  const auto d = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_dxhat = dxhat.row(r).sum() / d;
    const double mean_dxhat_xhat = dxhat.row(r).dot(cache.xhat.row(r)) / d;
    dx.row(r) = cache.rstd(r) *
                (dxhat.row(r).array() - mean_dxhat - cache.xhat.row(r).array() * mean_dxhat_xhat).matrix();
  }
  return dx;
}

Matrix attention(const Matrix& q_in, const Matrix& kv_in, std::span<const std::uint8_t> key_mask,
                 bool causal, const AttentionParams& p, std::size_t n_heads, AttentionCache* cache,
                 std::uint64_t* score_counter) {
  const auto tq = q_in.rows();
  const auto tk = kv_in.rows();
  const auto d = q_in.cols();
  const auto dh = d / static_cast<Eigen::Index>(n_heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix q = q_in * p.wq;
  q.rowwise() += p.bq.row(0);
  Matrix k = kv_in * p.wk;
  k.rowwise() += p.bk.row(0);
  Matrix v = kv_in * p.wv;
  v.rowwise() += p.bv.row(0);

  Matrix context = Matrix::Zero(tq, d);
  std::vector<Matrix> all_probs;
  if (cache) all_probs.reserve(n_heads);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const auto col = static_cast<Eigen::Index>(h) * dh;
    Matrix scores = (q.middleCols(col, dh) * k.middleCols(col, dh).transpose()) * scale;
    if (score_counter) *score_counter += static_cast<std::uint64_t>(tq * tk);
    Matrix probs = Matrix::Zero(tq, tk);
    for (Eigen::Index i = 0; i < tq; ++i) {
      double top = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < tk; ++j) {
        if (!key_mask[static_cast<std::size_t>(j)] || (causal && j > i)) continue;
        top = std::max(top, scores(i, j));
      }
      if (top == -std::numeric_limits<double>::infinity()) continue;
      double total = 0;
      for (Eigen::Index j = 0; j < tk; ++j) {
        if (!key_mask[static_cast<std::size_t>(j)] || (causal && j > i)) continue;
        const double e = std::exp(scores(i, j) - top);
        probs(i, j) = e;
        total += e;
      }
      probs.row(i) /= total;
    }
    context.middleCols(col, dh) = probs * v.middleCols(col, dh);
    if (cache) all_probs.push_back(std::move(probs));
  }
  Matrix out = context * p.wo;
  out.rowwise() += p.bo.row(0);
  if (cache) {
    cache->q_in = q_in;
    cache->kv_in = kv_in;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(all_probs);
    cache->context = std::move(context);
  }
  return out;
}

void attention_backward(const Matrix& dout, const AttentionParams& p, std::size_t n_heads,
                        const AttentionCache& cache, AttentionParams& grad, Matrix& dq_in,
                        Matrix& dkv_in) {
  const auto d = dout.cols();
  const auto dh = d / static_cast<Eigen::Index>(n_heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  grad.wo.noalias() += cache.context.transpose() * dout;
  grad.bo += dout.colwise().sum();
  const Matrix dcontext = dout * p.wo.transpose();

  Matrix dq = Matrix::Zero(cache.q.rows(), d);
  Matrix dk = Matrix::Zero(cache.k.rows(), d);
  Matrix dv = Matrix::Zero(cache.v.rows(), d);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const auto col = static_cast<Eigen::Index>(h) * dh;
    const Matrix& probs = cache.probs[h];
    const auto dctx = dcontext.middleCols(col, dh);
    const Matrix dprobs = dctx * cache.v.middleCols(col, dh).transpose();
    dv.middleCols(col, dh) = probs.transpose() * dctx;
    const Eigen::VectorXd row_dot = (probs.array() * dprobs.array()).rowwise().sum();
    const Matrix dscores =
        (probs.array() * (dprobs.array().colwise() - row_dot.array())).matrix() * scale;
    dq.middleCols(col, dh) = dscores * cache.k.middleCols(col, dh);
    dk.middleCols(col, dh) = dscores.transpose() * cache.q.middleCols(col, dh);
  }
  grad.wq.noalias() += cache.q_in.transpose() * dq;
  grad.bq += dq.colwise().sum();
  grad.wk.noalias() += cache.kv_in.transpose() * dk;
  grad.bk += dk.colwise().sum();
  grad.wv.noalias() += cache.kv_in.transpose() * dv;
  grad.bv += dv.colwise().sum();
  dq_in = dq * p.wq.transpose();
  dkv_in = dk * p.wk.transpose() + dv * p.wv.transpose();
}

Matrix feed_forward(const Matrix& x, const FeedForwardParams& p, FeedForwardCache* cache) {
  Matrix pre = x * p.w1;
  pre.rowwise() += p.b1.row(0);
  Matrix act = pre.unaryExpr([](double z) { return gelu(z); });
  Matrix out = act * p.w2;
  out.rowwise() += p.b2.row(0);
  if (cache) {
    cache->x = x;
    cache->pre = std::move(pre);
    cache->act = std::move(act);
  }
  return out;
}

Matrix feed_forward_backward(const Matrix& dout, const FeedForwardParams& p,
                             const FeedForwardCache& cache, FeedForwardParams& grad) {
  grad.w2.noalias() += cache.act.transpose() * dout;
  grad.b2 += dout.colwise().sum();
  const Matrix dact = dout * p.w2.transpose();
  const Matrix dpre =
      (dact.array() * cache.pre.unaryExpr([](double z) { return gelu_derivative(z); }).array()).matrix();
  grad.w1.noalias() += cache.x.transpose() * dpre;
  grad.b1 += dpre.colwise().sum();
  return dpre * p.w1.transpose();
}

Matrix dropout(const Matrix& x, double rate, std::mt19937_64* rng, DropoutMask* mask) {
  if (rate <= 0.0 || rng == nullptr) {
    if (mask) mask->scale.resize(0, 0);
    return x;
  }
  Matrix scale(x.rows(), x.cols());
  const double keep = 1.0 - rate;
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    scale.data()[i] = uniform_unit(*rng) < keep ? 1.0 / keep : 0.0;
  }
  Matrix y = (x.array() * scale.array()).matrix();
  if (mask) mask->scale = std::move(scale);
  return y;
}

Matrix dropout_backward(const Matrix& dy, const DropoutMask& mask) {
  if (mask.scale.size() == 0) return dy;
  return (dy.array() * mask.scale.array()).matrix();
}

}  // namespace citegen::layers
