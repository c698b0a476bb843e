#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hypkg {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

// First/second moment buffers for a fixed list of parameter blocks.
// The step counter drives the bias correction.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const std::vector<std::size_t>& block_sizes) {
    for (std::size_t n : block_sizes) {
      m_.emplace_back(n, 0.0);
      v_.emplace_back(n, 0.0);
    }
  }

  long step_count() const { return step_; }
  std::size_t block_count() const { return m_.size(); }

  // One bias-corrected Adam update over all blocks. Weight decay is added to
  // the gradient before the moment updates (g <- g + wd * theta).
  void step(const std::vector<std::pair<double*, const double*>>& blocks,
            const std::vector<std::size_t>& sizes, const AdamHyper& hyper) {
    if (blocks.size() != m_.size() || sizes.size() != m_.size()) {
      throw std::invalid_argument("AdamState: block count mismatch");
    }
    step_ += 1;
    const double bias1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step_));
    const double bias2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step_));
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      double* theta = blocks[b].first;
      const double* grad = blocks[b].second;
      if (sizes[b] != m_[b].size()) {
        throw std::invalid_argument("AdamState: block size mismatch");
      }
      double* m = m_[b].data();
      double* v = v_[b].data();
      for (std::size_t i = 0; i < sizes[b]; ++i) {
        double g = grad[i];
        if (!std::isfinite(g)) {
          throw std::runtime_error("adam_step: non-finite gradient");
        }
        g += hyper.weight_decay * theta[i];
        m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
        v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        theta[i] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
      }
    }
  }

 private:
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long step_ = 0;
};

}  // namespace hypkg
